#include "distcma/effects.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "distcma/stats.hpp"

namespace distcma {

OddsValue odds_non_entailment(const LabelDistribution& d, double eps) {
  d.validate();
  OddsValue odds;
  double p_ne = d.p_non_entailment();
  double p_e = d.p_entailment;
  if (p_e < eps) {
    p_e = eps;
    odds.clamped = true;
  }
  if (p_ne < eps) {
    p_ne = eps;
    odds.clamped = true;
  }
  // Keep the pair consistent with a clamped complement.
  if (p_e > 1.0 - eps) {
    p_e = 1.0 - eps;
    odds.clamped = true;
  }
  if (p_ne > 1.0 - eps) {
    p_ne = 1.0 - eps;
    odds.clamped = true;
  }
  odds.p_non_entailment = p_ne;
  odds.p_entailment = p_e;
  odds.value = p_ne / p_e;
  return odds;
}

double log_odds_ratio(const OddsValue& numerator, const OddsValue& denominator) {
  return std::log(numerator.value) - std::log(denominator.value);
}

bool EffectRecord::any_clamped() const {
  return y_null.clamped || y_swap.clamped ||
         (y_swap_m_null.has_value() && y_swap_m_null->clamped);
}

std::string EffectRecord::clamp_flags() const {
  std::string flags;
  auto add = [&](const char* name) {
    if (!flags.empty()) flags += ';';
    flags += name;
  };
  if (y_null.clamped) add("y_null");
  if (y_swap.clamped) add("y_swap");
  if (y_swap_m_null.has_value() && y_swap_m_null->clamped) add("y_swap_m_null");
  return flags;
}

void require_swap_image(const NliPair& control, const NliPair& intervention) {
  if (control.dp1 != intervention.dp1 || control.dp2 != intervention.dp2 ||
      control.hypothesis_subject != intervention.hypothesis_subject) {
    throw std::invalid_argument(
        "intervention pair is not a predicate swap of the control: subjects differ");
  }
  if (control.predicate.distributivity_type ==
      intervention.predicate.distributivity_type) {
    throw std::invalid_argument(
        "intervention pair is not a predicate swap of the control: same "
        "predicate type");
  }
}

EffectRecord total_effect(const ModelAdapter& model, const NliPair& control,
                          const NliPair& intervention, const std::string& match_id) {
  require_swap_image(control, intervention);
  EffectRecord rec;
  rec.match_id = match_id;
  rec.y_null = odds_non_entailment(model.predict(control));
  rec.y_swap = odds_non_entailment(model.predict(intervention));
  rec.te = log_odds_ratio(rec.y_swap, rec.y_null);
  return rec;
}

EffectRecord natural_indirect_effect(const ModelAdapter& model, const NliPair& control,
                                     const NliPair& intervention,
                                     const std::string& match_id,
                                     const MediatorSpec& spec, Alignment alignment) {
  require_swap_image(control, intervention);
  const auto meta = model.meta();
  spec.validate(meta.n_layers, meta.hidden_size);

  const auto [null_dist, snapshot] = model.predict_with_capture(control, spec);
  const auto swap_dist = model.predict(intervention);
  const auto patched_dist = model.predict_with_patch(intervention, snapshot, alignment);

  EffectRecord rec;
  rec.match_id = match_id;
  rec.mediator = spec;
  rec.alignment = alignment;
  rec.y_null = odds_non_entailment(null_dist);
  rec.y_swap = odds_non_entailment(swap_dist);
  rec.y_swap_m_null = odds_non_entailment(patched_dist);
  rec.te = log_odds_ratio(rec.y_swap, rec.y_null);
  rec.nie = log_odds_ratio(rec.y_swap, *rec.y_swap_m_null);
  rec.nde = log_odds_ratio(*rec.y_swap_m_null, rec.y_null);
  if (std::fabs(rec.te - (*rec.nie + *rec.nde)) >= 1e-9) {
    throw std::logic_error("effect decomposition identity violated for match '" +
                           match_id + "'");
  }
  return rec;
}

EffectSummary mean_effects(const std::vector<EffectRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("mean_effects: no records");
  }
  const auto& first = records.front();
  for (const auto& rec : records) {
    if (rec.mediator != first.mediator || rec.alignment != first.alignment) {
      throw std::invalid_argument(
          "mean_effects: records mix different mediator specs");
    }
  }

  EffectSummary s;
  s.n = records.size();
  s.single_sample = records.size() == 1;

  std::vector<double> te, nie, nde;
  te.reserve(records.size());
  for (const auto& rec : records) {
    te.push_back(rec.te);
    if (rec.nie.has_value()) nie.push_back(*rec.nie);
    if (rec.nde.has_value()) nde.push_back(*rec.nde);
  }
  s.mean_te = sample_mean(te);
  s.sd_te = sample_sd(te);
  if (!nie.empty()) {
    if (nie.size() != records.size()) {
      throw std::invalid_argument(
          "mean_effects: records mix TE-only and full entries");
    }
    s.mean_nie = sample_mean(nie);
    s.sd_nie = sample_sd(nie);
    s.mean_nde = sample_mean(nde);
    s.sd_nde = sample_sd(nde);
  }
  return s;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

// mediator_layer is the common layer, or -1 when the spec straddles layers
// (mediator_neurons then spells out layer:neuron pairs).
std::string mediator_layer_field(const MediatorSpec& spec) {
  const int layer = spec.coords.front().layer;
  for (const auto& c : spec.coords) {
    if (c.layer != layer) return "-1";
  }
  return std::to_string(layer);
}

std::string mediator_neurons_field(const MediatorSpec& spec) {
  const bool uniform = mediator_layer_field(spec) != "-1";
  std::string out;
  for (const auto& c : spec.coords) {
    if (!out.empty()) out += ';';
    if (uniform) {
      out += std::to_string(c.neuron);
    } else {
      out += std::to_string(c.layer) + ":" + std::to_string(c.neuron);
    }
  }
  return out;
}

}  // namespace

std::string effect_records_csv(const std::vector<EffectRecord>& records) {
  std::string out =
      "match_id,te,nie,nde,y_null,y_swap,y_swap_m_null,clamp_flags,"
      "mediator_layer,mediator_neurons,alignment_mode\n";
  for (const auto& rec : records) {
    out += rec.match_id;
    out += ',' + format_double(rec.te);
    out += ',' + (rec.nie ? format_double(*rec.nie) : std::string());
    out += ',' + (rec.nde ? format_double(*rec.nde) : std::string());
    out += ',' + format_double(rec.y_null.value);
    out += ',' + format_double(rec.y_swap.value);
    out += ',' + (rec.y_swap_m_null ? format_double(rec.y_swap_m_null->value)
                                    : std::string());
    out += ',' + rec.clamp_flags();
    out += ',' + (rec.mediator ? mediator_layer_field(*rec.mediator) : std::string());
    out += ',' + (rec.mediator ? mediator_neurons_field(*rec.mediator) : std::string());
    out += ',' + (rec.alignment ? to_string(*rec.alignment) : std::string());
    out += '\n';
  }
  return out;
}

std::string effect_records_jsonl(const std::vector<EffectRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    nlohmann::ordered_json row;
    row["match_id"] = rec.match_id;
    row["te"] = rec.te;
    row["nie"] = rec.nie ? nlohmann::json(*rec.nie) : nlohmann::json();
    row["nde"] = rec.nde ? nlohmann::json(*rec.nde) : nlohmann::json();
    row["y_null"] = rec.y_null.value;
    row["y_swap"] = rec.y_swap.value;
    row["y_swap_m_null"] =
        rec.y_swap_m_null ? nlohmann::json(rec.y_swap_m_null->value) : nlohmann::json();
    row["clamp_flags"] = rec.clamp_flags();
    row["mediator_layer"] =
        rec.mediator ? nlohmann::json(mediator_layer_field(*rec.mediator))
                     : nlohmann::json();
    row["mediator_neurons"] =
        rec.mediator ? nlohmann::json(mediator_neurons_field(*rec.mediator))
                     : nlohmann::json();
    row["alignment_mode"] =
        rec.alignment ? nlohmann::json(to_string(*rec.alignment)) : nlohmann::json();
    out += row.dump();
    out += '\n';
  }
  return out;
}

}  // namespace distcma
