#pragma once

#include <optional>
#include <string>
#include <vector>

#include "distcma/dataset.hpp"
#include "distcma/model.hpp"
#include "distcma/types.hpp"

namespace distcma {

// Floor applied to both probabilities before forming the odds ratio, so a
// saturated classifier output yields a finite, flagged value instead of a
// silent infinity.
inline constexpr double kOddsEpsilon = 1e-12;

// Odds of non-entailment, with the probabilities it was formed from.
struct OddsValue {
  double value = 0.0;
  double p_non_entailment = 0.0;
  double p_entailment = 0.0;
  bool clamped = false;
};

OddsValue odds_non_entailment(const LabelDistribution& d, double eps = kOddsEpsilon);

// log(numerator.value / denominator.value), the shared form of all three
// effect measures.
double log_odds_ratio(const OddsValue& numerator, const OddsValue& denominator);

// One matched pair's effects. TE-only records leave the mediator fields
// unset; full records carry all three effects and satisfy te == nie + nde
// within 1e-9.
struct EffectRecord {
  std::string match_id;
  double te = 0.0;
  std::optional<double> nie;
  std::optional<double> nde;
  OddsValue y_null;
  OddsValue y_swap;
  std::optional<OddsValue> y_swap_m_null;
  std::optional<MediatorSpec> mediator;
  std::optional<Alignment> alignment;

  bool any_clamped() const;
  // Semicolon-joined names of the clamped odds, empty when none.
  std::string clamp_flags() const;
};

// Throws std::invalid_argument unless the intervention pair is a
// predicate-swap image of the control (same subjects, same hypothesis
// subject, opposite predicate type).
void require_swap_image(const NliPair& control, const NliPair& intervention);

// te = log(y_swap / y_null) from two plain forward passes.
EffectRecord total_effect(const ModelAdapter& model, const NliPair& control,
                          const NliPair& intervention, const std::string& match_id);

// Captures the mediator on the control pair, patches it into the
// intervention pair, and fills in all three effects. Throws
// std::logic_error if the decomposition identity fails, which would mean
// the three odds were not computed from the stipulated three forward
// passes.
EffectRecord natural_indirect_effect(const ModelAdapter& model, const NliPair& control,
                                     const NliPair& intervention,
                                     const std::string& match_id,
                                     const MediatorSpec& spec, Alignment alignment);

struct EffectSummary {
  double mean_te = 0.0;
  double sd_te = 0.0;
  std::optional<double> mean_nie;
  std::optional<double> sd_nie;
  std::optional<double> mean_nde;
  std::optional<double> sd_nde;
  std::size_t n = 0;
  bool single_sample = false;  // n == 1: sd reported as 0
};

// Means and sample standard deviations over records computed under one
// mediator and alignment. Throws on an empty list or mixed specs.
EffectSummary mean_effects(const std::vector<EffectRecord>& records);

// CSV/JSONL serialization with columns match_id, te, nie, nde, y_null,
// y_swap, y_swap_m_null, clamp_flags, mediator_layer, mediator_neurons,
// alignment_mode.
std::string effect_records_csv(const std::vector<EffectRecord>& records);
std::string effect_records_jsonl(const std::vector<EffectRecord>& records);

// Round-trip double formatting used by every machine-readable output.
std::string format_double(double v);

}  // namespace distcma
