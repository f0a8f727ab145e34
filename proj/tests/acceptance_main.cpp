// Acceptance gate: every release-blocking property in one binary, one
// verdict line each. Returns nonzero if any gating check fails. The final
// check exercises an external checkpoint through the Python driver and is
// advisory: it is skipped unless DISTCMA_EXTERNAL_MODEL is set and never
// gates.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "distcma/analysis.hpp"
#include "distcma/dataset.hpp"
#include "distcma/effects.hpp"
#include "distcma/lexicon.hpp"
#include "distcma/overlap_model.hpp"
#include "distcma/reference_stats.hpp"
#include "distcma/rng.hpp"
#include "distcma/stats.hpp"
#include "distcma/toy_model.hpp"
#include "test_util.hpp"

using namespace distcma;

namespace {

struct StudentTReferenceRow {
  double df;
  double t;
  double sf;
};

#include "student_t_reference.inc"

constexpr std::size_t kReferenceRows =
    sizeof(kStudentTReference) / sizeof(kStudentTReference[0]);

std::vector<MatchedSet> paper_scale_dataset() {
  static const std::vector<MatchedSet> sets = [] {
    const Lexicon lex = load_lexicon(testutil::seed_lexicon_path());
    return generate_pairs(lex, 0, 164);
  }();
  return sets;
}

LabelDistribution random_distribution(Rng& rng) {
  const double a = rng.uniform_real(1e-6, 1.0);
  const double b = rng.uniform_real(1e-6, 1.0);
  const double c = rng.uniform_real(1e-6, 1.0);
  const double s = a + b + c;
  return {a / s, b / s, c / s};
}

// Nearest one-significant-digit representation of p, used to decide whether
// a computed p-value "rounds onto" a published one-digit upper bound.
double round_one_digit(double p) {
  if (p <= 0.0) return 0.0;
  const int e = static_cast<int>(std::floor(std::log10(p)));
  int m = static_cast<int>(std::lround(p / std::pow(10.0, e)));
  if (m >= 10) return std::pow(10.0, e + 1);
  return m * std::pow(10.0, e);
}

class ConstantEntailment : public ModelAdapter {
 public:
  ModelMeta meta() const override {
    ModelMeta m;
    m.name = "constant-entailment";
    m.n_layers = 1;
    m.hidden_size = 1;
    m.n_parameters = 1;
    m.vocab_size = 1;
    m.thread_safe = true;
    return m;
  }
  LabelDistribution predict(const NliPair&) const override {
    return {0.98, 0.01, 0.01};
  }
  std::pair<LabelDistribution, ActivationSnapshot> predict_with_capture(
      const NliPair& pair, const MediatorSpec& spec) const override {
    ActivationSnapshot snap;
    snap.coords = spec.coords;
    snap.seq_len = 1;
    snap.values.assign(spec.coords.size(), {0.0});
    return {predict(pair), snap};
  }
  LabelDistribution predict_with_patch(const NliPair& pair,
                                       const ActivationSnapshot&,
                                       Alignment) const override {
    return predict(pair);
  }
};

// ---- the gating checks ----

bool check_decomposition(std::string& detail) {
  const ToyModel toy(0);
  const auto sets = paper_scale_dataset();
  const auto meta = toy.meta();
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto& s = sets[rng.uniform_index(sets.size())];
    std::vector<ActivationCoord> coords;
    const std::size_t n_coords = 1 + rng.uniform_index(3);
    while (coords.size() < n_coords) {
      ActivationCoord c{static_cast<int>(rng.uniform_index(meta.n_layers)),
                        static_cast<int>(rng.uniform_index(meta.hidden_size))};
      bool dup = false;
      for (const auto& existing : coords) dup |= existing == c;
      if (!dup) coords.push_back(c);
    }
    const auto rec = natural_indirect_effect(toy, s.control, s.interventions[0],
                                             s.match_id, MediatorSpec(coords),
                                             Alignment::min_length);
    worst = std::max(worst, std::abs(rec.te - (*rec.nie + *rec.nde)));
  }
  std::ostringstream os;
  os << "worst |te - (nie + nde)| = " << worst;
  detail = os.str();
  return worst < 1e-9;
}

bool check_reference_arithmetic(std::string& detail) {
  std::ostringstream os;
  bool ok = true;
  for (int i = 0; i < kReferenceModelCount; ++i) {
    const auto& row = kReferenceModelStats[i];
    const double t = row.mean_te / (row.sd_te / std::sqrt(row.n));
    const double p = student_t_sf(t, row.n - 1);
    if (std::abs(t - row.t_reported) > 0.06) {
      os << row.name << ": recomputed t " << t << " vs reported " << row.t_reported
         << "; ";
      ok = false;
    }
    if (row.p_bound > 0.0) {
      const bool inside = p < row.p_bound;
      const bool rounds_on = round_one_digit(p) <= row.p_bound * (1.0 + 1e-12);
      if (!inside && !rounds_on) {
        os << row.name << ": p " << p << " misses bound " << row.p_bound << "; ";
        ok = false;
      }
    } else if (std::abs(p - row.p_value) > 0.002) {
      os << row.name << ": p " << p << " vs reported " << row.p_value << "; ";
      ok = false;
    }
  }
  detail = ok ? "6 published rows reproduced" : os.str();
  return ok;
}

bool check_planted_mediator(std::string& detail) {
  const ToyModel toy(0);
  const auto sets = paper_scale_dataset();
  const auto star = MediatorSpec::single(toy.star_coord());
  const auto dead = MediatorSpec::single(toy.dead_coord());

  double worst_nie_gap = 0.0, worst_nde = 0.0, worst_dead = 0.0;
  for (const auto& s : sets) {
    const auto at_star = natural_indirect_effect(
        toy, s.control, s.interventions[0], s.match_id, star, Alignment::min_length);
    worst_nie_gap = std::max(worst_nie_gap, std::abs(*at_star.nie - at_star.te));
    worst_nde = std::max(worst_nde, std::abs(*at_star.nde));
    const auto at_dead = natural_indirect_effect(
        toy, s.control, s.interventions[0], s.match_id, dead, Alignment::min_length);
    worst_dead = std::max(worst_dead, std::abs(*at_dead.nie));
  }

  const auto table = neuron_sweep(toy, sets);
  double star_mag = 0.0, runner_up = 0.0;
  for (const auto& e : table.entries) {
    if (e.coord == toy.star_coord()) star_mag = std::abs(e.mean_nie);
    else runner_up = std::max(runner_up, std::abs(e.mean_nie));
  }

  std::ostringstream os;
  os << "max |nie-te| " << worst_nie_gap << ", max |nde| " << worst_nde
     << ", max dead |nie| " << worst_dead << ", sweep margin "
     << star_mag - runner_up;
  detail = os.str();
  return worst_nie_gap < 1e-9 && worst_nde < 1e-9 && worst_dead == 0.0 &&
         star_mag > runner_up;
}

bool check_overlap_null(std::string& detail) {
  const OverlapBaseline overlap;
  const auto sets = paper_scale_dataset();
  std::vector<double> tes;
  for (const auto& s : sets) {
    tes.push_back(
        total_effect(overlap, s.control, s.interventions[0], s.match_id).te);
    if (tes.back() != 0.0) {
      detail = "nonzero total effect on " + s.match_id;
      return false;
    }
  }
  const TTestResult r = one_sample_t_lenient(tes, 0.05);
  std::ostringstream os;
  os << "all " << tes.size() << " effects exactly 0, p " << r.p_value_one_sided
     << ", reject " << (r.reject_h0 ? "yes" : "no");
  detail = os.str();
  return r.mean == 0.0 && !r.reject_h0 && r.p_value_one_sided == 0.5;
}

bool check_odds_semantics(std::string& detail) {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto d1 = random_distribution(rng);
    const auto d2 = random_distribution(rng);
    const OddsValue y1 = odds_non_entailment(d1);
    const OddsValue y2 = odds_non_entailment(d2);
    const double te = log_odds_ratio(y2, y1);
    const bool ok = (y2.value > y1.value && te > 0.0) ||
                    (y2.value < y1.value && te < 0.0) ||
                    (y2.value == y1.value && te == 0.0);
    if (!ok) {
      std::ostringstream os;
      os << "sign mismatch at trial " << trial << ": odds " << y1.value << " -> "
         << y2.value << ", te " << te;
      detail = os.str();
      return false;
    }
  }
  // Fixed vignettes: mass moving off entailment is positive, onto it
  // negative, unchanged zero.
  const OddsValue confident = odds_non_entailment({0.9, 0.07, 0.03});
  const OddsValue shaken = odds_non_entailment({0.4, 0.45, 0.15});
  if (!(log_odds_ratio(shaken, confident) > 0.0) ||
      !(log_odds_ratio(confident, shaken) < 0.0) ||
      log_odds_ratio(confident, confident) != 0.0) {
    detail = "vignette sign check failed";
    return false;
  }
  detail = "1000 randomized pairs plus fixed vignettes keep sign semantics";
  return true;
}

bool check_depth_grouping(std::string& detail) {
  std::ostringstream os;
  bool ok = true;

  const double d48 = layer_depth(35, 48);
  if (std::abs(d48 - 0.729) > 5e-4 || depth_group(d48) != DepthGroup::final) {
    os << "layer 35/48: depth " << d48 << " group " << to_string(depth_group(d48))
       << "; ";
    ok = false;
  }
  const double d24 = layer_depth(13, 24);
  if (std::abs(d24 - 0.542) > 5e-4 || depth_group(d24) != DepthGroup::middle) {
    os << "layer 13/24: depth " << d24 << " group " << to_string(depth_group(d24))
       << "; ";
    ok = false;
  }
  for (int n_layers : {12, 24, 48}) {
    int counts[3] = {0, 0, 0};
    for (int layer = 0; layer < n_layers; ++layer) {
      counts[static_cast<int>(depth_group(layer_depth(layer, n_layers)))]++;
    }
    if (counts[0] + counts[1] + counts[2] != n_layers || counts[0] == 0 ||
        counts[1] == 0 || counts[2] == 0) {
      os << n_layers << " layers split " << counts[0] << "/" << counts[1] << "/"
         << counts[2] << "; ";
      ok = false;
    }
  }
  detail = ok ? "0.729 -> final, 0.542 -> middle, thirds partition 12/24/48 layers"
              : os.str();
  return ok;
}

bool check_dataset_contract(std::string& detail) {
  const Lexicon lex = load_lexicon(testutil::seed_lexicon_path());
  const auto sets = generate_pairs(lex, 0, 164);

  std::size_t controls = 0, interventions = 0;
  for (const auto& s : sets) {
    s.validate();
    ++controls;
    interventions += s.interventions.size();
    if (s.control.label != PairLabel::entailment) {
      detail = "control " + s.control.pair_id + " not labeled entailment";
      return false;
    }
    for (const auto& iv : s.interventions) {
      if (iv.label != PairLabel::non_entailment) {
        detail = "intervention " + iv.pair_id + " not labeled non_entailment";
        return false;
      }
    }
    for (const auto* pair : {&s.control, &s.interventions[0]}) {
      for (const auto& q : lex.quantifier_blocklist) {
        if (contains_word(pair->premise, q) || contains_word(pair->hypothesis, q)) {
          detail = "blocklisted token '" + q + "' in " + pair->pair_id;
          return false;
        }
      }
    }
  }
  if (controls != 164 || interventions != 164) {
    detail = "unbalanced groups";
    return false;
  }
  if (dataset_to_jsonl(sets) != dataset_to_jsonl(generate_pairs(lex, 0, 164))) {
    detail = "regeneration with the same seed differs";
    return false;
  }
  std::ostringstream os;
  os << controls << " + " << interventions
     << " pairs, labels follow predicate type, no blocklist leaks, "
        "regeneration byte-identical";
  detail = os.str();
  return true;
}

bool check_constant_stub_accuracy(std::string& detail) {
  const ConstantEntailment stub;
  const auto acc = group_accuracy(stub, paper_scale_dataset());
  char control[16], intervention[16];
  std::snprintf(control, sizeof(control), "%.2f", acc.control_pct);
  std::snprintf(intervention, sizeof(intervention), "%.2f", acc.intervention_pct);
  detail = std::string("control ") + control + ", intervention " + intervention;
  return std::string(control) == "100.00" && std::string(intervention) == "0.00";
}

bool check_t_numerics(std::string& detail) {
  for (double df : {1.0, 5.0, 163.0}) {
    if (student_t_sf(0.0, df) != 0.5) {
      detail = "p(0) not exactly 0.5 at df " + std::to_string(df);
      return false;
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < kReferenceRows; ++i) {
    const auto& row = kStudentTReference[i];
    worst = std::max(worst, std::abs(student_t_sf(row.t, row.df) - row.sf));
  }
  std::ostringstream os;
  os << "p(0) exact at df 1/5/163; worst table deviation " << worst << " over "
     << kReferenceRows << " rows";
  detail = os.str();
  return worst < 1e-8;
}

// ---- the advisory external check ----

int check_external(std::string& detail) {
  const char* model = std::getenv("DISTCMA_EXTERNAL_MODEL");
  if (model == nullptr || std::string(model).empty()) {
    detail = "set DISTCMA_EXTERNAL_MODEL to run an NLI checkpoint end to end";
    return -1;  // skip
  }
  testutil::TempDir tmp;
  const auto out = tmp / "external";
  const std::string cmd = std::string("python3 -m distcma te --model \"") + model +
                          "\" --pairs 8 --out " + out.string() + " --lexicon " +
                          testutil::seed_lexicon_path().string();
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (code != 0) {
    detail = std::string("driver exited with ") + std::to_string(code);
    return 0;
  }
  if (!std::filesystem::exists(out / "ttest.csv")) {
    detail = "run succeeded but wrote no ttest.csv";
    return 0;
  }
  const std::string ttest = testutil::read_file(out / "ttest.csv");
  detail = std::string(model) + " produced " + std::to_string(ttest.size()) +
           " bytes of summary";
  return 1;
}

}  // namespace

int main() {
  using Check = std::function<bool(std::string&)>;
  const std::vector<std::pair<std::string, Check>> checks = {
      {"three-way effect decomposition holds to 1e-9 over 1000 randomized "
       "mediations",
       check_decomposition},
      {"published checkpoint summary rows reproduce their t and p values",
       check_reference_arithmetic},
      {"planted mediator carries the whole effect and tops the sweep",
       check_planted_mediator},
      {"lexical-overlap baseline measures exactly zero effect everywhere",
       check_overlap_null},
      {"log-odds effects keep sign semantics on randomized distributions",
       check_odds_semantics},
      {"relative depth assigns layers to the published thirds",
       check_depth_grouping},
      {"generated dataset meets the matched-pair contract and regenerates "
       "byte-identically",
       check_dataset_contract},
      {"constant-entailment stub scores the (100.00, 0.00) accuracy pattern",
       check_constant_stub_accuracy},
      {"t-distribution tail matches the frozen high-precision table",
       check_t_numerics},
  };

  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : checks) {
    ++index;
    std::string detail;
    bool ok = false;
    try {
      ok = check(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << index << ". " << name << " ("
              << detail << ")\n";
    if (!ok) ++failures;
  }

  {
    std::string detail;
    int verdict = -2;
    try {
      verdict = check_external(detail);
    } catch (const std::exception& e) {
      verdict = 0;
      detail = std::string("exception: ") + e.what();
    }
    const char* tag = verdict == 1 ? "[PASS] " : verdict == -1 ? "[SKIP] " : "[FAIL] ";
    std::cout << tag << ++index
              << ". external checkpoint drives the pipeline end to end, advisory ("
              << detail << ")\n";
  }

  std::cout << (failures == 0 ? "acceptance: all gating checks passed\n"
                              : "acceptance: " + std::to_string(failures) +
                                    " gating check(s) failed\n");
  return failures == 0 ? 0 : 1;
}
