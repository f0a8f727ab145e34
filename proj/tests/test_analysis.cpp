#include <doctest.h>

#include <stdexcept>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <vector>

#include "distcma/analysis.hpp"
#include "distcma/overlap_model.hpp"
#include "distcma/toy_model.hpp"
#include "test_util.hpp"

using namespace distcma;

namespace {

std::vector<MatchedSet> sample_sets(std::size_t n, std::uint64_t seed = 0) {
  static const Lexicon lex = load_lexicon(testutil::seed_lexicon_path());
  return generate_pairs(lex, seed, n);
}

// Fixed-output adapter used for the accuracy and sweep edge cases.
class ConstantModel : public ModelAdapter {
 public:
  explicit ConstantModel(LabelDistribution dist) : dist_(dist) {}

  ModelMeta meta() const override {
    ModelMeta m;
    m.name = "constant";
    m.n_layers = 1;
    m.hidden_size = 2;
    m.n_parameters = 1;
    m.vocab_size = 1;
    m.thread_safe = true;
    return m;
  }
  LabelDistribution predict(const NliPair&) const override { return dist_; }
  std::pair<LabelDistribution, ActivationSnapshot> predict_with_capture(
      const NliPair&, const MediatorSpec& spec) const override {
    ActivationSnapshot snap;
    snap.coords = spec.coords;
    snap.seq_len = 4;
    snap.values.assign(spec.coords.size(), std::vector<double>(4, 0.0));
    return {dist_, snap};
  }
  LabelDistribution predict_with_patch(const NliPair&, const ActivationSnapshot&,
                                       Alignment) const override {
    return dist_;
  }

 private:
  LabelDistribution dist_;
};

// Delegates to a toy model while declaring itself not thread-safe and
// recording how many calls overlap in time.
class SerializationProbe : public ModelAdapter {
 public:
  SerializationProbe() : toy_(0) {}

  ModelMeta meta() const override {
    ModelMeta m = toy_.meta();
    m.thread_safe = false;
    return m;
  }
  LabelDistribution predict(const NliPair& pair) const override {
    Guard g(*this);
    return toy_.predict(pair);
  }
  std::pair<LabelDistribution, ActivationSnapshot> predict_with_capture(
      const NliPair& pair, const MediatorSpec& spec) const override {
    Guard g(*this);
    return toy_.predict_with_capture(pair, spec);
  }
  LabelDistribution predict_with_patch(const NliPair& pair,
                                       const ActivationSnapshot& snapshot,
                                       Alignment alignment) const override {
    Guard g(*this);
    return toy_.predict_with_patch(pair, snapshot, alignment);
  }

  int max_concurrency() const { return max_seen_.load(); }

 private:
  struct Guard {
    explicit Guard(const SerializationProbe& p) : probe(p) {
      const int now = probe.active_.fetch_add(1) + 1;
      int seen = probe.max_seen_.load();
      while (now > seen && !probe.max_seen_.compare_exchange_weak(seen, now)) {
      }
    }
    ~Guard() { probe.active_.fetch_sub(1); }
    const SerializationProbe& probe;
  };

  ToyModel toy_;
  mutable std::atomic<int> active_{0};
  mutable std::atomic<int> max_seen_{0};
};

bool tables_equal(const NeuronEffectTable& a, const NeuronEffectTable& b) {
  if (a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const auto& x = a.entries[i];
    const auto& y = b.entries[i];
    if (!(x.coord == y.coord) || x.mean_nie != y.mean_nie || x.sd_nie != y.sd_nie ||
        x.n != y.n || x.n_clamped != y.n_clamped) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("the sweep agrees with direct per-coordinate effect averages") {
  const ToyModel toy(0);
  const auto sets = sample_sets(10);

  SweepOptions options;
  options.coords = std::vector<ActivationCoord>{{1, 5}, {2, 6}, {0, 4}};
  const NeuronEffectTable table = neuron_sweep(toy, sets, options);
  REQUIRE(table.entries.size() == 3);

  for (const auto& entry : table.entries) {
    std::vector<EffectRecord> records;
    for (const auto& s : sets) {
      records.push_back(natural_indirect_effect(
          toy, s.control, s.interventions[0], s.match_id,
          MediatorSpec::single(entry.coord), Alignment::min_length));
    }
    const EffectSummary direct = mean_effects(records);
    CHECK(entry.mean_nie == *direct.mean_nie);
    CHECK(entry.sd_nie == *direct.sd_nie);
    CHECK(entry.n == records.size());
  }
}

TEST_CASE("the planted mediator tops the sweep and the dead coordinate is inert") {
  const ToyModel toy(0);
  const auto sets = sample_sets(12);
  const NeuronEffectTable table = neuron_sweep(toy, sets);
  REQUIRE(table.entries.size() ==
          static_cast<std::size_t>(table.n_layers * table.hidden_size));

  const auto star = toy.star_coord();
  const auto dead = toy.dead_coord();
  double star_mag = 0.0, runner_up = 0.0;
  for (const auto& e : table.entries) {
    if (e.coord == star) {
      star_mag = std::abs(e.mean_nie);
    } else {
      runner_up = std::max(runner_up, std::abs(e.mean_nie));
    }
    if (e.coord == dead) CHECK(e.mean_nie == 0.0);
  }
  CHECK(star_mag > runner_up);
}

TEST_CASE("sweeping the overlap baseline yields exact zeros everywhere") {
  const OverlapBaseline overlap;
  const auto sets = sample_sets(6);
  const NeuronEffectTable table = neuron_sweep(overlap, sets);
  CHECK(table.entries.size() == 8);
  for (const auto& e : table.entries) {
    CHECK(e.mean_nie == 0.0);
    CHECK(e.sd_nie == 0.0);
  }
}

TEST_CASE("worker count does not change sweep results") {
  const ToyModel toy(0);
  const auto sets = sample_sets(8);
  SweepOptions serial;
  serial.jobs = 1;
  SweepOptions parallel;
  parallel.jobs = 4;
  CHECK(tables_equal(neuron_sweep(toy, sets, serial),
                     neuron_sweep(toy, sets, parallel)));
}

TEST_CASE("adapters that are not thread-safe are never called concurrently") {
  const SerializationProbe probe;
  const auto sets = sample_sets(4);
  SweepOptions options;
  options.jobs = 4;
  const auto table = neuron_sweep(probe, sets, options);
  CHECK(table.entries.size() == 64);
  CHECK(probe.max_concurrency() == 1);
}

TEST_CASE("an interrupted sweep resumes to the same table") {
  const ToyModel toy(0);
  const auto sets = sample_sets(6);
  const NeuronEffectTable reference = neuron_sweep(toy, sets);

  testutil::TempDir tmp;
  const auto ckpt = tmp / "sweep_checkpoint.json";
  SweepOptions options;
  options.checkpoint_path = ckpt;
  options.checkpoint_every = 8;
  options.max_coords_this_run = 10;

  bool interrupted = false;
  try {
    neuron_sweep(toy, sets, options);
  } catch (const SweepInterrupted& e) {
    interrupted = true;
    CHECK(e.done() == 10);
    CHECK(e.total() == 64);
  }
  CHECK(interrupted);
  CHECK(std::filesystem::exists(ckpt));

  // A leftover checkpoint without the resume flag must be refused before any
  // work happens.
  CHECK_THROWS_WITH_AS(neuron_sweep(toy, sets, options),
                       doctest::Contains("already exists"), std::runtime_error);

  SweepOptions resume = options;
  resume.resume = true;
  resume.max_coords_this_run.reset();
  const NeuronEffectTable resumed = neuron_sweep(toy, sets, resume);
  CHECK(tables_equal(resumed, reference));
  // A completed sweep leaves no checkpoint behind.
  CHECK_FALSE(std::filesystem::exists(ckpt));
}

TEST_CASE("a checkpoint from different inputs is refused") {
  const ToyModel toy(0);
  const auto sets_a = sample_sets(4, 1);
  const auto sets_b = sample_sets(4, 2);

  testutil::TempDir tmp;
  SweepOptions options;
  options.checkpoint_path = tmp / "ck.json";
  options.max_coords_this_run = 5;
  CHECK_THROWS_AS(neuron_sweep(toy, sets_a, options), SweepInterrupted);

  SweepOptions resume = options;
  resume.resume = true;
  resume.max_coords_this_run.reset();
  CHECK_THROWS_WITH_AS(neuron_sweep(toy, sets_b, resume),
                       doctest::Contains("does not match this run"),
                       std::runtime_error);
}

TEST_CASE("sweep option validation") {
  const ToyModel toy(0);
  const auto sets = sample_sets(2);

  SweepOptions bounded;
  bounded.max_coords_this_run = 3;
  CHECK_THROWS_WITH_AS(neuron_sweep(toy, sets, bounded),
                       doctest::Contains("checkpoint"), std::invalid_argument);

  SweepOptions empty_subset;
  empty_subset.coords = std::vector<ActivationCoord>{};
  CHECK_THROWS_AS(neuron_sweep(toy, sets, empty_subset), std::invalid_argument);

  SweepOptions duplicate;
  duplicate.coords = std::vector<ActivationCoord>{{1, 5}, {1, 5}};
  CHECK_THROWS_AS(neuron_sweep(toy, sets, duplicate), std::invalid_argument);

  SweepOptions bad_jobs;
  bad_jobs.jobs = 0;
  CHECK_THROWS_AS(neuron_sweep(toy, sets, bad_jobs), std::invalid_argument);

  CHECK_THROWS_AS(neuron_sweep(toy, {}, SweepOptions{}), std::invalid_argument);
}

TEST_CASE("top-k selection takes the ceiling fraction per layer, signed, ties low") {
  NeuronEffectTable table;
  table.model_name = "synthetic";
  table.n_layers = 1;
  table.hidden_size = 1024;
  for (int n = 0; n < 1024; ++n) {
    // Neurons 100..110 share the top value; everything else descends.
    const double mean = (n >= 100 && n <= 110) ? 50.0 : -static_cast<double>(n);
    table.entries.push_back({{0, n}, mean, 0.0, 4, 0});
  }
  const auto selection = top_k_selection(table, 0.01);
  REQUIRE(selection.count(0) == 1);
  const auto& picked = selection.at(0);
  // ceil(0.01 * 1024) = 11: the eleven tied neurons, lowest indices first.
  REQUIRE(picked.size() == 11);
  for (int i = 0; i < 11; ++i) CHECK(picked[i] == ActivationCoord{0, 100 + i});

  SUBCASE("fraction 1 selects everything") {
    CHECK(top_k_selection(table, 1.0).at(0).size() == 1024);
  }
  SUBCASE("entry order does not matter") {
    NeuronEffectTable shuffled = table;
    std::reverse(shuffled.entries.begin(), shuffled.entries.end());
    CHECK(top_k_selection(shuffled, 0.01).at(0) == picked);
  }
  SUBCASE("signed ordering prefers positive over large-magnitude negative") {
    NeuronEffectTable signs;
    signs.model_name = "signs";
    signs.n_layers = 1;
    signs.hidden_size = 4;
    signs.entries = {{{0, 0}, -100.0, 0.0, 4, 0},
                     {{0, 1}, 0.5, 0.0, 4, 0},
                     {{0, 2}, -0.1, 0.0, 4, 0},
                     {{0, 3}, 0.2, 0.0, 4, 0}};
    const auto sel = top_k_selection(signs, 0.5);  // k = 2
    CHECK(sel.at(0) == std::vector<ActivationCoord>{{0, 1}, {0, 3}});
  }
  SUBCASE("invalid fractions and empty tables are rejected") {
    CHECK_THROWS_AS(top_k_selection(table, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(top_k_selection(table, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(top_k_selection(NeuronEffectTable{}, 0.5),
                    std::invalid_argument);
  }
}

TEST_CASE("relative depth places layers into the published thirds") {
  CHECK(layer_depth(35, 48) == doctest::Approx(0.729).epsilon(1e-3));
  CHECK(depth_group(layer_depth(35, 48)) == DepthGroup::final);
  CHECK(layer_depth(13, 24) == doctest::Approx(0.542).epsilon(1e-3));
  CHECK(depth_group(layer_depth(13, 24)) == DepthGroup::middle);

  CHECK(depth_group(0.0) == DepthGroup::early);
  CHECK(depth_group(0.3299) == DepthGroup::early);
  CHECK(depth_group(0.33) == DepthGroup::middle);
  CHECK(depth_group(0.6699) == DepthGroup::middle);
  CHECK(depth_group(0.67) == DepthGroup::final);
  CHECK(depth_group(1.0) == DepthGroup::final);

  CHECK_THROWS_AS(layer_depth(48, 48), std::invalid_argument);
  CHECK_THROWS_AS(layer_depth(-1, 48), std::invalid_argument);
  CHECK_THROWS_AS(depth_group(1.1), std::invalid_argument);

  // Every layer of a model lands in exactly one group, and group membership
  // is monotone in depth.
  for (int n_layers : {12, 24, 48}) {
    int early = 0, middle = 0, final_count = 0;
    DepthGroup prev = DepthGroup::early;
    for (int layer = 0; layer < n_layers; ++layer) {
      const DepthGroup g = depth_group(layer_depth(layer, n_layers));
      if (g == DepthGroup::early) ++early;
      if (g == DepthGroup::middle) ++middle;
      if (g == DepthGroup::final) ++final_count;
      CHECK(static_cast<int>(g) >= static_cast<int>(prev));
      prev = g;
    }
    CHECK(early + middle + final_count == n_layers);
    CHECK(early > 0);
    CHECK(middle > 0);
    CHECK(final_count > 0);
  }
}

TEST_CASE("layerwise summaries in joint mode patch the whole selection at once") {
  const ToyModel toy(0);
  const auto sets = sample_sets(8);
  const auto table = neuron_sweep(toy, sets);
  const auto selection = top_k_selection(table, 0.07);  // 2 neurons per layer

  const auto summaries =
      layerwise_nie(toy, sets, selection, Alignment::min_length, LayerMode::joint);
  REQUIRE(summaries.size() == 4);

  // Each of this model's layers holds a complete copy of the signal, so the
  // jointly patched selection mediates the full effect at every layer.
  std::vector<EffectRecord> te;
  for (const auto& s : sets) {
    te.push_back(total_effect(toy, s.control, s.interventions[0], s.match_id));
  }
  const double mean_te = mean_effects(te).mean_te;
  for (const auto& sum : summaries) {
    CHECK(sum.mean_nie == doctest::Approx(mean_te).epsilon(1e-12));
    CHECK(sum.n == sets.size());
    CHECK(sum.depth == doctest::Approx(sum.layer / 4.0));
    CHECK(sum.selected_coords == selection.at(sum.layer));
  }
  CHECK(summaries[0].group == DepthGroup::early);
  CHECK(summaries[1].group == DepthGroup::early);
  CHECK(summaries[2].group == DepthGroup::middle);
  CHECK(summaries[3].group == DepthGroup::final);
}

TEST_CASE("mean-of-neurons mode averages the per-coordinate sweep values") {
  const ToyModel toy(0);
  const auto sets = sample_sets(6);

  const std::map<int, std::vector<ActivationCoord>> selection{
      {2, {{2, 6}, {2, 7}}}};
  const auto summaries = layerwise_nie(toy, sets, selection, Alignment::min_length,
                                       LayerMode::mean_of_neurons);
  REQUIRE(summaries.size() == 1);

  SweepOptions options;
  options.coords = std::vector<ActivationCoord>{{2, 6}, {2, 7}};
  const auto table = neuron_sweep(toy, sets, options);
  const double expected = (table.entries[0].mean_nie + table.entries[1].mean_nie) / 2.0;
  CHECK(summaries[0].mean_nie == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("layer selections must stay within their layer") {
  const ToyModel toy(0);
  const auto sets = sample_sets(2);
  const std::map<int, std::vector<ActivationCoord>> straddling{{1, {{1, 5}, {2, 6}}}};
  CHECK_THROWS_WITH_AS(
      layerwise_nie(toy, sets, straddling, Alignment::min_length),
      doctest::Contains("selection for layer"), std::invalid_argument);
  CHECK_THROWS_AS(layerwise_nie(toy, sets, {}, Alignment::min_length),
                  std::invalid_argument);
}

TEST_CASE("group accuracy scores controls as entailment and swaps as anything else") {
  const auto sets = sample_sets(10);

  const GroupAccuracy toy_acc = group_accuracy(ToyModel(0), sets);
  CHECK(toy_acc.control_pct == 100.0);
  CHECK(toy_acc.intervention_pct == 100.0);
  CHECK(toy_acc.control_total == 10);
  CHECK(toy_acc.intervention_total == 10);

  const GroupAccuracy overlap_acc = group_accuracy(OverlapBaseline{}, sets);
  CHECK(overlap_acc.control_pct == 100.0);
  CHECK(overlap_acc.intervention_pct == 0.0);

  // A classifier glued to "entailment" scores (100, 0)...
  const GroupAccuracy entail_acc =
      group_accuracy(ConstantModel({0.8, 0.1, 0.1}), sets);
  CHECK(entail_acc.control_pct == 100.0);
  CHECK(entail_acc.intervention_pct == 0.0);

  // ...and one glued to "neutral" scores (0, 100).
  const GroupAccuracy neutral_acc =
      group_accuracy(ConstantModel({0.1, 0.8, 0.1}), sets);
  CHECK(neutral_acc.control_pct == 0.0);
  CHECK(neutral_acc.intervention_pct == 100.0);

  CHECK_THROWS_AS(group_accuracy(ToyModel(0), {}), std::invalid_argument);
}
