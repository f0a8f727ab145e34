#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "distcma/effects.hpp"
#include "distcma/model.hpp"

namespace distcma {

struct NeuronEffect {
  ActivationCoord coord;
  double mean_nie = 0.0;
  double sd_nie = 0.0;
  std::size_t n = 0;
  std::size_t n_clamped = 0;  // records whose odds needed the probability floor
};

// Per-coordinate mean NIE over a dataset, in coordinate order.
struct NeuronEffectTable {
  std::string model_name;
  int n_layers = 0;
  int hidden_size = 0;
  std::vector<NeuronEffect> entries;
};

struct SweepOptions {
  // Default: every (layer, neuron) coordinate of the model.
  std::optional<std::vector<ActivationCoord>> coords;
  Alignment alignment = Alignment::min_length;
  // Worker threads; forced to 1 for adapters that declare themselves not
  // thread-safe. Output is deterministic regardless.
  int jobs = 1;
  // Progress file enabling resumption; empty disables checkpointing.
  std::filesystem::path checkpoint_path;
  std::size_t checkpoint_every = 64;
  bool resume = false;
  // Stop (with the checkpoint written) after computing this many new
  // coordinates; used by tests and long-running splits. Requires a
  // checkpoint path.
  std::optional<std::size_t> max_coords_this_run;
};

// Thrown when a sweep stops at max_coords_this_run with progress saved.
class SweepInterrupted : public std::runtime_error {
 public:
  SweepInterrupted(std::size_t done, std::size_t total)
      : std::runtime_error("sweep interrupted with " + std::to_string(done) + " of " +
                           std::to_string(total) +
                           " coordinates computed; re-run with resume"),
        done_(done),
        total_(total) {}
  std::size_t done() const { return done_; }
  std::size_t total() const { return total_; }

 private:
  std::size_t done_;
  std::size_t total_;
};

// Mean NIE per coordinate with a single-coordinate mediator, over every
// matched pair of the dataset. A leftover checkpoint without the resume
// flag is an error; a matching checkpoint with it seeds the computed set.
NeuronEffectTable neuron_sweep(const ModelAdapter& model,
                               const std::vector<MatchedSet>& dataset,
                               const SweepOptions& options = {});

// Per layer, the ceil(fraction * hidden_size) coords with highest signed
// mean NIE; ties broken toward the lower neuron index.
std::map<int, std::vector<ActivationCoord>> top_k_selection(
    const NeuronEffectTable& table, double fraction);

enum class DepthGroup { early, middle, final };

std::string to_string(DepthGroup g);

// layer / n_layers, 0-based.
double layer_depth(int layer, int n_layers);
// early [0, 0.33), middle [0.33, 0.67), final [0.67, 1].
DepthGroup depth_group(double depth);

struct LayerSummary {
  int layer = 0;
  double depth = 0.0;
  DepthGroup group = DepthGroup::early;
  std::vector<ActivationCoord> selected_coords;
  double mean_nie = 0.0;
  double sd_nie = 0.0;
  std::size_t n = 0;
};

// joint: one patched forward pass per pair with the layer's whole selection
// as the mediator. mean_of_neurons: average of the per-coordinate mean NIEs.
enum class LayerMode { joint, mean_of_neurons };

std::string to_string(LayerMode m);

std::vector<LayerSummary> layerwise_nie(
    const ModelAdapter& model, const std::vector<MatchedSet>& dataset,
    const std::map<int, std::vector<ActivationCoord>>& selection, Alignment alignment,
    LayerMode mode = LayerMode::joint);

struct GroupAccuracy {
  double control_pct = 0.0;
  double intervention_pct = 0.0;
  std::size_t control_correct = 0;
  std::size_t control_total = 0;
  std::size_t intervention_correct = 0;
  std::size_t intervention_total = 0;
};

// A control prediction counts as correct iff the argmax label is
// entailment; an intervention prediction iff it is anything else.
GroupAccuracy group_accuracy(const ModelAdapter& model,
                             const std::vector<MatchedSet>& dataset);

}  // namespace distcma
