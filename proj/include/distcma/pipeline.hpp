#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "distcma/analysis.hpp"
#include "distcma/model.hpp"

namespace distcma {

// Effective configuration of one subcommand run. `out` is the dataset file
// for generate and the bundle directory for te/nie/report.
struct RunConfig {
  std::string lexicon_path = "data/seed_lexicon.json";
  std::string dataset_path;  // empty: generate in memory from the lexicon
  std::string model = "toy";
  std::uint64_t seed = 0;
  std::size_t pairs_per_group = 164;
  Alignment alignment = Alignment::min_length;
  double alpha = 0.05;
  double topk_fraction = 0.01;
  std::string out = "out";
  std::string coords;  // subset filter, comma-joined layer:neuron or layer:*
  int jobs = 1;
  bool resume = false;
  std::size_t checkpoint_every = 64;
  std::optional<std::size_t> max_coords;
  LayerMode layer_mode = LayerMode::joint;
  bool set_average = false;  // average within matched sets instead of pooling

  void validate() const;
};

// Expands the coord filter syntax against model bounds: "1:5" is one coord,
// "0:*" a whole layer, entries comma-separated.
std::vector<ActivationCoord> parse_coords(const std::string& raw, int n_layers,
                                          int hidden_size);

// "toy" and "overlap" are the built-in names. Anything else throws with a
// pointer at the Python driver, which hosts external checkpoint adapters.
std::unique_ptr<ModelAdapter> make_builtin_model(const std::string& name,
                                                 std::uint64_t seed);

// Per-pair total effects, either pooled over every (control, intervention)
// pair or averaged within each matched set.
std::vector<EffectRecord> total_effect_records(const ModelAdapter& model,
                                               const std::vector<MatchedSet>& dataset,
                                               bool set_average);

// Subcommand bodies. Each writes its artifacts plus run_manifest.json and
// throws on failure; `model` overrides the built-in lookup so externally
// constructed adapters can drive the same pipeline.
void run_generate(const RunConfig& config);
void run_te(const RunConfig& config, const ModelAdapter* model = nullptr);
void run_nie(const RunConfig& config, const ModelAdapter* model = nullptr);
void run_report(const RunConfig& config, const ModelAdapter* model = nullptr);

}  // namespace distcma
