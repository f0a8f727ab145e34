#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "distcma/analysis.hpp"
#include "distcma/effects.hpp"
#include "distcma/stats.hpp"

namespace distcma {

std::string neuron_table_csv(const NeuronEffectTable& table);
std::string layer_summaries_csv(const std::string& model_name,
                                const std::vector<LayerSummary>& summaries,
                                LayerMode mode);
std::string ttest_csv(const std::string& model_name, const TTestResult& result);
std::string accuracy_csv(const std::string& model_name, const GroupAccuracy& acc);

// Everything emit_report may render. Absent pieces are skipped, so a TE-only
// run produces a partial bundle.
struct ReportBundleInputs {
  std::string model_name;
  std::optional<ModelMeta> meta;
  std::vector<EffectRecord> te_records;
  std::optional<TTestResult> ttest;
  std::optional<NeuronEffectTable> neuron_table;
  std::vector<LayerSummary> layer_summaries;
  LayerMode layer_mode = LayerMode::joint;
  std::optional<GroupAccuracy> accuracy;
};

// Writes the machine-readable tables and the figures (each with a sidecar
// CSV holding its exact plotted values) into out_dir, creating it if
// needed. Returns the paths written, relative to out_dir. Output is
// byte-identical across runs on identical inputs.
std::vector<std::filesystem::path> emit_report(const ReportBundleInputs& inputs,
                                               const std::filesystem::path& out_dir);

}  // namespace distcma
