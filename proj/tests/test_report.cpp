#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "distcma/analysis.hpp"
#include "distcma/report.hpp"
#include "distcma/stats.hpp"
#include "distcma/toy_model.hpp"
#include "test_util.hpp"

using namespace distcma;

namespace {

std::vector<MatchedSet> sample_sets(std::size_t n) {
  static const Lexicon lex = load_lexicon(testutil::seed_lexicon_path());
  return generate_pairs(lex, 0, n);
}

ReportBundleInputs full_inputs() {
  const ToyModel toy(0);
  const auto sets = sample_sets(8);

  ReportBundleInputs inputs;
  inputs.model_name = "toy";
  inputs.meta = toy.meta();
  for (const auto& s : sets) {
    inputs.te_records.push_back(
        total_effect(toy, s.control, s.interventions[0], s.match_id));
  }
  std::vector<double> tes;
  for (const auto& r : inputs.te_records) tes.push_back(r.te);
  inputs.ttest = one_sample_t_lenient(tes, 0.05);
  inputs.neuron_table = neuron_sweep(toy, sets);
  inputs.layer_summaries = layerwise_nie(
      toy, sets, top_k_selection(*inputs.neuron_table, 0.07), Alignment::min_length);
  inputs.accuracy = group_accuracy(toy, sets);
  return inputs;
}

std::set<std::string> read_tree(const std::filesystem::path& root) {
  std::set<std::string> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      files.insert(std::filesystem::relative(entry.path(), root).generic_string());
    }
  }
  return files;
}

}  // namespace

TEST_CASE("a full bundle holds every table and figure with its sidecar data") {
  const ReportBundleInputs inputs = full_inputs();
  testutil::TempDir tmp;
  const auto out = tmp / "bundle";
  const auto written = emit_report(inputs, out);

  const std::set<std::string> expected{
      "te_table.csv",
      "ttest.csv",
      "accuracy.csv",
      "neuron_nie.csv",
      "layer_nie.csv",
      "figures/neuron_nie_scatter.svg",
      "figures/neuron_nie_scatter.csv",
      "figures/layer_nie_strip.svg",
      "figures/layer_nie_strip.csv",
      "figures/te_vs_params.svg",
      "figures/te_vs_params.csv",
      "figures/te_vs_vocab.svg",
      "figures/te_vs_vocab.csv",
  };
  CHECK(read_tree(out) == expected);
  CHECK(written.size() == expected.size());

  // Figures are well-formed standalone SVG documents.
  for (const auto& name : expected) {
    if (name.size() < 4 || name.substr(name.size() - 4) != ".svg") continue;
    const std::string svg = testutil::read_file(out / name);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("NaN") == std::string::npos);
  }

  // Sidecar data mirrors what the comparison figure plots: one row per
  // published reference model plus this run.
  const std::string sidecar = testutil::read_file(out / "figures/te_vs_params.csv");
  CHECK(std::count(sidecar.begin(), sidecar.end(), '\n') == 8);
  CHECK(sidecar.find("toy") != std::string::npos);
  CHECK(sidecar.find("roberta-large-mnli") != std::string::npos);
}

TEST_CASE("absent inputs shrink the bundle instead of failing") {
  ReportBundleInputs inputs;
  inputs.model_name = "partial";
  const ToyModel toy(0);
  const auto sets = sample_sets(3);
  for (const auto& s : sets) {
    inputs.te_records.push_back(
        total_effect(toy, s.control, s.interventions[0], s.match_id));
  }

  testutil::TempDir tmp;
  const auto out = tmp / "partial";
  emit_report(inputs, out);
  CHECK(read_tree(out) == std::set<std::string>{"te_table.csv"});

  // Without model metadata there is nothing to compare against the
  // published checkpoints, so no comparison figures appear.
  std::vector<double> tes;
  for (const auto& r : inputs.te_records) tes.push_back(r.te);
  inputs.ttest = one_sample_t_lenient(tes, 0.05);
  const auto out2 = tmp / "partial2";
  emit_report(inputs, out2);
  CHECK(read_tree(out2) == std::set<std::string>{"te_table.csv", "ttest.csv"});
}

TEST_CASE("emitting the same inputs twice is byte-identical") {
  const ReportBundleInputs inputs = full_inputs();
  testutil::TempDir tmp;
  const auto out_a = tmp / "a";
  const auto out_b = tmp / "b";
  emit_report(inputs, out_a);
  emit_report(inputs, out_b);
  const auto files = read_tree(out_a);
  CHECK(files == read_tree(out_b));
  for (const auto& name : files) {
    INFO("file ", name);
    CHECK(testutil::read_file(out_a / name) == testutil::read_file(out_b / name));
  }
  // Overwriting in place converges too.
  emit_report(inputs, out_a);
  for (const auto& name : files) {
    CHECK(testutil::read_file(out_a / name) == testutil::read_file(out_b / name));
  }
}

TEST_CASE("table serializations start with their headers") {
  const ReportBundleInputs inputs = full_inputs();
  CHECK(neuron_table_csv(*inputs.neuron_table)
            .rfind("model,layer,neuron,mean_nie,sd_nie,n", 0) == 0);
  const std::string ttest = ttest_csv("toy", *inputs.ttest);
  CHECK(ttest.rfind("model,n,mean,sd,t,p,p_formatted,reject_h0,alpha,degenerate",
                    0) == 0);
  CHECK(ttest.find(",true,") != std::string::npos);  // rejection column
  const std::string acc = accuracy_csv("toy", *inputs.accuracy);
  CHECK(acc.rfind("model,group,accuracy_pct,correct,total", 0) == 0);
  CHECK(acc.find("toy,control,100.00,") != std::string::npos);
  CHECK(acc.find("toy,intervention,100.00,") != std::string::npos);
  CHECK(layer_summaries_csv("toy", inputs.layer_summaries, LayerMode::joint)
            .rfind("model,layer,depth,depth_group,mode,n_selected,selected_"
                   "neurons,mean_nie,sd_nie,n",
                   0) == 0);
}

TEST_CASE("an unwritable output directory is an error") {
  testutil::TempDir tmp;
  const auto blocker = tmp / "file";
  testutil::write_file(blocker, "x");
  CHECK_THROWS_AS(emit_report(full_inputs(), blocker / "bundle"),
                  std::exception);
}
