#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "distcma/pipeline.hpp"
#include "distcma/version.hpp"

namespace {

struct CliOptions {
  distcma::RunConfig config;
  std::string config_file;
  std::string alignment = "min_length";
  std::string layer_mode = "joint";
  std::int64_t max_coords = -1;
};

// CLI11 only processes a config option that lives on the root app, but ours
// belong to the subcommands, so the file is applied by hand after parsing.
// Bare key = value lines matching the subcommand's long flags; keys that
// match nothing are ignored (so one file can serve several subcommands) and
// values never override flags given on the command line.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  const auto items = cmd->get_config_formatter()->from_file(path);
  for (const auto& item : items) {
    if (!item.parents.empty()) continue;
    CLI::Option* op = cmd->get_option_no_throw("--" + item.name);
    if (op == nullptr || !op->empty()) continue;
    if (op->get_expected_min() == 0) {
      const std::string raw =
          item.inputs.empty() ? std::string("{}") : item.inputs.back();
      op->add_result(op->get_flag_value(item.name, raw));
    } else {
      op->add_result(item.inputs);
    }
    op->run_callback();
  }
}

void add_common_options(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("--lexicon", opts.config.lexicon_path,
                  "Lexicon JSON file used when generating pairs")
      ->capture_default_str();
  cmd->add_option("--dataset", opts.config.dataset_path,
                  "Existing dataset JSONL; omit to generate in memory");
  cmd->add_option("--seed", opts.config.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--pairs", opts.config.pairs_per_group,
                  "Matched sets to generate per group")
      ->capture_default_str();
  cmd->add_option("--config", opts.config_file,
                  "Key/value config file (flags take precedence)");
}

void add_model_options(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("--model", opts.config.model,
                  "Builtin model name: toy or overlap")
      ->capture_default_str();
  cmd->add_option("--alignment", opts.alignment, "Patch alignment mode")
      ->check(CLI::IsMember({"strict", "min_length"}))
      ->capture_default_str();
  cmd->add_option("--alpha", opts.config.alpha, "t-test significance level")
      ->capture_default_str();
  cmd->add_option("--jobs", opts.config.jobs, "Worker threads for sweeps")
      ->capture_default_str();
  cmd->add_flag("--set-average", opts.config.set_average,
                "Average effects within each matched set instead of pooling");
}

void add_sweep_options(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("--topk-fraction", opts.config.topk_fraction,
                  "Per-layer fraction of neurons for the layer-wise stage")
      ->capture_default_str();
  cmd->add_option("--coords", opts.config.coords,
                  "Sweep subset, e.g. 1:5,0:* (default: every coordinate)");
  cmd->add_flag("--resume", opts.config.resume,
                "Continue from a leftover sweep checkpoint");
  cmd->add_option("--checkpoint-every", opts.config.checkpoint_every,
                  "Coordinates between checkpoint writes")
      ->capture_default_str();
  cmd->add_option("--max-coords", opts.max_coords,
                  "Stop after this many new coordinates (checkpoint kept)");
  cmd->add_option("--layer-mode", opts.layer_mode,
                  "Layer-wise aggregation: joint or mean_of_neurons")
      ->check(CLI::IsMember({"joint", "mean_of_neurons"}))
      ->capture_default_str();
}

void finalize(CliOptions& opts) {
  opts.config.alignment = distcma::alignment_from_string(opts.alignment);
  opts.config.layer_mode = opts.layer_mode == "joint"
                               ? distcma::LayerMode::joint
                               : distcma::LayerMode::mean_of_neurons;
  if (opts.max_coords >= 0) {
    opts.config.max_coords = static_cast<std::size_t>(opts.max_coords);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimal-pair NLI dataset generation and causal mediation analysis"};
  app.set_version_flag("--version", distcma::kToolVersion);
  app.require_subcommand(1);

  CliOptions opts;

  auto* generate = app.add_subcommand(
      "generate", "Generate the matched control/intervention dataset");
  add_common_options(generate, opts);
  generate->add_option("--out", opts.config.out, "Dataset JSONL to write")
      ->required();

  auto* te = app.add_subcommand(
      "te", "Total effects per matched pair plus the one-sided t-test");
  add_common_options(te, opts);
  add_model_options(te, opts);
  te->add_option("--out", opts.config.out, "Output directory")->required();

  auto* nie = app.add_subcommand(
      "nie", "Neuron sweep and layer-wise indirect effects");
  add_common_options(nie, opts);
  add_model_options(nie, opts);
  add_sweep_options(nie, opts);
  nie->add_option("--out", opts.config.out, "Output directory")->required();

  auto* report = app.add_subcommand(
      "report", "Full bundle: effects, tests, sweep, figures");
  add_common_options(report, opts);
  add_model_options(report, opts);
  add_sweep_options(report, opts);
  report->add_option("--out", opts.config.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!opts.config_file.empty()) {
      for (CLI::App* sub : app.get_subcommands()) {
        apply_config_file(sub, opts.config_file);
      }
    }
    finalize(opts);
    if (generate->parsed()) {
      distcma::run_generate(opts.config);
    } else if (te->parsed()) {
      distcma::run_te(opts.config);
    } else if (nie->parsed()) {
      distcma::run_nie(opts.config);
    } else if (report->parsed()) {
      distcma::run_report(opts.config);
    }
  } catch (const distcma::SweepInterrupted& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
