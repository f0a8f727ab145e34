#include "distcma/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "distcma/effects.hpp"
#include "distcma/overlap_model.hpp"
#include "distcma/report.hpp"
#include "distcma/stats.hpp"
#include "distcma/toy_model.hpp"
#include "distcma/version.hpp"

namespace distcma {

void RunConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  if (!(topk_fraction > 0.0 && topk_fraction <= 1.0)) {
    throw std::invalid_argument("top-k fraction must lie in (0, 1]");
  }
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (pairs_per_group < 1) throw std::invalid_argument("pairs must be >= 1");
  if (checkpoint_every < 1) throw std::invalid_argument("checkpoint-every must be >= 1");
  if (out.empty()) throw std::invalid_argument("output path is empty");
  if (model.empty()) throw std::invalid_argument("model name is empty");
}

std::vector<ActivationCoord> parse_coords(const std::string& raw, int n_layers,
                                          int hidden_size) {
  std::vector<ActivationCoord> coords;
  std::size_t start = 0;
  while (start <= raw.size()) {
    const std::size_t comma = raw.find(',', start);
    const std::string entry =
        raw.substr(start, comma == std::string::npos ? comma : comma - start);
    start = comma == std::string::npos ? raw.size() + 1 : comma + 1;
    if (entry.empty()) continue;

    const std::size_t colon = entry.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("coord entry '" + entry +
                                  "' is not layer:neuron or layer:*");
    }
    int layer = 0;
    try {
      layer = std::stoi(entry.substr(0, colon));
    } catch (const std::exception&) {
      throw std::invalid_argument("coord entry '" + entry + "' has a bad layer");
    }
    if (layer < 0 || layer >= n_layers) {
      throw std::out_of_range("coord entry '" + entry + "': layer outside [0, " +
                              std::to_string(n_layers) + ")");
    }
    const std::string neuron_part = entry.substr(colon + 1);
    if (neuron_part == "*") {
      for (int n = 0; n < hidden_size; ++n) coords.push_back({layer, n});
      continue;
    }
    int neuron = 0;
    try {
      neuron = std::stoi(neuron_part);
    } catch (const std::exception&) {
      throw std::invalid_argument("coord entry '" + entry + "' has a bad neuron");
    }
    if (neuron < 0 || neuron >= hidden_size) {
      throw std::out_of_range("coord entry '" + entry + "': neuron outside [0, " +
                              std::to_string(hidden_size) + ")");
    }
    coords.push_back({layer, neuron});
  }
  if (coords.empty()) {
    throw std::invalid_argument("coord filter '" + raw + "' selects nothing");
  }
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  return coords;
}

std::unique_ptr<ModelAdapter> make_builtin_model(const std::string& name,
                                                 std::uint64_t seed) {
  if (name == "toy") return construct_toy_model(seed);
  if (name == "overlap") return construct_overlap_baseline();
  throw std::invalid_argument(
      "unknown builtin model '" + name +
      "': builtin names are 'toy' and 'overlap'; external checkpoints are "
      "driven through the Python module (python -m distcma)");
}

std::vector<EffectRecord> total_effect_records(const ModelAdapter& model,
                                               const std::vector<MatchedSet>& dataset,
                                               bool set_average) {
  std::vector<EffectRecord> records;
  for (const auto& set : dataset) {
    if (!set_average || set.interventions.size() == 1) {
      for (const auto& iv : set.interventions) {
        records.push_back(total_effect(model, set.control, iv, set.match_id));
      }
      continue;
    }
    // Within-set average: one record per set, with the swap odds replaced by
    // their geometric mean so that te stays log(y_swap / y_null).
    std::vector<EffectRecord> parts;
    for (const auto& iv : set.interventions) {
      parts.push_back(total_effect(model, set.control, iv, set.match_id));
    }
    EffectRecord combined = parts.front();
    double log_sum = 0.0;
    bool clamped = false;
    for (const auto& p : parts) {
      log_sum += std::log(p.y_swap.value);
      clamped = clamped || p.y_swap.clamped;
    }
    combined.y_swap.value = std::exp(log_sum / static_cast<double>(parts.size()));
    combined.y_swap.p_non_entailment = 0.0;
    combined.y_swap.p_entailment = 0.0;
    combined.y_swap.clamped = clamped;
    combined.te = log_odds_ratio(combined.y_swap, combined.y_null);
    records.push_back(std::move(combined));
  }
  if (records.empty()) throw std::invalid_argument("dataset has no matched pairs");
  return records;
}

namespace {

std::vector<MatchedSet> load_or_generate(const RunConfig& config) {
  if (!config.dataset_path.empty()) {
    return read_dataset(config.dataset_path);
  }
  const Lexicon lexicon = load_lexicon(config.lexicon_path);
  return generate_pairs(lexicon, config.seed, config.pairs_per_group);
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::ordered_json config_json(const RunConfig& config) {
  nlohmann::ordered_json j;
  j["lexicon"] = config.lexicon_path;
  j["dataset"] = config.dataset_path;
  j["model"] = config.model;
  j["seed"] = config.seed;
  j["pairs_per_group"] = config.pairs_per_group;
  j["alignment"] = to_string(config.alignment);
  j["alpha"] = config.alpha;
  j["topk_fraction"] = config.topk_fraction;
  j["out"] = config.out;
  j["coords"] = config.coords;
  j["jobs"] = config.jobs;
  j["resume"] = config.resume;
  j["checkpoint_every"] = config.checkpoint_every;
  j["max_coords"] = config.max_coords.has_value()
                        ? nlohmann::json(*config.max_coords)
                        : nlohmann::json();
  j["layer_mode"] = to_string(config.layer_mode);
  j["set_average"] = config.set_average;
  return j;
}

nlohmann::ordered_json meta_json(const ModelMeta& meta) {
  nlohmann::ordered_json j;
  j["name"] = meta.name;
  j["n_layers"] = meta.n_layers;
  j["hidden_size"] = meta.hidden_size;
  j["n_parameters"] = meta.n_parameters;
  j["vocab_size"] = meta.vocab_size;
  auto order = nlohmann::ordered_json::array();
  for (const auto label : meta.label_order) order.push_back(to_string(label));
  j["label_order"] = std::move(order);
  j["thread_safe"] = meta.thread_safe;
  return j;
}

void write_manifest(const RunConfig& config, const std::string& command,
                    const ModelMeta* meta, std::uint64_t dataset_hash,
                    std::size_t clamp_count,
                    const std::vector<std::filesystem::path>& outputs,
                    const std::filesystem::path& manifest_dir) {
  nlohmann::ordered_json j;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  j["model"] = meta != nullptr ? meta_json(*meta) : nlohmann::ordered_json();
  j["dataset_hash"] = hex64(dataset_hash);
  j["non_entailment_mass"] = "p_neutral+p_contradiction";
  j["odds_epsilon"] = kOddsEpsilon;
  j["clamp_count"] = clamp_count;
  j["config"] = config_json(config);
  auto out_list = nlohmann::ordered_json::array();
  for (const auto& p : outputs) out_list.push_back(p.generic_string());
  j["outputs"] = std::move(out_list);

  std::error_code ec;
  std::filesystem::create_directories(manifest_dir, ec);
  const auto path = manifest_dir / "run_manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failure: " + path.string());
}

const ModelAdapter& resolve_model(const RunConfig& config, const ModelAdapter* external,
                                  std::unique_ptr<ModelAdapter>& owned) {
  if (external != nullptr) return *external;
  owned = make_builtin_model(config.model, config.seed);
  return *owned;
}

std::size_t count_clamped(const std::vector<EffectRecord>& records) {
  std::size_t n = 0;
  for (const auto& r : records) n += r.any_clamped() ? 1 : 0;
  return n;
}

}  // namespace

void run_generate(const RunConfig& config) {
  config.validate();
  const Lexicon lexicon = load_lexicon(config.lexicon_path);
  const auto dataset = generate_pairs(lexicon, config.seed, config.pairs_per_group);

  const std::filesystem::path out_path = config.out;
  if (out_path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(out_path.parent_path(), ec);
  }
  write_dataset(dataset, out_path);

  const auto dir = out_path.has_parent_path() ? out_path.parent_path()
                                              : std::filesystem::path(".");
  write_manifest(config, "generate", nullptr, dataset_fingerprint(dataset), 0,
                 {out_path.filename()}, dir);
}

void run_te(const RunConfig& config, const ModelAdapter* model) {
  config.validate();
  const auto dataset = load_or_generate(config);
  std::unique_ptr<ModelAdapter> owned;
  const ModelAdapter& adapter = resolve_model(config, model, owned);
  const ModelMeta meta = adapter.meta();

  const auto records = total_effect_records(adapter, dataset, config.set_average);
  std::vector<double> te_values;
  te_values.reserve(records.size());
  for (const auto& r : records) te_values.push_back(r.te);
  const TTestResult ttest = one_sample_t_lenient(te_values, config.alpha);

  ReportBundleInputs inputs;
  inputs.model_name = meta.name;
  inputs.te_records = records;
  inputs.ttest = ttest;
  inputs.accuracy = group_accuracy(adapter, dataset);
  const auto written = emit_report(inputs, config.out);
  write_manifest(config, "te", &meta, dataset_fingerprint(dataset),
                 count_clamped(records), written, config.out);
}

void run_nie(const RunConfig& config, const ModelAdapter* model) {
  config.validate();
  const auto dataset = load_or_generate(config);
  std::unique_ptr<ModelAdapter> owned;
  const ModelAdapter& adapter = resolve_model(config, model, owned);
  const ModelMeta meta = adapter.meta();

  SweepOptions options;
  if (!config.coords.empty()) {
    options.coords = parse_coords(config.coords, meta.n_layers, meta.hidden_size);
  }
  options.alignment = config.alignment;
  options.jobs = config.jobs;
  options.checkpoint_path = std::filesystem::path(config.out) / "sweep_checkpoint.json";
  options.checkpoint_every = config.checkpoint_every;
  options.resume = config.resume;
  options.max_coords_this_run = config.max_coords;
  std::error_code ec;
  std::filesystem::create_directories(config.out, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + config.out + ": " +
                             ec.message());
  }

  const NeuronEffectTable table = neuron_sweep(adapter, dataset, options);
  const auto selection = top_k_selection(table, config.topk_fraction);
  const auto summaries = layerwise_nie(adapter, dataset, selection, config.alignment,
                                       config.layer_mode);

  ReportBundleInputs inputs;
  inputs.model_name = meta.name;
  inputs.neuron_table = table;
  inputs.layer_summaries = summaries;
  inputs.layer_mode = config.layer_mode;
  const auto written = emit_report(inputs, config.out);

  std::size_t clamp_count = 0;
  for (const auto& e : table.entries) clamp_count += e.n_clamped;
  write_manifest(config, "nie", &meta, dataset_fingerprint(dataset), clamp_count,
                 written, config.out);
}

void run_report(const RunConfig& config, const ModelAdapter* model) {
  config.validate();
  const auto dataset = load_or_generate(config);
  std::unique_ptr<ModelAdapter> owned;
  const ModelAdapter& adapter = resolve_model(config, model, owned);
  const ModelMeta meta = adapter.meta();

  const auto records = total_effect_records(adapter, dataset, config.set_average);
  std::vector<double> te_values;
  te_values.reserve(records.size());
  for (const auto& r : records) te_values.push_back(r.te);

  SweepOptions options;
  if (!config.coords.empty()) {
    options.coords = parse_coords(config.coords, meta.n_layers, meta.hidden_size);
  }
  options.alignment = config.alignment;
  options.jobs = config.jobs;
  options.checkpoint_path = std::filesystem::path(config.out) / "sweep_checkpoint.json";
  options.checkpoint_every = config.checkpoint_every;
  options.resume = config.resume;
  options.max_coords_this_run = config.max_coords;
  std::error_code ec;
  std::filesystem::create_directories(config.out, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory " + config.out + ": " +
                             ec.message());
  }
  const NeuronEffectTable table = neuron_sweep(adapter, dataset, options);
  const auto selection = top_k_selection(table, config.topk_fraction);
  const auto summaries = layerwise_nie(adapter, dataset, selection, config.alignment,
                                       config.layer_mode);

  ReportBundleInputs inputs;
  inputs.model_name = meta.name;
  inputs.meta = meta;
  inputs.te_records = records;
  inputs.ttest = one_sample_t_lenient(te_values, config.alpha);
  inputs.neuron_table = table;
  inputs.layer_summaries = summaries;
  inputs.layer_mode = config.layer_mode;
  inputs.accuracy = group_accuracy(adapter, dataset);
  const auto written = emit_report(inputs, config.out);

  std::size_t clamp_count = count_clamped(records);
  for (const auto& e : table.entries) clamp_count += e.n_clamped;
  write_manifest(config, "report", &meta, dataset_fingerprint(dataset), clamp_count,
                 written, config.out);
}

}  // namespace distcma
