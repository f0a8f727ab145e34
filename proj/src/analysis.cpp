#include "distcma/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "distcma/stats.hpp"

namespace distcma {

namespace {

struct PairRef {
  std::string match_id;
  const NliPair* control;
  const NliPair* intervention;
};

std::vector<PairRef> flatten(const std::vector<MatchedSet>& dataset) {
  std::vector<PairRef> out;
  for (const auto& set : dataset) {
    for (const auto& iv : set.interventions) {
      out.push_back({set.match_id, &set.control, &iv});
    }
  }
  if (out.empty()) throw std::invalid_argument("dataset has no matched pairs");
  return out;
}

NeuronEffect compute_coord_effect(const ModelAdapter& model,
                                  const std::vector<PairRef>& pairs,
                                  ActivationCoord coord, Alignment alignment) {
  const MediatorSpec spec = MediatorSpec::single(coord);
  std::vector<double> nies;
  nies.reserve(pairs.size());
  std::size_t n_clamped = 0;
  for (const auto& ref : pairs) {
    const EffectRecord rec = natural_indirect_effect(
        model, *ref.control, *ref.intervention, ref.match_id, spec, alignment);
    nies.push_back(*rec.nie);
    n_clamped += rec.any_clamped() ? 1 : 0;
  }
  return {coord, sample_mean(nies), sample_sd(nies), nies.size(), n_clamped};
}

constexpr int kCheckpointFormat = 1;

nlohmann::ordered_json checkpoint_header(const ModelMeta& meta,
                                         std::uint64_t dataset_hash,
                                         Alignment alignment,
                                         const std::vector<ActivationCoord>& plan) {
  std::string plan_text;
  for (const auto& c : plan) plan_text += to_string(c) + ";";
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["model"] = meta.name;
  j["n_layers"] = meta.n_layers;
  j["hidden_size"] = meta.hidden_size;
  j["dataset_hash"] = dataset_hash;
  j["alignment"] = to_string(alignment);
  j["plan_hash"] = fnv1a64(plan_text);
  return j;
}

void write_checkpoint(const std::filesystem::path& path,
                      const nlohmann::ordered_json& header,
                      const std::vector<std::optional<NeuronEffect>>& results) {
  nlohmann::ordered_json j = header;
  auto done = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    if (!r.has_value()) continue;
    done.push_back(
        {r->coord.layer, r->coord.neuron, r->mean_nie, r->sd_nie, r->n, r->n_clamped});
  }
  j["done"] = std::move(done);

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

std::map<ActivationCoord, NeuronEffect> read_checkpoint(
    const std::filesystem::path& path, const nlohmann::ordered_json& expected_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path.string());
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupt sweep checkpoint " + path.string() + ": " +
                             e.what());
  }
  for (auto it = expected_header.begin(); it != expected_header.end(); ++it) {
    if (!j.contains(it.key()) || j[it.key()] != it.value()) {
      throw std::runtime_error("sweep checkpoint " + path.string() +
                               " does not match this run (field '" + it.key() + "')");
    }
  }
  std::map<ActivationCoord, NeuronEffect> done;
  for (const auto& row : j.at("done")) {
    NeuronEffect e;
    e.coord = {row.at(0).get<int>(), row.at(1).get<int>()};
    e.mean_nie = row.at(2).get<double>();
    e.sd_nie = row.at(3).get<double>();
    e.n = row.at(4).get<std::size_t>();
    e.n_clamped = row.at(5).get<std::size_t>();
    done[e.coord] = e;
  }
  return done;
}

}  // namespace

NeuronEffectTable neuron_sweep(const ModelAdapter& model,
                               const std::vector<MatchedSet>& dataset,
                               const SweepOptions& options) {
  const ModelMeta meta = model.meta();
  meta.validate();
  const auto pairs = flatten(dataset);

  std::vector<ActivationCoord> plan;
  if (options.coords.has_value()) {
    plan = *options.coords;
    if (plan.empty()) throw std::invalid_argument("sweep coord subset is empty");
    std::sort(plan.begin(), plan.end());
    for (std::size_t i = 0; i + 1 < plan.size(); ++i) {
      if (plan[i] == plan[i + 1]) {
        throw std::invalid_argument("duplicate sweep coord " + to_string(plan[i]));
      }
    }
    MediatorSpec(plan).validate(meta.n_layers, meta.hidden_size);
  } else {
    plan.reserve(static_cast<std::size_t>(meta.n_layers) * meta.hidden_size);
    for (int layer = 0; layer < meta.n_layers; ++layer) {
      for (int neuron = 0; neuron < meta.hidden_size; ++neuron) {
        plan.push_back({layer, neuron});
      }
    }
  }

  if (options.max_coords_this_run.has_value() && options.checkpoint_path.empty()) {
    throw std::invalid_argument(
        "a bounded sweep needs a checkpoint path to save its progress");
  }

  const std::uint64_t fingerprint = dataset_fingerprint(dataset);
  const auto header = checkpoint_header(meta, fingerprint, options.alignment, plan);

  std::vector<std::optional<NeuronEffect>> results(plan.size());
  const bool checkpointing = !options.checkpoint_path.empty();
  if (checkpointing && std::filesystem::exists(options.checkpoint_path)) {
    if (!options.resume) {
      throw std::runtime_error("sweep checkpoint " + options.checkpoint_path.string() +
                               " already exists; pass the resume flag to continue it "
                               "or remove the file");
    }
    const auto done = read_checkpoint(options.checkpoint_path, header);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const auto it = done.find(plan[i]);
      if (it != done.end()) results[i] = it->second;
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (!results[i].has_value()) pending.push_back(i);
  }

  bool interrupted = false;
  if (options.max_coords_this_run.has_value() &&
      pending.size() > *options.max_coords_this_run) {
    pending.resize(*options.max_coords_this_run);
    interrupted = true;
  }

  if (options.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  // Adapters that are not thread safe get a single worker; results are
  // identical either way because coordinates are independent.
  const unsigned requested = meta.thread_safe ? options.jobs : 1u;
  const unsigned jobs =
      std::min<std::size_t>(static_cast<unsigned>(requested), pending.size());

  const std::size_t chunk_size =
      checkpointing ? std::max<std::size_t>(options.checkpoint_every, 1)
                    : pending.size();
  for (std::size_t chunk_start = 0; chunk_start < pending.size();
       chunk_start += chunk_size) {
    const std::size_t chunk_end = std::min(chunk_start + chunk_size, pending.size());
    if (jobs <= 1) {
      for (std::size_t k = chunk_start; k < chunk_end; ++k) {
        const std::size_t idx = pending[k];
        results[idx] =
            compute_coord_effect(model, pairs, plan[idx], options.alignment);
      }
    } else {
      std::atomic<std::size_t> cursor{chunk_start};
      std::vector<std::thread> workers;
      std::vector<std::exception_ptr> errors(jobs);
      for (unsigned w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
          try {
            for (;;) {
              const std::size_t k = cursor.fetch_add(1);
              if (k >= chunk_end) return;
              const std::size_t idx = pending[k];
              results[idx] = compute_coord_effect(model, pairs, plan[idx],
                                                  options.alignment);
            }
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : workers) t.join();
      for (auto& err : errors) {
        if (err) std::rethrow_exception(err);
      }
    }
    if (checkpointing) write_checkpoint(options.checkpoint_path, header, results);
  }

  if (interrupted) {
    std::size_t done = 0;
    for (const auto& r : results) done += r.has_value() ? 1 : 0;
    throw SweepInterrupted(done, plan.size());
  }

  NeuronEffectTable table;
  table.model_name = meta.name;
  table.n_layers = meta.n_layers;
  table.hidden_size = meta.hidden_size;
  table.entries.reserve(plan.size());
  for (const auto& r : results) table.entries.push_back(*r);

  // A finished sweep leaves no state behind.
  if (checkpointing && std::filesystem::exists(options.checkpoint_path)) {
    std::filesystem::remove(options.checkpoint_path);
  }
  return table;
}

std::map<int, std::vector<ActivationCoord>> top_k_selection(
    const NeuronEffectTable& table, double fraction) {
  if (table.entries.empty()) throw std::invalid_argument("empty neuron effect table");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("top-k fraction must lie in (0, 1]");
  }
  const auto k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(table.hidden_size)));

  std::map<int, std::vector<const NeuronEffect*>> by_layer;
  for (const auto& e : table.entries) by_layer[e.coord.layer].push_back(&e);

  std::map<int, std::vector<ActivationCoord>> selection;
  for (auto& [layer, entries] : by_layer) {
    std::sort(entries.begin(), entries.end(),
              [](const NeuronEffect* a, const NeuronEffect* b) {
                if (a->mean_nie != b->mean_nie) return a->mean_nie > b->mean_nie;
                return a->coord.neuron < b->coord.neuron;
              });
    auto& coords = selection[layer];
    for (std::size_t i = 0; i < entries.size() && i < k; ++i) {
      coords.push_back(entries[i]->coord);
    }
    std::sort(coords.begin(), coords.end());
  }
  return selection;
}

std::string to_string(DepthGroup g) {
  switch (g) {
    case DepthGroup::early: return "early";
    case DepthGroup::middle: return "middle";
    case DepthGroup::final: return "final";
  }
  throw std::logic_error("unreachable depth group");
}

double layer_depth(int layer, int n_layers) {
  if (n_layers < 1 || layer < 0 || layer >= n_layers) {
    throw std::invalid_argument("layer index outside [0, n_layers)");
  }
  return static_cast<double>(layer) / static_cast<double>(n_layers);
}

DepthGroup depth_group(double depth) {
  if (depth < 0.0 || depth > 1.0) {
    throw std::invalid_argument("depth outside [0, 1]");
  }
  if (depth < 0.33) return DepthGroup::early;
  if (depth < 0.67) return DepthGroup::middle;
  return DepthGroup::final;
}

std::string to_string(LayerMode m) {
  return m == LayerMode::joint ? "joint" : "mean_of_neurons";
}

std::vector<LayerSummary> layerwise_nie(
    const ModelAdapter& model, const std::vector<MatchedSet>& dataset,
    const std::map<int, std::vector<ActivationCoord>>& selection, Alignment alignment,
    LayerMode mode) {
  if (selection.empty()) throw std::invalid_argument("empty layer selection");
  const ModelMeta meta = model.meta();
  const auto pairs = flatten(dataset);

  std::vector<LayerSummary> out;
  for (const auto& [layer, coords] : selection) {
    if (coords.empty()) {
      throw std::invalid_argument("layer " + std::to_string(layer) +
                                  " has an empty selection");
    }
    for (const auto& c : coords) {
      if (c.layer != layer) {
        throw std::invalid_argument("selection for layer " + std::to_string(layer) +
                                    " contains coord " + to_string(c) +
                                    " from another layer");
      }
    }

    LayerSummary summary;
    summary.layer = layer;
    summary.depth = layer_depth(layer, meta.n_layers);
    summary.group = depth_group(summary.depth);
    summary.selected_coords = coords;

    std::vector<double> nies;
    if (mode == LayerMode::joint) {
      const MediatorSpec spec{coords};
      nies.reserve(pairs.size());
      for (const auto& ref : pairs) {
        const auto rec = natural_indirect_effect(model, *ref.control,
                                                 *ref.intervention, ref.match_id,
                                                 spec, alignment);
        nies.push_back(*rec.nie);
      }
    } else {
      nies.reserve(coords.size());
      for (const auto& coord : coords) {
        const auto effect =
            compute_coord_effect(model, pairs, coord, alignment);
        nies.push_back(effect.mean_nie);
      }
    }
    summary.mean_nie = sample_mean(nies);
    summary.sd_nie = sample_sd(nies);
    summary.n = nies.size();
    out.push_back(std::move(summary));
  }
  return out;
}

GroupAccuracy group_accuracy(const ModelAdapter& model,
                             const std::vector<MatchedSet>& dataset) {
  GroupAccuracy acc;
  for (const auto& set : dataset) {
    acc.control_total += 1;
    if (model.predict(set.control).argmax() == Label::entailment) {
      acc.control_correct += 1;
    }
    for (const auto& iv : set.interventions) {
      acc.intervention_total += 1;
      if (model.predict(iv).argmax() != Label::entailment) {
        acc.intervention_correct += 1;
      }
    }
  }
  if (acc.control_total == 0 || acc.intervention_total == 0) {
    throw std::invalid_argument("group accuracy over an empty group");
  }
  acc.control_pct = 100.0 * static_cast<double>(acc.control_correct) /
                    static_cast<double>(acc.control_total);
  acc.intervention_pct = 100.0 * static_cast<double>(acc.intervention_correct) /
                         static_cast<double>(acc.intervention_total);
  return acc;
}

}  // namespace distcma
