#include "distcma/toy_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "distcma/rng.hpp"

namespace distcma {

namespace {

constexpr int kSeqLen = 9;
constexpr int kHidden = 16;
constexpr int kLayers = 4;  // state 0 is the embedding output

// Channel layout. Channels 1 and 4 are written by nothing after the
// embedding and read by nothing at all.
constexpr int kChAmbA = 2;
constexpr int kChAmbB = 3;
constexpr int kChDead = 4;
constexpr int kChStar = 5;
constexpr int kChCopyA = 6;
constexpr int kChCopyB = 7;
constexpr int kChFinalA = 8;
constexpr int kChFinalB = 9;
constexpr int kChNoise = 10;
constexpr int kNoiseDims = 6;

constexpr double kBias[3] = {2.0, 0.0, -1.0};
constexpr double kSignalWeight[3] = {-3.0, 1.5, 0.5};
constexpr double kNoiseWeight[3][2] = {{0.30, -0.20}, {-0.25, 0.30}, {0.15, 0.25}};
constexpr double kCopyWeightA = 0.6;
constexpr double kCopyWeightB = 0.4;
constexpr std::uint64_t kVocabBuckets = 4096;

using State = std::array<std::array<double, kHidden>, kSeqLen>;

LabelDistribution softmax3(const std::array<double, 3>& z) {
  const double zmax = std::max({z[0], z[1], z[2]});
  const double e0 = std::exp(z[0] - zmax);
  const double e1 = std::exp(z[1] - zmax);
  const double e2 = std::exp(z[2] - zmax);
  const double sum = e0 + e1 + e2;
  LabelDistribution d;
  d.p_entailment = e0 / sum;
  d.p_neutral = e1 / sum;
  d.p_contradiction = e2 / sum;
  return d;
}

bool is_marked_ambiguous(const std::string& token) {
  return token.rfind("amb:", 0) == 0;
}

struct PatchEntry {
  int neuron = 0;
  std::size_t n_aligned = 0;
  const std::vector<double>* values = nullptr;
};

void require_renderable(const NliPair& pair) {
  if (pair.dp1.text.empty() || pair.dp2.text.empty() || pair.predicate.text.empty()) {
    throw std::invalid_argument("pair does not render to non-empty text");
  }
}

}  // namespace

ToyModel::ToyModel(std::uint64_t seed)
    : noise_salt_(splitmix64(seed ^ 0x9e3779b97f4a7c15ULL)) {}

std::unique_ptr<ToyModel> construct_toy_model(std::uint64_t seed) {
  return std::make_unique<ToyModel>(seed);
}

ModelMeta ToyModel::meta() const {
  ModelMeta m;
  m.name = "toy";
  m.n_layers = kLayers;
  m.hidden_size = kHidden;
  // Embedding table plus three 16x16 layer maps plus the 3x16 readout and
  // its bias, counted as if the construction were dense.
  m.n_parameters = static_cast<std::int64_t>(kVocabBuckets) * kHidden +
                   3 * kHidden * kHidden + 3 * kHidden + 3;
  m.vocab_size = static_cast<std::int64_t>(kVocabBuckets);
  m.thread_safe = true;
  return m;
}

ActivationCoord ToyModel::star_coord() const { return {1, kChStar}; }
ActivationCoord ToyModel::dead_coord() const { return {2, kChDead}; }

double ToyModel::token_noise(const std::string& token, int dim) const {
  if (dim < 0 || dim >= kNoiseDims) {
    throw std::out_of_range("toy noise dim out of range");
  }
  const std::uint64_t bucket = fnv1a64(token) % kVocabBuckets;
  const std::uint64_t bits =
      splitmix64(noise_salt_ ^ (bucket * 131 + static_cast<std::uint64_t>(dim) + 1));
  return static_cast<double>(bits >> 11) * 0x1p-53 - 0.5;
}

std::vector<std::string> ToyModel::tokenize(const NliPair& pair) {
  const std::string pred_token =
      (pair.predicate.distributivity_type == Distributivity::ambiguous ? "amb:"
                                                                       : "dist:") +
      pair.predicate.text;
  return {pair.dp1.text, "and",   pair.dp2.text,       pred_token, ".",
          "[SEP]",       pair.subject().text, pred_token, "."};
}

namespace {

// Computes all layer states, overwriting patched coords as soon as their
// layer's state exists so that downstream computation sees the patch.
std::array<State, kLayers> run_layers(
    const ToyModel& model, const std::vector<std::string>& tokens,
    const std::array<std::vector<PatchEntry>, kLayers>& patches) {
  std::array<State, kLayers> states;

  State& emb = states[0];
  for (int t = 0; t < kSeqLen; ++t) {
    emb[t].fill(0.0);
    emb[t][0] = 1.0;
    if (is_marked_ambiguous(tokens[t])) {
      emb[t][kChAmbA] = 0.5;
      emb[t][kChAmbB] = 0.5;
    }
    for (int d = 0; d < kNoiseDims; ++d) {
      emb[t][kChNoise + d] = model.token_noise(tokens[t], d);
    }
  }

  auto apply_patches = [&](int layer) {
    for (const PatchEntry& p : patches[layer]) {
      for (std::size_t t = 0; t < p.n_aligned; ++t) {
        states[layer][t][p.neuron] = (*p.values)[t];
      }
    }
  };
  apply_patches(0);

  for (int layer = 1; layer < kLayers; ++layer) {
    const State& prev = states[layer - 1];
    State& next = states[layer];
    next = prev;
    if (layer == 1) {
      double pooled = 0.0;
      for (int t = 0; t < kSeqLen; ++t) pooled += prev[t][kChAmbA] + prev[t][kChAmbB];
      pooled *= 0.5;
      for (int t = 0; t < kSeqLen; ++t) next[t][kChStar] = pooled;
    } else if (layer == 2) {
      for (int t = 0; t < kSeqLen; ++t) {
        next[t][kChCopyA] = prev[t][kChStar];
        next[t][kChCopyB] = prev[t][kChStar];
      }
    } else {
      for (int t = 0; t < kSeqLen; ++t) {
        next[t][kChFinalA] = prev[t][kChCopyA];
        next[t][kChFinalB] = prev[t][kChCopyB];
      }
    }
    apply_patches(layer);
  }
  return states;
}

LabelDistribution readout(const State& final_state) {
  const double mix = kCopyWeightA * final_state[0][kChFinalA] +
                     kCopyWeightB * final_state[0][kChFinalB];
  std::array<double, 3> z;
  for (int c = 0; c < 3; ++c) {
    z[c] = kBias[c] + kSignalWeight[c] * mix +
           kNoiseWeight[c][0] * final_state[0][kChNoise] +
           kNoiseWeight[c][1] * final_state[0][kChNoise + 1];
  }
  return softmax3(z);
}

}  // namespace

LabelDistribution ToyModel::predict(const NliPair& pair) const {
  require_renderable(pair);
  const std::array<std::vector<PatchEntry>, kLayers> no_patches{};
  const auto states = run_layers(*this, tokenize(pair), no_patches);
  return readout(states[kLayers - 1]);
}

std::pair<LabelDistribution, ActivationSnapshot> ToyModel::predict_with_capture(
    const NliPair& pair, const MediatorSpec& spec) const {
  require_renderable(pair);
  spec.validate(kLayers, kHidden);
  const std::array<std::vector<PatchEntry>, kLayers> no_patches{};
  const auto states = run_layers(*this, tokenize(pair), no_patches);

  ActivationSnapshot snap;
  snap.coords = spec.coords;
  snap.seq_len = kSeqLen;
  snap.values.reserve(spec.coords.size());
  for (const auto& coord : spec.coords) {
    std::vector<double> row(kSeqLen);
    for (int t = 0; t < kSeqLen; ++t) row[t] = states[coord.layer][t][coord.neuron];
    snap.values.push_back(std::move(row));
  }
  return {readout(states[kLayers - 1]), std::move(snap)};
}

LabelDistribution ToyModel::predict_with_patch(const NliPair& pair,
                                               const ActivationSnapshot& snapshot,
                                               Alignment alignment) const {
  require_renderable(pair);
  snapshot.validate();
  if (alignment == Alignment::strict && snapshot.seq_len != kSeqLen) {
    throw std::runtime_error("strict alignment: snapshot length " +
                             std::to_string(snapshot.seq_len) +
                             " does not match input length " + std::to_string(kSeqLen));
  }
  const std::size_t aligned =
      std::min<std::size_t>(snapshot.seq_len, static_cast<std::size_t>(kSeqLen));

  std::array<std::vector<PatchEntry>, kLayers> patches;
  for (std::size_t i = 0; i < snapshot.coords.size(); ++i) {
    const auto& coord = snapshot.coords[i];
    if (coord.layer < 0 || coord.layer >= kLayers || coord.neuron < 0 ||
        coord.neuron >= kHidden) {
      throw std::out_of_range("patch coord " + to_string(coord) +
                              " outside model bounds");
    }
    patches[coord.layer].push_back({coord.neuron, aligned, &snapshot.values[i]});
  }
  const auto states = run_layers(*this, tokenize(pair), patches);
  return readout(states[kLayers - 1]);
}

LabelDistribution ToyModel::closed_form(const NliPair& pair) const {
  require_renderable(pair);
  const double signal =
      pair.predicate.distributivity_type == Distributivity::ambiguous ? 1.0 : 0.0;
  const double mix = kCopyWeightA * signal + kCopyWeightB * signal;
  const double n0 = token_noise(pair.dp1.text, 0);
  const double n1 = token_noise(pair.dp1.text, 1);
  std::array<double, 3> z;
  for (int c = 0; c < 3; ++c) {
    z[c] = kBias[c] + kSignalWeight[c] * mix + kNoiseWeight[c][0] * n0 +
           kNoiseWeight[c][1] * n1;
  }
  return softmax3(z);
}

}  // namespace distcma
