#include "distcma/overlap_model.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "distcma/lexicon.hpp"

namespace distcma {

namespace {

constexpr int kHidden = 8;
constexpr std::size_t kMaxSeqLen = 256;

// p_entailment rises linearly with the overlap ratio; the remainder is
// split with fixed weights between neutral and contradiction.
constexpr double kEntailFloor = 0.05;
constexpr double kEntailSlope = 0.90;
constexpr double kNeutralShare = 0.7;

LabelDistribution distribution_for(double ratio) {
  // Patched activations may fall outside the ratio's natural range; keep
  // the output a valid distribution.
  const double r = std::clamp(ratio, 0.0, 1.0);
  const double p_e = kEntailFloor + kEntailSlope * r;
  LabelDistribution d;
  d.p_entailment = p_e;
  d.p_neutral = kNeutralShare * (1.0 - p_e);
  d.p_contradiction = (1.0 - kNeutralShare) * (1.0 - p_e);
  return d;
}

}  // namespace

std::unique_ptr<OverlapBaseline> construct_overlap_baseline() {
  return std::make_unique<OverlapBaseline>();
}

ModelMeta OverlapBaseline::meta() const {
  ModelMeta m;
  m.name = "overlap";
  m.n_layers = 1;
  m.hidden_size = kHidden;
  m.n_parameters = 4;  // floor, slope, share, and the ratio weight
  m.vocab_size = 65536;
  m.thread_safe = true;
  return m;
}

std::vector<std::string> OverlapBaseline::tokenize(const NliPair& pair) {
  auto tokens = word_tokens(pair.premise);
  const auto hyp = word_tokens(pair.hypothesis);
  tokens.insert(tokens.end(), hyp.begin(), hyp.end());
  return tokens;
}

double OverlapBaseline::overlap_ratio(const NliPair& pair) {
  const auto premise = word_tokens(pair.premise);
  const auto hypothesis = word_tokens(pair.hypothesis);
  if (hypothesis.empty()) return 0.0;
  const std::set<std::string> premise_set(premise.begin(), premise.end());
  std::size_t hits = 0;
  for (const auto& tok : hypothesis) hits += premise_set.count(tok);
  return static_cast<double>(hits) / static_cast<double>(hypothesis.size());
}

LabelDistribution OverlapBaseline::predict(const NliPair& pair) const {
  if (pair.premise.empty() || pair.hypothesis.empty()) {
    throw std::invalid_argument("pair does not render to non-empty text");
  }
  if (tokenize(pair).size() > kMaxSeqLen) {
    throw std::invalid_argument("input exceeds the maximum sequence length");
  }
  return distribution_for(overlap_ratio(pair));
}

std::pair<LabelDistribution, ActivationSnapshot> OverlapBaseline::predict_with_capture(
    const NliPair& pair, const MediatorSpec& spec) const {
  spec.validate(1, kHidden);
  const auto tokens = tokenize(pair);
  const double ratio = overlap_ratio(pair);

  ActivationSnapshot snap;
  snap.coords = spec.coords;
  snap.seq_len = tokens.size();
  snap.values.reserve(spec.coords.size());
  for (const auto& coord : spec.coords) {
    snap.values.emplace_back(tokens.size(), coord.neuron == 0 ? ratio : 0.0);
  }
  return {predict(pair), std::move(snap)};
}

LabelDistribution OverlapBaseline::predict_with_patch(const NliPair& pair,
                                                      const ActivationSnapshot& snapshot,
                                                      Alignment alignment) const {
  snapshot.validate();
  const auto tokens = tokenize(pair);
  if (alignment == Alignment::strict && snapshot.seq_len != tokens.size()) {
    throw std::runtime_error("strict alignment: snapshot length " +
                             std::to_string(snapshot.seq_len) +
                             " does not match input length " +
                             std::to_string(tokens.size()));
  }
  const std::size_t aligned = std::min(snapshot.seq_len, tokens.size());

  // The readout consumes the position-0 activation of neuron 0; patches at
  // other coords land on activations nothing reads.
  double ratio = overlap_ratio(pair);
  for (std::size_t i = 0; i < snapshot.coords.size(); ++i) {
    const auto& coord = snapshot.coords[i];
    if (coord.layer != 0 || coord.neuron < 0 || coord.neuron >= kHidden) {
      throw std::out_of_range("patch coord " + to_string(coord) +
                              " outside model bounds");
    }
    if (coord.neuron == 0 && aligned > 0) ratio = snapshot.values[i][0];
  }
  return distribution_for(ratio);
}

}  // namespace distcma
