#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace distcma {

// Ternary NLI labels in canonical order.
enum class Label { entailment, neutral, contradiction };

std::string to_string(Label label);
Label label_from_string(const std::string& s);

// Gold label of a generated pair. Non-entailment covers neutral and
// contradiction, which are both acceptable for ambiguous predicates.
enum class PairLabel { entailment, non_entailment };

std::string to_string(PairLabel label);
PairLabel pair_label_from_string(const std::string& s);

// Probabilities over the three NLI labels, as produced by a classifier.
struct LabelDistribution {
  double p_entailment = 0.0;
  double p_neutral = 0.0;
  double p_contradiction = 0.0;

  double p(Label label) const;
  double p_non_entailment() const { return p_neutral + p_contradiction; }
  Label argmax() const;

  // Throws std::invalid_argument unless each component lies in [0,1] and
  // they sum to 1 within 1e-6.
  void validate() const;
};

// Static description of a classifier under analysis.
struct ModelMeta {
  std::string name;
  int n_layers = 0;
  int hidden_size = 0;
  std::int64_t n_parameters = 0;
  std::int64_t vocab_size = 0;
  std::array<Label, 3> label_order = {Label::entailment, Label::neutral,
                                      Label::contradiction};
  bool thread_safe = false;

  void validate() const;
};

// A (layer, neuron) coordinate into the per-layer hidden states.
struct ActivationCoord {
  int layer = 0;
  int neuron = 0;

  auto operator<=>(const ActivationCoord&) const = default;
};

std::string to_string(const ActivationCoord& coord);

// The hypothesized mediator: one neuron or a group of neurons.
struct MediatorSpec {
  std::vector<ActivationCoord> coords;

  MediatorSpec() = default;
  explicit MediatorSpec(std::vector<ActivationCoord> cs) : coords(std::move(cs)) {}
  static MediatorSpec single(ActivationCoord c) { return MediatorSpec({c}); }

  bool operator==(const MediatorSpec&) const = default;

  // Throws unless non-empty, free of duplicates, and within the given bounds.
  void validate(int n_layers, int hidden_size) const;
};

// Captured activation values: one vector of per-token values per coordinate.
struct ActivationSnapshot {
  std::vector<ActivationCoord> coords;
  std::vector<std::vector<double>> values;  // values[i][t], len == seq_len
  std::size_t seq_len = 0;

  void validate() const;
};

// How snapshot token positions are aligned onto the patched input.
enum class Alignment { strict, min_length };

std::string to_string(Alignment a);
Alignment alignment_from_string(const std::string& s);

}  // namespace distcma
