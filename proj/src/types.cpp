#include "distcma/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace distcma {

std::string to_string(Label label) {
  switch (label) {
    case Label::entailment: return "entailment";
    case Label::neutral: return "neutral";
    case Label::contradiction: return "contradiction";
  }
  throw std::logic_error("unreachable label");
}

Label label_from_string(const std::string& s) {
  if (s == "entailment") return Label::entailment;
  if (s == "neutral") return Label::neutral;
  if (s == "contradiction") return Label::contradiction;
  throw std::invalid_argument("unknown label: '" + s + "'");
}

std::string to_string(PairLabel label) {
  return label == PairLabel::entailment ? "entailment" : "non_entailment";
}

PairLabel pair_label_from_string(const std::string& s) {
  if (s == "entailment") return PairLabel::entailment;
  if (s == "non_entailment") return PairLabel::non_entailment;
  throw std::invalid_argument("unknown pair label: '" + s + "'");
}

double LabelDistribution::p(Label label) const {
  switch (label) {
    case Label::entailment: return p_entailment;
    case Label::neutral: return p_neutral;
    case Label::contradiction: return p_contradiction;
  }
  throw std::logic_error("unreachable label");
}

Label LabelDistribution::argmax() const {
  Label best = Label::entailment;
  double best_p = p_entailment;
  if (p_neutral > best_p) { best = Label::neutral; best_p = p_neutral; }
  if (p_contradiction > best_p) best = Label::contradiction;
  return best;
}

void LabelDistribution::validate() const {
  for (double v : {p_entailment, p_neutral, p_contradiction}) {
    if (!(v >= 0.0 && v <= 1.0) || std::isnan(v)) {
      throw std::invalid_argument("label probability out of [0,1]");
    }
  }
  const double sum = p_entailment + p_neutral + p_contradiction;
  if (std::fabs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument("label probabilities sum to " +
                                std::to_string(sum) + ", expected 1");
  }
}

void ModelMeta::validate() const {
  if (name.empty()) throw std::invalid_argument("model name must be non-empty");
  if (n_layers < 1) throw std::invalid_argument("n_layers must be >= 1");
  if (hidden_size < 1) throw std::invalid_argument("hidden_size must be >= 1");
  if (n_parameters < 1) throw std::invalid_argument("n_parameters must be >= 1");
  if (vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
  auto sorted = label_order;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != std::array<Label, 3>{Label::entailment, Label::neutral,
                                     Label::contradiction}) {
    throw std::invalid_argument("label_order must be a permutation of the three labels");
  }
}

std::string to_string(const ActivationCoord& coord) {
  return std::to_string(coord.layer) + ":" + std::to_string(coord.neuron);
}

void MediatorSpec::validate(int n_layers, int hidden_size) const {
  if (coords.empty()) throw std::invalid_argument("mediator spec must be non-empty");
  std::set<ActivationCoord> seen;
  for (const auto& c : coords) {
    if (c.layer < 0 || c.layer >= n_layers) {
      throw std::out_of_range("mediator layer " + std::to_string(c.layer) +
                              " outside [0, " + std::to_string(n_layers) + ")");
    }
    if (c.neuron < 0 || c.neuron >= hidden_size) {
      throw std::out_of_range("mediator neuron " + std::to_string(c.neuron) +
                              " outside [0, " + std::to_string(hidden_size) + ")");
    }
    if (!seen.insert(c).second) {
      throw std::invalid_argument("duplicate mediator coordinate " + to_string(c));
    }
  }
}

void ActivationSnapshot::validate() const {
  if (coords.size() != values.size()) {
    throw std::invalid_argument("snapshot coords/values size mismatch");
  }
  for (const auto& v : values) {
    if (v.size() != seq_len) {
      throw std::invalid_argument("snapshot value vector length != seq_len");
    }
  }
}

std::string to_string(Alignment a) {
  return a == Alignment::strict ? "strict" : "min_length";
}

Alignment alignment_from_string(const std::string& s) {
  if (s == "strict") return Alignment::strict;
  if (s == "min_length") return Alignment::min_length;
  throw std::invalid_argument("unknown alignment mode: '" + s + "'");
}

}  // namespace distcma
