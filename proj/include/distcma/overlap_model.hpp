#pragma once

#include <memory>
#include <vector>

#include "distcma/model.hpp"

namespace distcma {

// Baseline whose output is a fixed function of one number: the fraction of
// hypothesis tokens that also occur in the premise. Predicate swaps inside
// the coordination templates leave that fraction at 1, so every effect
// computed against this model is exactly zero. The fraction is written to
// neuron 0 of the single hidden layer at every token position, which is the
// only activation the readout consumes.
class OverlapBaseline : public ModelAdapter {
 public:
  OverlapBaseline() = default;

  ModelMeta meta() const override;
  LabelDistribution predict(const NliPair& pair) const override;
  std::pair<LabelDistribution, ActivationSnapshot> predict_with_capture(
      const NliPair& pair, const MediatorSpec& spec) const override;
  LabelDistribution predict_with_patch(const NliPair& pair,
                                       const ActivationSnapshot& snapshot,
                                       Alignment alignment) const override;

  // Fraction of hypothesis tokens present in the premise token set; 0 for
  // an empty hypothesis.
  static double overlap_ratio(const NliPair& pair);
  // Premise tokens followed by hypothesis tokens.
  static std::vector<std::string> tokenize(const NliPair& pair);
};

std::unique_ptr<OverlapBaseline> construct_overlap_baseline();

}  // namespace distcma
