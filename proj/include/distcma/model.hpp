#pragma once

#include <utility>

#include "distcma/dataset.hpp"
#include "distcma/types.hpp"

namespace distcma {

// Contract a classifier must satisfy to be analyzed. Implementations must be
// read-only after construction; meta().thread_safe declares whether
// concurrent calls on one instance are allowed (the sweep scheduler
// serializes calls when it is false).
class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;

  virtual ModelMeta meta() const = 0;

  // Deterministic label distribution for the rendered pair. Throws when the
  // input exceeds the model's maximum sequence length.
  virtual LabelDistribution predict(const NliPair& pair) const = 0;

  // Same forward pass, additionally recording the activation of every coord
  // in `spec` at every token position. The returned distribution equals
  // predict(pair).
  virtual std::pair<LabelDistribution, ActivationSnapshot> predict_with_capture(
      const NliPair& pair, const MediatorSpec& spec) const = 0;

  // Forward pass in which each snapshot coord is overwritten with the
  // snapshot value at every aligned token position before downstream
  // computation. strict alignment requires equal tokenized lengths;
  // min_length patches the shared prefix of positions.
  virtual LabelDistribution predict_with_patch(const NliPair& pair,
                                               const ActivationSnapshot& snapshot,
                                               Alignment alignment) const = 0;
};

}  // namespace distcma
