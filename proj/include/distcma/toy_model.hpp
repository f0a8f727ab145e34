#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "distcma/model.hpp"

namespace distcma {

// Analytically constructed classifier with a known mediation structure,
// used as the oracle for effect computations. It is built, not trained:
//
//   - The input is encoded as a fixed 9-token sequence over a closed
//     vocabulary; predicate tokens carry their distributivity type.
//   - The embedding marks ambiguous predicate tokens on two channels and
//     attaches per-token pseudo-random noise channels.
//   - Layer 1 pools the markers into a single "predicate is ambiguous" bit,
//     written to the star coordinate at every token position. All predicate
//     information downstream flows through that bit.
//   - Layers 2 and 3 fan the bit out over two copy channels which the
//     readout recombines, so the coordinates around the star coordinate
//     carry only partial shares of the signal.
//   - One coordinate is never read by anything and is provably
//     output-irrelevant.
//
// Consequences used by tests: NIE at the star coordinate equals TE for
// every matched pair, NDE there is zero, NIE at the dead coordinate is
// exactly zero, and a neuron sweep ranks the star coordinate strictly
// first. The readout depends on the first subject's noise channels, so
// per-pair effects vary while remaining unchanged under predicate swaps.
class ToyModel : public ModelAdapter {
 public:
  explicit ToyModel(std::uint64_t seed);

  ModelMeta meta() const override;
  LabelDistribution predict(const NliPair& pair) const override;
  std::pair<LabelDistribution, ActivationSnapshot> predict_with_capture(
      const NliPair& pair, const MediatorSpec& spec) const override;
  LabelDistribution predict_with_patch(const NliPair& pair,
                                       const ActivationSnapshot& snapshot,
                                       Alignment alignment) const override;

  // The coordinate carrying the full predicate-type signal.
  ActivationCoord star_coord() const;
  // A coordinate no computation ever reads.
  ActivationCoord dead_coord() const;

  // Direct evaluation of the readout formula, bypassing the layered
  // forward pass; bitwise equal to predict() by construction.
  LabelDistribution closed_form(const NliPair& pair) const;

  // The embedding's noise value for a token, dim in [0, 6).
  double token_noise(const std::string& token, int dim) const;

  // The fixed 9-token encoding of a pair.
  static std::vector<std::string> tokenize(const NliPair& pair);

 private:
  std::uint64_t noise_salt_;
};

std::unique_ptr<ToyModel> construct_toy_model(std::uint64_t seed);

}  // namespace distcma
