#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "distcma/lexicon.hpp"
#include "distcma/rng.hpp"
#include "distcma/types.hpp"

namespace distcma {

enum class HypothesisSubject { dp1, dp2 };

std::string to_string(HypothesisSubject s);
HypothesisSubject hypothesis_subject_from_string(const std::string& s);

// One premise-hypothesis pair. The premise coordinates two determiner
// phrases over a predicate; the hypothesis predicates one of them alone.
struct NliPair {
  std::string pair_id;
  std::string premise;
  std::string hypothesis;
  DeterminerPhrase dp1;
  DeterminerPhrase dp2;
  HypothesisSubject hypothesis_subject = HypothesisSubject::dp1;
  Predicate predicate;
  PairLabel label = PairLabel::entailment;

  bool operator==(const NliPair&) const = default;

  const DeterminerPhrase& subject() const {
    return hypothesis_subject == HypothesisSubject::dp1 ? dp1 : dp2;
  }

  // Checks the template rendering, the label rule and dp1 != dp2.
  void validate() const;
};

// "[DP1] and [DP2] [Pred]." with the first letter capitalized.
std::string render_premise(const DeterminerPhrase& dp1, const DeterminerPhrase& dp2,
                           const Predicate& pred);
// "[DP] [Pred]." with the first letter capitalized.
std::string render_hypothesis(const DeterminerPhrase& dp, const Predicate& pred);

// The label is decided purely by the predicate type: distributive predicates
// license the group-to-part entailment, ambiguous ones do not.
PairLabel label_for(const Predicate& pred);

// Builds a fully rendered pair from its parts.
NliPair make_pair(std::string pair_id, const DeterminerPhrase& dp1,
                  const DeterminerPhrase& dp2, HypothesisSubject subject,
                  const Predicate& pred);

// A control pair bound to its intervention counterparts. Interventions share
// the control's subjects and hypothesis subject; only the predicate differs.
struct MatchedSet {
  std::string match_id;
  NliPair control;
  std::vector<NliPair> interventions;

  bool operator==(const MatchedSet&) const = default;

  void validate() const;
};

// Replaces the predicate with one of the opposite distributivity type,
// sampled uniformly from the lexicon; label and rendered text follow.
NliPair swap_pred(const NliPair& pair, const Lexicon& lexicon, Rng& rng);

// The identity intervention.
NliPair null_op(const NliPair& pair);

// Deterministically generates `max_pairs_per_group` matched sets, each
// holding one control pair (distributive predicate, label entailment) and
// one intervention pair (ambiguous predicate, label non_entailment).
// Subjects are drawn within a category; both part-hypotheses of an
// instantiated premise are emitted as separate sets.
std::vector<MatchedSet> generate_pairs(const Lexicon& lexicon, std::uint64_t rng_seed,
                                       std::size_t max_pairs_per_group);

// JSONL serialization: one object per pair, controls first within each set.
std::string dataset_to_jsonl(const std::vector<MatchedSet>& sets);
std::vector<MatchedSet> dataset_from_jsonl(const std::string& text,
                                           const std::string& origin);

void write_dataset(const std::vector<MatchedSet>& sets,
                   const std::filesystem::path& path);
std::vector<MatchedSet> read_dataset(const std::filesystem::path& path);

// Hash of the serialized dataset, recorded in manifests and sweep
// checkpoints to tie results to their inputs.
std::uint64_t dataset_fingerprint(const std::vector<MatchedSet>& sets);

}  // namespace distcma
