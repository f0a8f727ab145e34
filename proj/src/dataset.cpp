#include "distcma/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace distcma {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string capitalize_first(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string zero_pad(std::size_t n, int width) {
  std::string s = std::to_string(n);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

std::string to_string(HypothesisSubject s) {
  return s == HypothesisSubject::dp1 ? "dp1" : "dp2";
}

HypothesisSubject hypothesis_subject_from_string(const std::string& s) {
  if (s == "dp1") return HypothesisSubject::dp1;
  if (s == "dp2") return HypothesisSubject::dp2;
  throw std::invalid_argument("unknown hypothesis subject: '" + s + "'");
}

std::string render_premise(const DeterminerPhrase& dp1, const DeterminerPhrase& dp2,
                           const Predicate& pred) {
  return capitalize_first(dp1.text + " and " + dp2.text + " " + pred.text + ".");
}

std::string render_hypothesis(const DeterminerPhrase& dp, const Predicate& pred) {
  return capitalize_first(dp.text + " " + pred.text + ".");
}

PairLabel label_for(const Predicate& pred) {
  return pred.distributivity_type == Distributivity::distributive
             ? PairLabel::entailment
             : PairLabel::non_entailment;
}

NliPair make_pair(std::string pair_id, const DeterminerPhrase& dp1,
                  const DeterminerPhrase& dp2, HypothesisSubject subject,
                  const Predicate& pred) {
  NliPair pair;
  pair.pair_id = std::move(pair_id);
  pair.dp1 = dp1;
  pair.dp2 = dp2;
  pair.hypothesis_subject = subject;
  pair.predicate = pred;
  pair.premise = render_premise(dp1, dp2, pred);
  pair.hypothesis = render_hypothesis(pair.subject(), pred);
  pair.label = label_for(pred);
  pair.validate();
  return pair;
}

void NliPair::validate() const {
  if (premise != render_premise(dp1, dp2, predicate)) {
    throw std::invalid_argument("pair '" + pair_id +
                                "': premise does not match the rendered template");
  }
  if (hypothesis != render_hypothesis(subject(), predicate)) {
    throw std::invalid_argument("pair '" + pair_id +
                                "': hypothesis does not match the rendered template");
  }
  if (label != label_for(predicate)) {
    throw std::invalid_argument(
        "pair '" + pair_id + "': label '" + to_string(label) +
        "' inconsistent with predicate type '" +
        to_string(predicate.distributivity_type) + "'");
  }
  if (dp1.text == dp2.text) {
    throw std::invalid_argument("pair '" + pair_id + "': dp1 and dp2 coincide");
  }
}

void MatchedSet::validate() const {
  control.validate();
  if (control.predicate.distributivity_type != Distributivity::distributive) {
    throw std::invalid_argument("matched set '" + match_id +
                                "': control predicate is not distributive");
  }
  if (interventions.empty()) {
    throw std::invalid_argument("matched set '" + match_id + "': no interventions");
  }
  for (const auto& iv : interventions) {
    iv.validate();
    if (iv.predicate.distributivity_type != Distributivity::ambiguous) {
      throw std::invalid_argument("matched set '" + match_id +
                                  "': intervention predicate is not ambiguous");
    }
    if (iv.dp1 != control.dp1 || iv.dp2 != control.dp2 ||
        iv.hypothesis_subject != control.hypothesis_subject) {
      throw std::invalid_argument("matched set '" + match_id +
                                  "': intervention subjects differ from control");
    }
  }
}

NliPair swap_pred(const NliPair& pair, const Lexicon& lexicon, Rng& rng) {
  const Distributivity wanted =
      pair.predicate.distributivity_type == Distributivity::distributive
          ? Distributivity::ambiguous
          : Distributivity::distributive;
  const auto candidates = lexicon.predicates_of(wanted);
  if (candidates.empty()) {
    throw std::runtime_error("swap_pred: lexicon has no predicate of type '" +
                             to_string(wanted) + "'");
  }
  const Predicate& chosen = *candidates[rng.uniform_index(candidates.size())];
  return make_pair(pair.pair_id, pair.dp1, pair.dp2, pair.hypothesis_subject, chosen);
}

NliPair null_op(const NliPair& pair) { return pair; }

std::vector<MatchedSet> generate_pairs(const Lexicon& lexicon, std::uint64_t rng_seed,
                                       std::size_t max_pairs_per_group) {
  if (max_pairs_per_group < 1) {
    throw std::invalid_argument("max_pairs_per_group must be >= 1");
  }
  lexicon.validate();

  // Subject slots: ordered same-category pairs with distinct texts.
  struct SubjectPair { const DeterminerPhrase* dp1; const DeterminerPhrase* dp2; };
  std::vector<SubjectPair> slots;
  for (const auto& a : lexicon.determiner_phrases) {
    for (const auto& b : lexicon.determiner_phrases) {
      if (a.category == b.category && a.text != b.text) slots.push_back({&a, &b});
    }
  }
  const auto dist = lexicon.predicates_of(Distributivity::distributive);
  const auto amb = lexicon.predicates_of(Distributivity::ambiguous);
  if (slots.empty() || dist.empty() || amb.empty()) {
    throw std::runtime_error(
        "generate_pairs: lexicon too small to form any matched set");
  }

  Rng rng(rng_seed);
  // Deterministic Fisher-Yates.
  for (std::size_t i = slots.size(); i > 1; --i) {
    std::swap(slots[i - 1], slots[rng.uniform_index(i)]);
  }

  std::vector<MatchedSet> sets;
  sets.reserve(max_pairs_per_group);
  std::set<std::string> used;  // dp1|dp2|control-pred|intervention-pred
  std::size_t attempts = 0;
  const std::size_t max_attempts = 50 * max_pairs_per_group + slots.size();
  std::size_t slot_idx = 0;
  while (sets.size() < max_pairs_per_group) {
    if (++attempts > max_attempts) {
      throw std::runtime_error(
          "generate_pairs: lexicon too small to form " +
          std::to_string(max_pairs_per_group) + " matched sets");
    }
    const auto& slot = slots[slot_idx];
    slot_idx = (slot_idx + 1) % slots.size();

    const Predicate& pred_c = *dist[rng.uniform_index(dist.size())];
    const Predicate& pred_i = *amb[rng.uniform_index(amb.size())];
    const std::string key =
        slot.dp1->text + "|" + slot.dp2->text + "|" + pred_c.text + "|" + pred_i.text;
    if (!used.insert(key).second) continue;

    // Both part-hypotheses of the instantiated premise become their own sets.
    for (auto subject : {HypothesisSubject::dp1, HypothesisSubject::dp2}) {
      if (sets.size() >= max_pairs_per_group) break;
      MatchedSet set;
      set.match_id = "m" + zero_pad(sets.size(), 4);
      set.control = make_pair(set.match_id + "-c", *slot.dp1, *slot.dp2, subject, pred_c);
      set.interventions.push_back(
          make_pair(set.match_id + "-i0", *slot.dp1, *slot.dp2, subject, pred_i));
      set.validate();
      sets.push_back(std::move(set));
    }
  }
  return sets;
}

namespace {

ordered_json pair_to_json(const NliPair& pair, const std::string& group,
                          const std::string& match_id) {
  ordered_json row;
  row["pair_id"] = pair.pair_id;
  row["group"] = group;
  row["match_id"] = match_id;
  row["premise"] = pair.premise;
  row["hypothesis"] = pair.hypothesis;
  row["dp1"] = {{"text", pair.dp1.text}, {"category", to_string(pair.dp1.category)}};
  row["dp2"] = {{"text", pair.dp2.text}, {"category", to_string(pair.dp2.category)}};
  row["hypothesis_subject"] = to_string(pair.hypothesis_subject);
  row["predicate"] = pair.predicate.text;
  row["predicate_type"] = to_string(pair.predicate.distributivity_type);
  row["predicate_phrasal"] = pair.predicate.is_phrasal;
  row["label"] = to_string(pair.label);
  return row;
}

NliPair pair_from_json(const ordered_json& row) {
  NliPair pair;
  pair.pair_id = row.at("pair_id").get<std::string>();
  pair.premise = row.at("premise").get<std::string>();
  pair.hypothesis = row.at("hypothesis").get<std::string>();
  pair.dp1.text = row.at("dp1").at("text").get<std::string>();
  pair.dp1.category =
      dp_category_from_string(row.at("dp1").at("category").get<std::string>());
  pair.dp2.text = row.at("dp2").at("text").get<std::string>();
  pair.dp2.category =
      dp_category_from_string(row.at("dp2").at("category").get<std::string>());
  pair.hypothesis_subject =
      hypothesis_subject_from_string(row.at("hypothesis_subject").get<std::string>());
  pair.predicate.text = row.at("predicate").get<std::string>();
  pair.predicate.distributivity_type =
      distributivity_from_string(row.at("predicate_type").get<std::string>());
  pair.predicate.is_phrasal = row.value("predicate_phrasal", false);
  pair.label = pair_label_from_string(row.at("label").get<std::string>());
  pair.validate();
  return pair;
}

}  // namespace

std::string dataset_to_jsonl(const std::vector<MatchedSet>& sets) {
  std::string out;
  for (const auto& set : sets) {
    set.validate();
    out += pair_to_json(set.control, "control", set.match_id).dump();
    out += '\n';
    for (const auto& iv : set.interventions) {
      out += pair_to_json(iv, "intervention", set.match_id).dump();
      out += '\n';
    }
  }
  return out;
}

std::vector<MatchedSet> dataset_from_jsonl(const std::string& text,
                                           const std::string& origin) {
  std::vector<MatchedSet> sets;
  std::map<std::string, std::size_t> index_of;  // match_id -> sets index
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json row;
    try {
      row = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": invalid JSON: " + e.what());
    }
    try {
      const auto group = row.at("group").get<std::string>();
      const auto match_id = row.at("match_id").get<std::string>();
      NliPair pair = pair_from_json(row);
      auto it = index_of.find(match_id);
      if (it == index_of.end()) {
        index_of.emplace(match_id, sets.size());
        sets.push_back(MatchedSet{match_id, {}, {}});
        it = index_of.find(match_id);
      }
      MatchedSet& set = sets[it->second];
      if (group == "control") {
        if (!set.control.pair_id.empty()) {
          throw std::invalid_argument("duplicate control for match '" + match_id + "'");
        }
        set.control = std::move(pair);
      } else if (group == "intervention") {
        set.interventions.push_back(std::move(pair));
      } else {
        throw std::invalid_argument("unknown group '" + group + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": schema violation: " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (const auto& set : sets) {
    try {
      set.validate();
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(origin + ": " + e.what());
    }
  }
  return sets;
}

void write_dataset(const std::vector<MatchedSet>& sets,
                   const std::filesystem::path& path) {
  const std::string payload = dataset_to_jsonl(sets);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << payload;
  if (!out) throw std::runtime_error("write failure: " + path.string());
}

std::vector<MatchedSet> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return dataset_from_jsonl(buf.str(), path.string());
}

std::uint64_t dataset_fingerprint(const std::vector<MatchedSet>& sets) {
  return fnv1a64(dataset_to_jsonl(sets));
}

}  // namespace distcma
