#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace distcma {

enum class DpCategory { person, animal, object };

std::string to_string(DpCategory c);
DpCategory dp_category_from_string(const std::string& s);

enum class Distributivity { distributive, ambiguous };

std::string to_string(Distributivity d);
Distributivity distributivity_from_string(const std::string& s);

struct DeterminerPhrase {
  std::string text;
  DpCategory category = DpCategory::person;

  bool operator==(const DeterminerPhrase&) const = default;
};

struct Predicate {
  std::string text;
  Distributivity distributivity_type = Distributivity::distributive;
  bool is_phrasal = false;

  bool operator==(const Predicate&) const = default;
};

// The template vocabulary pairs are generated from. Loaded from a JSON file;
// see data/seed_lexicon.json for the shipped schema.
struct Lexicon {
  std::vector<DeterminerPhrase> determiner_phrases;
  std::vector<Predicate> predicates;
  std::vector<std::string> quantifier_blocklist;
  std::string version;
  std::string seed_note;

  std::vector<const Predicate*> predicates_of(Distributivity type) const;

  // Throws std::invalid_argument naming the offending entry and rule when:
  // a determiner phrase is empty or contains a blocklisted quantifier token,
  // a predicate is empty, or either distributivity type is missing.
  void validate() const;
};

// Parses and validates a lexicon file. Entries typed "collective" are
// accepted in the file but dropped: only distributive and ambiguous
// predicates take part in generation. Determiner phrases flagged as group
// nouns or conventionalized conjunctions are rejected.
Lexicon load_lexicon(const std::filesystem::path& path);
Lexicon parse_lexicon(const std::string& json_text, const std::string& origin);

// True when `token` occurs in `text` as a whole word (case-insensitive).
bool contains_word(const std::string& text, const std::string& token);

// Lowercased alphanumeric word split, shared by the blocklist scan and the
// overlap baseline.
std::vector<std::string> word_tokens(const std::string& text);

}  // namespace distcma
