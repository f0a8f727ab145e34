#include "distcma/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace distcma {

namespace {

using nlohmann::json;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::string to_string(DpCategory c) {
  switch (c) {
    case DpCategory::person: return "person";
    case DpCategory::animal: return "animal";
    case DpCategory::object: return "object";
  }
  throw std::logic_error("unreachable category");
}

DpCategory dp_category_from_string(const std::string& s) {
  if (s == "person") return DpCategory::person;
  if (s == "animal") return DpCategory::animal;
  if (s == "object") return DpCategory::object;
  throw std::invalid_argument("unknown determiner phrase category: '" + s + "'");
}

std::string to_string(Distributivity d) {
  return d == Distributivity::distributive ? "distributive" : "ambiguous";
}

Distributivity distributivity_from_string(const std::string& s) {
  if (s == "distributive") return Distributivity::distributive;
  if (s == "ambiguous") return Distributivity::ambiguous;
  throw std::invalid_argument("unknown distributivity type: '" + s + "'");
}

std::vector<std::string> word_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '\'') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool contains_word(const std::string& text, const std::string& token) {
  const auto words = word_tokens(text);
  const std::string needle = lower(token);
  return std::find(words.begin(), words.end(), needle) != words.end();
}

std::vector<const Predicate*> Lexicon::predicates_of(Distributivity type) const {
  std::vector<const Predicate*> out;
  for (const auto& p : predicates) {
    if (p.distributivity_type == type) out.push_back(&p);
  }
  return out;
}

void Lexicon::validate() const {
  for (const auto& dp : determiner_phrases) {
    if (dp.text.empty()) {
      throw std::invalid_argument("lexicon: determiner phrase with empty text");
    }
    for (const auto& q : quantifier_blocklist) {
      if (contains_word(dp.text, q)) {
        throw std::invalid_argument(
            "lexicon: determiner phrase '" + dp.text +
            "' contains blocklisted quantifier token '" + q + "'");
      }
    }
  }
  bool has_dist = false;
  bool has_amb = false;
  for (const auto& p : predicates) {
    if (p.text.empty()) {
      throw std::invalid_argument("lexicon: predicate with empty text");
    }
    if (p.distributivity_type == Distributivity::distributive) has_dist = true;
    else has_amb = true;
  }
  if (!has_dist) {
    throw std::invalid_argument("lexicon: missing predicate type 'distributive'");
  }
  if (!has_amb) {
    throw std::invalid_argument("lexicon: missing predicate type 'ambiguous'");
  }
}

Lexicon parse_lexicon(const std::string& json_text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(origin + ": lexicon parse failure: " + e.what());
  }

  Lexicon lex;
  try {
    lex.version = doc.value("version", "");
    lex.seed_note = doc.value("seed_note", "");
    for (const auto& q : doc.value("quantifier_blocklist", json::array())) {
      lex.quantifier_blocklist.push_back(q.get<std::string>());
    }
    for (const auto& entry : doc.at("determiner_phrases")) {
      DeterminerPhrase dp;
      dp.text = entry.at("text").get<std::string>();
      dp.category = dp_category_from_string(entry.at("category").get<std::string>());
      if (entry.value("group_noun", false)) {
        throw std::invalid_argument("determiner phrase '" + dp.text +
                                    "' is tagged as a group noun and cannot be used");
      }
      if (entry.value("conventionalized_conjunction", false)) {
        throw std::invalid_argument(
            "determiner phrase '" + dp.text +
            "' is tagged as a conventionalized conjunction and cannot be used");
      }
      lex.determiner_phrases.push_back(std::move(dp));
    }
    for (const auto& entry : doc.at("predicates")) {
      const auto type = entry.at("type").get<std::string>();
      if (type == "collective") continue;  // annotated but never generated from
      Predicate p;
      p.text = entry.at("text").get<std::string>();
      p.distributivity_type = distributivity_from_string(type);
      p.is_phrasal = entry.value("phrasal", false);
      lex.predicates.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(origin + ": lexicon schema violation: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(origin + ": " + e.what());
  }

  try {
    lex.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(origin + ": " + e.what());
  }
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open lexicon file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_lexicon(buf.str(), path.string());
}

}  // namespace distcma
