#include "erisk/readability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "erisk/data.hpp"
#include "erisk/error.hpp"

namespace erisk::readability {
namespace {

using annotate::Pos;

constexpr std::array<std::string_view, 12> kNames = {
    "lexical_complexity", "spaulding",        "sentence_complexity", "ari",
    "dep_tree_height_mean", "punctuation_marks", "fernandez_huerta",  "flesch_szigriszt",
    "gutierrez",          "mu_readability",   "min_age",             "sol"};

// Coefficient keys each formula must provide.
const std::map<std::string_view, std::vector<std::string>>& required_keys() {
  static const std::map<std::string_view, std::vector<std::string>> keys = {
      {"lexical_complexity", {"ldi_weight", "ilfw_weight"}},
      {"spaulding", {"words_per_sentence", "rare_word_proportion", "intercept"}},
      {"sentence_complexity", {}},
      {"ari", {"letters_per_word", "words_per_sentence", "intercept"}},
      {"dep_tree_height_mean", {}},
      {"punctuation_marks", {}},
      {"fernandez_huerta", {"intercept", "syllables_per_100_words", "sentences_per_100_words"}},
      {"flesch_szigriszt", {"intercept", "syllables_per_word", "words_per_sentence"}},
      {"gutierrez", {"intercept", "letters_per_word", "words_per_sentence"}},
      {"mu_readability", {"scale"}},
      {"min_age", {"intercept", "sentences_per_100_words", "syllables_per_100_words"}},
      {"sol", {"smog_intercept", "smog_slope", "smog_sentence_basis", "sol_intercept",
               "sol_slope", "polysyllable_min"}},
  };
  return keys;
}

bool is_content(Pos p) {
  return p == Pos::NOUN || p == Pos::PROPN || p == Pos::VERB || p == Pos::ADJ || p == Pos::ADV;
}

}  // namespace

std::array<double, 12> ReadabilityScores::values() const {
  return {lexical_complexity, spaulding,          sentence_complexity, ari,
          dep_tree_height_mean, punctuation_marks, fernandez_huerta,   flesch_szigriszt,
          gutierrez,          mu_readability,     min_age,             sol};
}

const std::array<std::string_view, 12>& metric_names() { return kNames; }

double Formula::at(const std::string& key) const {
  const auto it = coefficients.find(key);
  if (it == coefficients.end()) {
    throw ConfigError("formula '" + name + "' has no coefficient '" + key + "'");
  }
  return it->second;
}

FormulaRegistry::FormulaRegistry(std::vector<Formula> formulas,
                                 std::optional<std::unordered_set<std::string>> common_words)
    : common_words_(std::move(common_words)) {
  for (auto& f : formulas) {
    if (std::find(kNames.begin(), kNames.end(), f.name) == kNames.end()) {
      throw ConfigError("unknown readability formula '" + f.name + "'");
    }
    if (f.source.empty()) throw ConfigError("formula '" + f.name + "' has no source note");
    for (const auto& key : required_keys().at(f.name)) (void)f.at(key);
    const auto name = f.name;
    if (!formulas_.emplace(name, std::move(f)).second) {
      throw ConfigError("formula '" + name + "' listed twice");
    }
  }
  for (auto name : kNames) {
    if (!formulas_.contains(name)) {
      throw ConfigError("readability registry is missing '" + std::string(name) + "'");
    }
  }
}

FormulaRegistry FormulaRegistry::load(const std::filesystem::path& registry_file,
                                      const std::optional<std::filesystem::path>& word_list) {
  std::ifstream in(registry_file);
  if (!in) throw ConfigError("cannot open readability registry " + registry_file.string());
  std::vector<Formula> formulas;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Formula f;
      f.name = j.at("name").get<std::string>();
      f.source = j.at("source").get<std::string>();
      for (const auto& [k, v] : j.at("coefficients").items()) f.coefficients[k] = v.get<double>();
      formulas.push_back(std::move(f));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(registry_file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::optional<std::unordered_set<std::string>> words;
  if (word_list) {
    std::ifstream wl(*word_list);
    if (!wl) throw ConfigError("cannot open word list " + word_list->string());
    words.emplace();
    while (std::getline(wl, line)) {
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      words->insert(annotate::lowercase(line.substr(b, line.find_last_not_of(" \t\r") - b + 1)));
    }
  }
  return FormulaRegistry(std::move(formulas), std::move(words));
}

const FormulaRegistry& FormulaRegistry::bundled() {
  static const FormulaRegistry registry =
      load(bundled_data("readability_registry.jsonl"), bundled_data("common_words_en.txt"));
  return registry;
}

const Formula& FormulaRegistry::formula(std::string_view name) const {
  const auto it = formulas_.find(name);
  if (it == formulas_.end()) throw ConfigError("no formula '" + std::string(name) + "'");
  return it->second;
}

bool FormulaRegistry::is_common(const std::string& lowercase_word) const {
  if (!common_words_) throw ConfigError("readability registry has no common-word list");
  return common_words_->contains(lowercase_word);
}

TextCounts count(const annotate::AnnotatedDoc& doc, const FormulaRegistry& registry) {
  if (!registry.has_word_list()) {
    throw ConfigError("Spaulding readability needs a common-word list");
  }
  const auto poly_min = registry.formula("sol").at("polysyllable_min");
  TextCounts c;
  std::set<std::string> distinct_content;
  std::vector<double> word_letters;
  for (const auto& t : doc.tokens) {
    if (!t.is_word) continue;
    c.words += 1;
    c.syllables += t.syllables;
    c.letters += t.letters;
    word_letters.push_back(t.letters);
    const bool common = registry.is_common(t.lemma);
    if (!common) c.rare_words += 1;
    if (t.syllables >= poly_min) c.polysyllables += 1;
    if (is_content(t.pos)) {
      c.content_words += 1;
      distinct_content.insert(t.lemma);
      if (!common) c.low_frequency_content_words += 1;
    }
  }
  c.distinct_content_words = static_cast<double>(distinct_content.size());
  c.sentences = static_cast<double>(doc.sentences.size());
  c.punctuation = static_cast<double>(doc.punctuation_count);
  if (!word_letters.empty()) {
    const double mean = c.letters / c.words;
    double ss = 0;
    for (double l : word_letters) ss += (l - mean) * (l - mean);
    c.letters_variance = ss / c.words;
  }
  if (!doc.dep_tree_height.empty()) {
    double sum = 0;
    for (int h : doc.dep_tree_height) sum += h;
    c.dep_tree_height_mean = sum / static_cast<double>(doc.dep_tree_height.size());
  }
  return c;
}

ReadabilityScores from_counts(const TextCounts& c, const FormulaRegistry& registry) {
  if (c.words < 1) throw DomainError("readability needs at least one word");
  if (c.sentences < 1) throw DomainError("readability needs at least one sentence");

  const double W = c.words, S = c.sentences, Y = c.syllables, L = c.letters;
  auto f = [&](std::string_view name) -> const Formula& { return registry.formula(name); };
  ReadabilityScores r;

  r.sentence_complexity = W / S;
  r.punctuation_marks = c.punctuation;
  r.dep_tree_height_mean = c.dep_tree_height_mean;

  const auto& ari = f("ari");
  r.ari = ari.at("letters_per_word") * (L / W) + ari.at("words_per_sentence") * (W / S) +
          ari.at("intercept");

  const auto& fh = f("fernandez_huerta");
  r.fernandez_huerta = fh.at("intercept") + fh.at("syllables_per_100_words") * (100.0 * Y / W) +
                       fh.at("sentences_per_100_words") * (100.0 * S / W);

  const auto& fs = f("flesch_szigriszt");
  r.flesch_szigriszt = fs.at("intercept") + fs.at("syllables_per_word") * (Y / W) +
                       fs.at("words_per_sentence") * (W / S);

  const auto& gu = f("gutierrez");
  r.gutierrez = gu.at("intercept") + gu.at("letters_per_word") * (L / W) +
                gu.at("words_per_sentence") * (W / S);

  const auto& sp = f("spaulding");
  r.spaulding = sp.at("words_per_sentence") * (W / S) +
                sp.at("rare_word_proportion") * (c.rare_words / W) + sp.at("intercept");

  const auto& lc = f("lexical_complexity");
  const double ldi = c.distinct_content_words / S;
  const double ilfw = c.content_words > 0 ? c.low_frequency_content_words / c.content_words : 0.0;
  r.lexical_complexity = lc.at("ldi_weight") * ldi + lc.at("ilfw_weight") * ilfw;

  // mu is undefined for a single word or zero letter-length variance.
  const auto& mu = f("mu_readability");
  r.mu_readability = (W > 1 && c.letters_variance > 0)
                         ? (W / (W - 1)) * ((L / W) / c.letters_variance) * mu.at("scale")
                         : 0.0;

  const auto& age = f("min_age");
  r.min_age = age.at("intercept") + age.at("sentences_per_100_words") * (100.0 * S / W) +
              age.at("syllables_per_100_words") * (100.0 * Y / W);

  const auto& sol = f("sol");
  const double smog = sol.at("smog_intercept") +
                      sol.at("smog_slope") * std::sqrt(sol.at("smog_sentence_basis") *
                                                       c.polysyllables / S);
  r.sol = sol.at("sol_intercept") + sol.at("sol_slope") * smog;
  return r;
}

ReadabilityScores readability(const annotate::AnnotatedDoc& doc, const FormulaRegistry& registry) {
  return from_counts(count(doc, registry), registry);
}

}  // namespace erisk::readability
