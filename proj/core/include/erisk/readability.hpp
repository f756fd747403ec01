#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "erisk/annotate.hpp"

namespace erisk::readability {

struct ReadabilityScores {
  double lexical_complexity = 0;
  double spaulding = 0;
  double sentence_complexity = 0;
  double ari = 0;
  double dep_tree_height_mean = 0;
  double punctuation_marks = 0;
  double fernandez_huerta = 0;
  double flesch_szigriszt = 0;
  double gutierrez = 0;
  double mu_readability = 0;
  double min_age = 0;
  double sol = 0;

  std::array<double, 12> values() const;
};

/// The 12 metric names in ReadabilityScores field order.
const std::array<std::string_view, 12>& metric_names();

struct Formula {
  std::string name;
  std::map<std::string, double> coefficients;
  std::string source;

  double at(const std::string& key) const;  // ConfigError when absent
};

/// Coefficient sets for the 12 metrics plus the common-word list used for
/// rare / low-frequency word detection.
class FormulaRegistry {
 public:
  /// `formulas` must name each of the 12 metrics exactly once and carry a
  /// source note; missing coefficient keys are reported by name.
  explicit FormulaRegistry(std::vector<Formula> formulas,
                           std::optional<std::unordered_set<std::string>> common_words = std::nullopt);

  /// Registry file: one JSON object per line {name, coefficients, source}.
  /// Word list: one lowercase word per line, '#' comments allowed.
  static FormulaRegistry load(const std::filesystem::path& registry_file,
                              const std::optional<std::filesystem::path>& word_list);
  /// The bundled registry and English common-word list.
  static const FormulaRegistry& bundled();

  const Formula& formula(std::string_view name) const;
  bool has_word_list() const { return common_words_.has_value(); }
  bool is_common(const std::string& lowercase_word) const;

 private:
  std::map<std::string, Formula, std::less<>> formulas_;
  std::optional<std::unordered_set<std::string>> common_words_;
};

/// Raw counts the formulas consume.
struct TextCounts {
  double words = 0;
  double sentences = 0;
  double syllables = 0;
  double letters = 0;
  double punctuation = 0;
  double rare_words = 0;             // word tokens absent from the common list
  double polysyllables = 0;          // words with >= 3 syllables
  double content_words = 0;          // NOUN, PROPN, VERB, ADJ, ADV tokens
  double distinct_content_words = 0;
  double low_frequency_content_words = 0;
  double letters_variance = 0;       // population variance of letters per word
  double dep_tree_height_mean = 0;
};

TextCounts count(const annotate::AnnotatedDoc& doc, const FormulaRegistry& registry);

/// Evaluates all 12 formulas on precomputed counts. Requires words >= 1 and
/// sentences >= 1 (DomainError otherwise).
ReadabilityScores from_counts(const TextCounts& c, const FormulaRegistry& registry);

/// Throws DomainError for docs without words or sentences and ConfigError
/// when the registry has no word list.
ReadabilityScores readability(const annotate::AnnotatedDoc& doc,
                              const FormulaRegistry& registry = FormulaRegistry::bundled());

}  // namespace erisk::readability
