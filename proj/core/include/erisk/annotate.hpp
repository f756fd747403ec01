#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace erisk::annotate {

/// The 17 Universal POS tags, SPACE, and OTHER for tags an external
/// annotator emits that are not in the inventory.
enum class Pos : std::uint8_t {
  ADJ, ADP, ADV, AUX, CCONJ, DET, INTJ, NOUN, NUM, PART,
  PRON, PROPN, PUNCT, SCONJ, SYM, VERB, X, SPACE, OTHER
};
inline constexpr std::size_t kPosCount = 19;

std::string_view pos_name(Pos p);
/// Maps a tag name to the inventory; unknown names become OTHER.
Pos pos_from_name(std::string_view name);

struct Token {
  std::string surface;
  std::string lemma;
  Pos pos = Pos::X;
  bool is_word = false;
  int syllables = 0;  // >= 1 for words
  int letters = 0;
};

/// Half-open token range [begin, end).
struct Sentence {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct AnnotatedDoc {
  std::vector<Token> tokens;
  std::vector<Sentence> sentences;
  std::vector<int> dep_tree_height;  // one per sentence
  std::size_t punctuation_count = 0;
  bool synthetic_dependency = true;  // heights are placeholders, not parses

  std::size_t word_count() const;
};

class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual AnnotatedDoc annotate(std::string_view text) const = 0;
};

/// Rule-based fallback: Unicode-aware word/punctuation segmentation,
/// sentence split on . ! ?, lowercase lemmas, closed-class POS lexicon
/// (everything else NOUN), vowel-group syllables, dependency height 0.
class BuiltinAnnotator final : public Annotator {
 public:
  AnnotatedDoc annotate(std::string_view text) const override;
};

/// Thread-safe id -> annotator map. "builtin" is always registered.
class AnnotatorRegistry {
 public:
  AnnotatorRegistry();
  void add(std::string id, std::shared_ptr<const Annotator> annotator);
  /// Throws ConfigError for unknown ids.
  std::shared_ptr<const Annotator> get(std::string_view id) const;

  static AnnotatorRegistry& global();

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Annotator>, std::less<>> providers_;
};

AnnotatedDoc annotate(std::string_view text, std::string_view provider = "builtin");

/// Number of maximal vowel groups in `word` (min 1). Accented Latin vowels
/// and 'y' count as vowels.
int count_syllables(std::string_view word);

/// ASCII + Latin-1 lowercase.
std::string lowercase(std::string_view s);

/// Number of Unicode code points in a UTF-8 string.
std::size_t codepoint_length(std::string_view s);

}  // namespace erisk::annotate
