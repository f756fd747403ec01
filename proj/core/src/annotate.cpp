#include "erisk/annotate.hpp"

#include <algorithm>
#include <unordered_map>

#include "erisk/error.hpp"

namespace erisk::annotate {
namespace {

constexpr std::array<std::string_view, kPosCount> kPosNames = {
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART",
    "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X", "SPACE", "OTHER"};

struct Decoded {
  char32_t cp;
  std::size_t len;
};

Decoded decode(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0) return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0) {
      return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
    }
  }
  return {0xFFFD, 1};
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
         c == 0xA0 || (c >= 0x2000 && c <= 0x200B) || c == 0x2028 || c == 0x2029 ||
         c == 0x202F || c == 0x205F || c == 0x3000 || c == 0xFEFF;
}

bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }

// Letters: ASCII letters plus non-ASCII code points outside the punctuation,
// symbol and emoji blocks.
bool is_letter(char32_t c) {
  if (c < 0x80) return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  if (c <= 0xBF) return c == 0xAA || c == 0xB5 || c == 0xBA;
  if (c == 0xD7 || c == 0xF7) return false;
  if (c >= 0x2000 && c <= 0x2BFF) return false;  // general punctuation .. arrows, symbols
  if (c >= 0x3000 && c <= 0x303F) return false;
  if (c >= 0xFE30 && c <= 0xFE4F) return false;
  if (c >= 0xFF00 && c <= 0xFF20) return false;
  if (c >= 0x1F000) return false;  // emoji and pictographs
  if (c == 0xFFFD) return false;
  return true;
}

bool is_apostrophe(char32_t c) { return c == '\'' || c == 0x2019; }

bool is_sentence_end(char32_t c) {
  return c == '.' || c == '!' || c == '?' || c == 0x2026 /* … */;
}

bool is_punct(char32_t c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?': case '\'': case '"':
    case '(': case ')': case '[': case ']': case '{': case '}': case '-': case '_':
    case 0xA1: case 0xAB: case 0xBB: case 0xBF:
      return true;
    default:
      break;
  }
  return (c >= 0x2010 && c <= 0x2027) || (c >= 0x3001 && c <= 0x3003);
}

char32_t lower(char32_t c) {
  if (c >= 'A' && c <= 'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  return c;
}

bool is_vowel(char32_t c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
    case 0xE0: case 0xE1: case 0xE2: case 0xE3: case 0xE4: case 0xE5: case 0xE6:
    case 0xE8: case 0xE9: case 0xEA: case 0xEB:
    case 0xEC: case 0xED: case 0xEE: case 0xEF:
    case 0xF2: case 0xF3: case 0xF4: case 0xF5: case 0xF6: case 0xF8:
    case 0xF9: case 0xFA: case 0xFB: case 0xFC: case 0xFD: case 0xFF:
      return true;
    default:
      return false;
  }
}

const std::unordered_map<std::string_view, Pos>& lexicon() {
  static const auto* table = [] {
    auto* m = new std::unordered_map<std::string_view, Pos>;
    auto add = [&](Pos p, std::initializer_list<std::string_view> words) {
      for (auto w : words) m->emplace(w, p);
    };
    add(Pos::DET, {"the", "a", "an", "this", "that", "these", "those", "each", "every",
                   "some", "any", "no", "all", "both", "either", "neither", "my", "your",
                   "his", "her", "its", "our", "their", "another", "such", "what", "which",
                   "whose", "few", "many", "much", "several"});
    add(Pos::PRON, {"i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them",
                    "myself", "yourself", "himself", "herself", "itself", "ourselves",
                    "yourselves", "themselves", "mine", "yours", "hers", "ours", "theirs",
                    "who", "whom", "someone", "anyone", "everyone", "nobody", "somebody",
                    "anybody", "everybody", "something", "anything", "everything",
                    "nothing", "one", "i'm", "i've", "i'll", "i'd", "you're", "it's",
                    "that's", "there"});
    add(Pos::ADP, {"in", "on", "at", "by", "for", "with", "about", "against", "between",
                   "into", "through", "during", "before", "after", "above", "below", "to",
                   "from", "up", "down", "of", "off", "over", "under", "around", "among",
                   "without", "within", "along", "across", "behind", "beyond", "near",
                   "toward", "towards", "upon", "via", "per", "like"});
    add(Pos::CCONJ, {"and", "or", "but", "nor", "yet", "so", "&"});
    add(Pos::SCONJ, {"if", "because", "although", "though", "while", "whereas", "since",
                     "unless", "until", "whether", "once", "than", "when", "where", "as"});
    add(Pos::AUX, {"am", "is", "are", "was", "were", "be", "been", "being", "have", "has",
                   "had", "do", "does", "did", "will", "would", "shall", "should", "can",
                   "could", "may", "might", "must", "don't", "doesn't", "didn't", "won't",
                   "wouldn't", "can't", "cannot", "couldn't", "shouldn't", "isn't",
                   "aren't", "wasn't", "weren't", "haven't", "hasn't", "hadn't"});
    add(Pos::PART, {"not", "n't", "'s"});
    add(Pos::ADV, {"very", "really", "just", "also", "too", "now", "then", "here", "never",
                   "always", "often", "sometimes", "again", "still", "already", "even",
                   "only", "ever", "maybe", "perhaps", "quite", "almost", "how", "why",
                   "today", "yesterday", "tomorrow", "soon", "later"});
    add(Pos::INTJ, {"oh", "ah", "wow", "hey", "yes", "yeah", "hello", "hi", "lol", "ok",
                    "okay", "please", "thanks", "oops", "ugh", "hmm"});
    add(Pos::NUM, {"zero", "two", "three", "four", "five", "six", "seven", "eight", "nine",
                   "ten", "hundred", "thousand", "million"});
    return m;
  }();
  return *table;
}

Pos tag_word(const std::string& lemma, bool all_digits) {
  if (all_digits) return Pos::NUM;
  const auto& lex = lexicon();
  if (auto it = lex.find(lemma); it != lex.end()) return it->second;
  return Pos::NOUN;
}

}  // namespace

std::string_view pos_name(Pos p) { return kPosNames[static_cast<std::size_t>(p)]; }

Pos pos_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kPosCount; ++i) {
    if (kPosNames[i] == name) return static_cast<Pos>(i);
  }
  return Pos::OTHER;
}

std::size_t AnnotatedDoc::word_count() const {
  return static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return t.is_word; }));
}

std::string lowercase(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto d = decode(s, i);
    if (d.cp == 0xFFFD && d.len == 1) {
      out.push_back(s[i]);
    } else {
      encode(lower(d.cp), out);
    }
    i += d.len;
  }
  return out;
}

std::size_t codepoint_length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); i += decode(s, i).len) ++n;
  return n;
}

int count_syllables(std::string_view word) {
  int groups = 0;
  bool in_group = false;
  for (std::size_t i = 0; i < word.size();) {
    const auto d = decode(word, i);
    const bool v = is_vowel(lower(d.cp));
    if (v && !in_group) ++groups;
    in_group = v;
    i += d.len;
  }
  return std::max(groups, 1);
}

AnnotatedDoc BuiltinAnnotator::annotate(std::string_view text) const {
  AnnotatedDoc doc;
  std::vector<bool> ends_sentence;

  std::size_t i = 0;
  while (i < text.size()) {
    const auto d = decode(text, i);
    if (is_space(d.cp)) {
      i += d.len;
      continue;
    }
    Token tok;
    if (is_letter(d.cp) || is_digit(d.cp)) {
      // Word: letters/digits, with inner apostrophes ("don't").
      std::size_t j = i;
      int letters = 0;
      bool all_digits = true;
      while (j < text.size()) {
        const auto e = decode(text, j);
        if (is_letter(e.cp) || is_digit(e.cp)) {
          letters += is_letter(e.cp) ? 1 : 0;
          all_digits = all_digits && is_digit(e.cp);
          j += e.len;
          continue;
        }
        if (is_apostrophe(e.cp) && j + e.len < text.size()) {
          const auto f = decode(text, j + e.len);
          if (is_letter(f.cp)) {
            j += e.len;
            all_digits = false;
            continue;
          }
        }
        break;
      }
      tok.surface = std::string(text.substr(i, j - i));
      tok.lemma = lowercase(tok.surface);
      tok.is_word = true;
      tok.letters = letters;
      tok.syllables = count_syllables(tok.lemma);
      tok.pos = tag_word(tok.lemma, all_digits);
      i = j;
    } else {
      tok.surface = std::string(text.substr(i, d.len));
      tok.lemma = tok.surface;
      tok.pos = is_punct(d.cp) ? Pos::PUNCT : Pos::SYM;
      i += d.len;
    }
    const bool terminator = !tok.is_word && is_sentence_end(decode(tok.surface, 0).cp);
    if (tok.pos == Pos::PUNCT) ++doc.punctuation_count;
    doc.tokens.push_back(std::move(tok));
    ends_sentence.push_back(terminator);
  }

  std::size_t begin = 0;
  for (std::size_t k = 0; k < doc.tokens.size(); ++k) {
    const bool last = k + 1 == doc.tokens.size();
    // A run of terminators ("?!", "...") closes a single sentence.
    if (last || (ends_sentence[k] && !ends_sentence[k + 1])) {
      doc.sentences.push_back({begin, k + 1});
      begin = k + 1;
    }
  }
  doc.dep_tree_height.assign(doc.sentences.size(), 0);
  doc.synthetic_dependency = true;
  return doc;
}

AnnotatorRegistry::AnnotatorRegistry() {
  providers_.emplace("builtin", std::make_shared<BuiltinAnnotator>());
}

void AnnotatorRegistry::add(std::string id, std::shared_ptr<const Annotator> annotator) {
  std::lock_guard lock(mu_);
  providers_[std::move(id)] = std::move(annotator);
}

std::shared_ptr<const Annotator> AnnotatorRegistry::get(std::string_view id) const {
  std::lock_guard lock(mu_);
  const auto it = providers_.find(id);
  if (it == providers_.end()) {
    throw ConfigError("unknown annotator provider '" + std::string(id) + "'");
  }
  return it->second;
}

AnnotatorRegistry& AnnotatorRegistry::global() {
  static AnnotatorRegistry registry;
  return registry;
}

AnnotatedDoc annotate(std::string_view text, std::string_view provider) {
  return AnnotatorRegistry::global().get(provider)->annotate(text);
}

}  // namespace erisk::annotate
