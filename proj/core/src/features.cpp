#include "erisk/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace erisk::features {
namespace {

constexpr std::array<std::string_view, kBasicEmotions> kBasic = {"sadness", "joy",  "love",
                                                                 "anger",   "fear", "surprise"};
constexpr std::array<std::string_view, kFineEmotions> kFine = {
    "admiration", "amusement",   "anger",       "annoyance", "approval",      "caring",
    "confusion",  "curiosity",   "desire",      "disappointment", "disapproval", "disgust",
    "embarrassment", "excitement", "fear",      "gratitude", "grief",         "joy",
    "love",       "nervousness", "optimism",    "pride",     "realization",   "relief",
    "remorse",    "sadness",     "surprise",    "neutral"};

bool ieq_prefix(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != prefix[i]) return false;
  }
  return true;
}

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool url_terminator(char c) {
  return is_ascii_space(c) || c == ')' || c == ']' || c == '>' || c == '<' || c == '"';
}

struct Span {
  std::size_t begin, end;  // [begin, end)
};

std::vector<Span> find_urls(std::string_view s) {
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const bool boundary = i == 0 || !std::isalnum(static_cast<unsigned char>(s[i - 1]));
    if (boundary && (ieq_prefix(s, i, "http://") || ieq_prefix(s, i, "https://") ||
                     ieq_prefix(s, i, "www."))) {
      std::size_t j = i;
      while (j < s.size() && !url_terminator(s[j])) ++j;
      out.push_back({i, j});
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_ascii_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string num(double x) { return fmt::format("{}", x); }

}  // namespace

const std::array<std::string_view, kBasicEmotions>& basic_emotion_labels() { return kBasic; }
const std::array<std::string_view, kFineEmotions>& fine_emotion_labels() { return kFine; }

const std::array<std::string, kFeatureDim>& feature_names() {
  static const auto names = [] {
    std::array<std::string, kFeatureDim> n;
    std::size_t k = 0;
    for (auto s : {"n_words", "n_unique_words", "n_chars", "avg_word_len", "n_unique_lemmas",
                   "avg_lemma_len"}) {
      n[k++] = s;
    }
    for (std::size_t p = 0; p < annotate::kPosCount; ++p) {
      n[k++] = "pos_" + std::string(annotate::pos_name(static_cast<annotate::Pos>(p)));
    }
    for (auto s : {"ttr", "root_ttr", "log_ttr", "maas_ttr", "msttr", "mattr", "hdd", "mtld"}) {
      n[k++] = s;
    }
    for (auto s : readability::metric_names()) n[k++] = std::string(s);
    for (auto s : kBasic) n[k++] = "emo_" + std::string(s);
    for (auto s : kFine) n[k++] = "goemo_" + std::string(s);
    return n;
  }();
  return names;
}

std::string strip_urls(std::string_view text) {
  const auto urls = find_urls(text);
  if (urls.empty()) return collapse_whitespace(text);

  std::vector<bool> removed(text.size(), false);
  auto contains_url = [&](std::size_t open, std::size_t close) {
    return std::any_of(urls.begin(), urls.end(),
                       [&](const Span& u) { return u.begin > open && u.begin < close; });
  };
  // Match () and [] pairs with a stack; unmatched closers are left alone.
  std::vector<std::pair<char, std::size_t>> stack;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '(' || c == '[') {
      stack.emplace_back(c, i);
    } else if (c == ')' || c == ']') {
      const char want = c == ')' ? '(' : '[';
      if (!stack.empty() && stack.back().first == want) {
        const auto open = stack.back().second;
        stack.pop_back();
        if (contains_url(open, i)) std::fill(removed.begin() + open, removed.begin() + i + 1, true);
      }
    }
  }
  for (const auto& u : urls) std::fill(removed.begin() + u.begin, removed.begin() + u.end, true);

  std::string kept;
  kept.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!removed[i]) {
      kept.push_back(text[i]);
    } else if (i == 0 || !removed[i - 1]) {
      kept.push_back(' ');  // a removed run becomes one separator
    }
  }
  return collapse_whitespace(kept);
}

std::string concat_window(const corpus::PostWindow& window, Preprocess preprocess) {
  std::string out;
  auto append = [&](const std::string& field) {
    std::string piece = preprocess == Preprocess::strip_urls ? strip_urls(field) : field;
    if (piece.empty()) return;
    if (!out.empty()) out.push_back(' ');
    out += piece;
  };
  for (const auto& p : window.posts) {
    append(p.title);
    append(p.text);
  }
  return out;
}

VolumetryScores volumetry(const annotate::AnnotatedDoc& doc) {
  VolumetryScores v;
  std::set<std::string> words, lemmas;
  double word_chars = 0, lemma_chars = 0;
  for (const auto& t : doc.tokens) {
    v.pos_counts[static_cast<std::size_t>(t.pos)] += 1;
    const auto len = static_cast<double>(annotate::codepoint_length(t.surface));
    v.n_chars += len;
    if (!t.is_word) continue;
    v.n_words += 1;
    word_chars += len;
    lemma_chars += static_cast<double>(annotate::codepoint_length(t.lemma));
    words.insert(annotate::lowercase(t.surface));
    lemmas.insert(t.lemma);
  }
  v.n_unique_words = static_cast<double>(words.size());
  v.n_unique_lemmas = static_cast<double>(lemmas.size());
  if (v.n_words > 0) {
    v.avg_word_len = word_chars / v.n_words;
    v.avg_lemma_len = lemma_chars / v.n_words;
  }
  return v;
}

FeatureVector assemble(const std::optional<VolumetryScores>& v,
                       const std::optional<lexdiv::LexDivScores>& l,
                       const std::optional<readability::ReadabilityScores>& r,
                       const std::optional<EmotionScores>& e) {
  if (!v) throw AssemblyError("volumetry");
  if (!l) throw AssemblyError("lexdiv");
  if (!r) throw AssemblyError("readability");
  if (!e) throw AssemblyError("emotions");

  FeatureVector out;
  out.values.reserve(kFeatureDim);
  auto push = [&](double x) {
    if (!std::isfinite(x)) {
      out.repaired.push_back(out.values.size());
      x = 0.0;
    }
    out.values.push_back(x);
  };
  for (double x : {v->n_words, v->n_unique_words, v->n_chars, v->avg_word_len,
                   v->n_unique_lemmas, v->avg_lemma_len}) {
    push(x);
  }
  for (double x : v->pos_counts) push(x);
  for (double x : {l->ttr, l->root_ttr, l->log_ttr, l->maas, l->msttr, l->mattr, l->hdd, l->mtld}) {
    push(x);
  }
  for (double x : r->values()) push(x);
  for (double x : e->basic) push(x);
  for (double x : e->fine) push(x);
  return out;
}

Scaler fit_scaler(std::span<const FeatureVector> train) {
  if (train.empty()) throw DomainError("fit_scaler needs at least one vector");
  const auto dim = train.front().values.size();
  Scaler s{train.front().values, train.front().values};
  for (const auto& fv : train) {
    if (fv.values.size() != dim) throw DomainError("fit_scaler: vectors differ in dimension");
    for (std::size_t k = 0; k < dim; ++k) {
      s.min[k] = std::min(s.min[k], fv.values[k]);
      s.max[k] = std::max(s.max[k], fv.values[k]);
    }
  }
  return s;
}

FeatureVector apply_scaler(const Scaler& s, const FeatureVector& v) {
  if (v.values.size() != s.min.size() || s.min.size() != s.max.size()) {
    throw DomainError("apply_scaler: dimension mismatch (" + std::to_string(v.values.size()) +
                      " vs " + std::to_string(s.min.size()) + ")");
  }
  FeatureVector out{std::vector<double>(v.values.size()), v.repaired};
  for (std::size_t k = 0; k < v.values.size(); ++k) {
    const double range = s.max[k] - s.min[k];
    if (range <= 0) {
      out.values[k] = 0.0;
      continue;
    }
    out.values[k] = std::clamp((v.values[k] - s.min[k]) / range, 0.0, 1.0);
  }
  return out;
}

std::string scaler_to_json(const Scaler& s) {
  return nlohmann::json{{"min", s.min}, {"max", s.max}}.dump();
}

Scaler scaler_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Scaler s{j.at("min").get<std::vector<double>>(), j.at("max").get<std::vector<double>>()};
    if (s.min.size() != s.max.size()) throw ValidationError("scaler min/max lengths differ");
    for (std::size_t k = 0; k < s.min.size(); ++k) {
      if (s.min[k] > s.max[k]) throw ValidationError("scaler has min > max at " + std::to_string(k));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scaler json: ") + e.what(), 0);
  }
}

void save_scaler(const std::filesystem::path& path, const Scaler& s) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << scaler_to_json(s) << '\n';
}

Scaler load_scaler(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return scaler_from_json(ss.str());
}

void write_feature_csv(const std::filesystem::path& path, std::span<const std::string> ids,
                       std::span<const FeatureVector> rows) {
  if (ids.size() != rows.size()) throw DomainError("write_feature_csv: ids/rows length mismatch");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "subject_id";
  for (const auto& n : feature_names()) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << ids[i];
    for (double x : rows[i].values) out << ',' << num(x);
    out << '\n';
  }
}

}  // namespace erisk::features
