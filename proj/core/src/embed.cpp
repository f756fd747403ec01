#include "erisk/embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "erisk/annotate.hpp"
#include "erisk/error.hpp"

namespace erisk::embed {
namespace {

using nlohmann::json;

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& t : annotate::BuiltinAnnotator{}.annotate(text).tokens) {
    if (t.is_word) out.push_back(t.lemma);
  }
  return out;
}

void l2_normalise(std::vector<double>& v) {
  double ss = 0;
  for (double x : v) ss += x * x;
  if (ss <= 0) return;
  const double inv = 1.0 / std::sqrt(ss);
  for (double& x : v) x *= inv;
}

httplib::Headers auth_headers(const HttpSettings& s) {
  httplib::Headers h;
  if (!s.auth_token.empty()) h.emplace("Authorization", "Bearer " + s.auth_token);
  return h;
}

/// "http://host:port/prefix" -> ("http://host:port", "/prefix").
std::pair<std::string, std::string> split_base_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

json post_json(const HttpSettings& s, const std::string& path, const json& body) {
  const auto [host, prefix] = split_base_url(s.base_url);
  httplib::Client cli(host);
  cli.set_connection_timeout(s.timeout_seconds, 0);
  cli.set_read_timeout(s.timeout_seconds, 0);
  auto res = cli.Post(prefix + path, auth_headers(s), body.dump(), "application/json");
  if (!res) {
    throw TransportError("POST " + s.base_url + path + " failed: " + httplib::to_string(res.error()),
                         0);
  }
  if (res->status != 200) {
    throw TransportError("POST " + s.base_url + path + " returned " + std::to_string(res->status),
                         res->status);
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw TransportError("POST " + s.base_url + path + ": malformed reply: " + e.what(), res->status);
  }
}

template <std::size_t N>
std::array<double, N> fixed_array(const json& j, const char* what, const std::string& id) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != N) {
    throw ValidationError(std::string(what) + " scores for '" + id + "' have " +
                          std::to_string(v.size()) + " entries, expected " + std::to_string(N));
  }
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace

std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = kFnvOffset ^ (seed * kFnvPrime);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  // Final avalanche so nearby inputs land in unrelated buckets.
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

std::vector<Embedding> EmbeddingProvider::embed_batch(std::span<const Document> docs) const {
  std::vector<Embedding> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(embed(d));
  return out;
}

std::string truncate_tokens(std::string_view text, std::size_t limit) {
  std::size_t count = 0;
  std::size_t i = 0;
  std::size_t begin = std::string_view::npos, end = 0;
  const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (i < text.size() && count < limit) {
    while (i < text.size() && is_ws(text[i])) ++i;
    if (i == text.size()) break;
    if (begin == std::string_view::npos) begin = i;
    while (i < text.size() && !is_ws(text[i])) ++i;
    end = i;
    ++count;
  }
  if (begin == std::string_view::npos) return {};
  return std::string(text.substr(begin, end - begin));
}

TestHashProvider::TestHashProvider(std::size_t dim, std::size_t truncation)
    : dim_(dim), truncation_(truncation) {
  if (dim_ == 0) throw ConfigError("test_hash provider needs a positive dimension");
}

Embedding TestHashProvider::embed(const Document& doc) const {
  Embedding e{std::vector<double>(dim_, 0.0), id(), truncation_, false};
  const auto words = words_of(truncate_tokens(doc.text, truncation_));
  auto add = [&](std::string_view feature, std::uint64_t seed, double weight) {
    const auto h = stable_hash(feature, seed);
    const double sign = (h >> 63) ? -1.0 : 1.0;
    e.vector[h % dim_] += sign * weight;
  };
  for (std::size_t i = 0; i < words.size(); ++i) {
    add(words[i], 1, 1.0);
    if (i + 1 < words.size()) add(words[i] + ' ' + words[i + 1], 2, 0.5);
    const std::string padded = "<" + words[i] + ">";
    for (std::size_t k = 0; k + 3 <= padded.size(); ++k) add(padded.substr(k, 3), 3, 0.25);
  }
  const bool zero = std::all_of(e.vector.begin(), e.vector.end(), [](double x) { return x == 0.0; });
  e.degenerate = zero;
  if (!zero) l2_normalise(e.vector);
  return e;
}

FileCacheProvider::FileCacheProvider(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embedding cache " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
      auto id = j.at("doc_id").get<std::string>();
      auto vec = j.at("vector").get<std::vector<double>>();
      if (vec.empty()) throw ValidationError("empty vector");
      if (dim_ == 0) dim_ = vec.size();
      if (vec.size() != dim_) {
        throw ValidationError("vector width " + std::to_string(vec.size()) + " != " +
                              std::to_string(dim_));
      }
      vectors_[std::move(id)] = std::move(vec);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what(), lineno);
    } catch (const ValidationError& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what(), lineno);
    }
  }
}

Embedding FileCacheProvider::embed(const Document& doc) const {
  const auto it = vectors_.find(doc.id);
  if (it == vectors_.end()) throw LookupError("embedding cache miss for '" + doc.id + "'", doc.id);
  Embedding e{it->second, id(), kDefaultTruncation, false};
  e.degenerate = std::all_of(e.vector.begin(), e.vector.end(), [](double x) { return x == 0.0; });
  return e;
}

HttpProvider::HttpProvider(HttpSettings settings)
    : settings_(std::move(settings)),
      in_flight_(std::clamp<std::ptrdiff_t>(settings_.max_in_flight, 1, 1024)) {
  if (settings_.base_url.empty()) throw ConfigError("http provider needs a base_url");
  if (settings_.max_batch == 0) settings_.max_batch = 1;
}

Embedding HttpProvider::embed(const Document& doc) const {
  return embed_batch(std::span<const Document>(&doc, 1)).front();
}

std::vector<Embedding> HttpProvider::embed_batch(std::span<const Document> docs) const {
  std::vector<Embedding> out;
  out.reserve(docs.size());
  for (std::size_t start = 0; start < docs.size(); start += settings_.max_batch) {
    const auto chunk = docs.subspan(start, std::min(settings_.max_batch, docs.size() - start));
    json body{{"texts", json::array()}};
    for (const auto& d : chunk) body["texts"].push_back(truncate_tokens(d.text, settings_.truncation));

    in_flight_.acquire();
    json reply;
    try {
      reply = post_json(settings_, "/embed", body);
    } catch (...) {
      in_flight_.release();
      throw;
    }
    in_flight_.release();

    const auto& vectors = reply.at("vectors");
    if (!vectors.is_array() || vectors.size() != chunk.size()) {
      throw TransportError("/embed returned " + std::to_string(vectors.size()) + " vectors for " +
                               std::to_string(chunk.size()) + " texts",
                           200);
    }
    for (const auto& v : vectors) {
      Embedding e{v.get<std::vector<double>>(), id(), settings_.truncation, false};
      if (e.vector.size() != settings_.dim) {
        throw ValidationError("/embed returned width " + std::to_string(e.vector.size()) +
                              ", expected " + std::to_string(settings_.dim));
      }
      e.degenerate = std::all_of(e.vector.begin(), e.vector.end(), [](double x) { return x == 0.0; });
      out.push_back(std::move(e));
    }
  }
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DomainError("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()));
  }
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) throw DomainError("cosine: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine(const Embedding& a, const Embedding& b) { return cosine(a.vector, b.vector); }

features::EmotionScores TestHashEmotionProvider::score(const Document& doc) const {
  const auto words = words_of(doc.text);
  std::array<double, features::kBasicEmotions> basic_logit{};
  std::array<double, features::kFineEmotions> fine_logit{};
  for (const auto& w : words) {
    const auto h = stable_hash(w, 7);
    for (std::size_t k = 0; k < basic_logit.size(); ++k) {
      basic_logit[k] += static_cast<double>((h >> (k * 5)) & 31) / 15.5 - 1.0;
    }
    const auto g = stable_hash(w, 11);
    for (std::size_t k = 0; k < fine_logit.size(); ++k) {
      fine_logit[k] += static_cast<double>((g >> (k * 2)) & 3) / 1.5 - 1.0;
    }
  }
  const double scale = words.empty() ? 0.0 : 1.0 / std::sqrt(static_cast<double>(words.size()));
  features::EmotionScores out;
  double mx = -1e300;
  for (double& l : basic_logit) mx = std::max(mx, l *= scale);
  double z = 0;
  for (std::size_t k = 0; k < basic_logit.size(); ++k) z += out.basic[k] = std::exp(basic_logit[k] - mx);
  for (double& p : out.basic) p /= z;
  for (std::size_t k = 0; k < fine_logit.size(); ++k) {
    out.fine[k] = 1.0 / (1.0 + std::exp(-fine_logit[k] * scale));
  }
  return out;
}

FileCacheEmotionProvider::FileCacheEmotionProvider(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open emotion cache " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      const auto id = j.at("doc_id").get<std::string>();
      features::EmotionScores s;
      s.basic = fixed_array<features::kBasicEmotions>(j.at("basic"), "basic", id);
      s.fine = fixed_array<features::kFineEmotions>(j.at("fine"), "fine", id);
      scores_[id] = s;
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what(), lineno);
    }
  }
}

features::EmotionScores FileCacheEmotionProvider::score(const Document& doc) const {
  const auto it = scores_.find(doc.id);
  if (it == scores_.end()) throw LookupError("emotion cache miss for '" + doc.id + "'", doc.id);
  return it->second;
}

HttpEmotionProvider::HttpEmotionProvider(HttpSettings settings) : settings_(std::move(settings)) {
  if (settings_.base_url.empty()) throw ConfigError("http emotion provider needs a base_url");
}

features::EmotionScores HttpEmotionProvider::score(const Document& doc) const {
  const json body{{"texts", json::array({truncate_tokens(doc.text, settings_.truncation)})}};
  const auto reply = post_json(settings_, "/emotions", body);
  features::EmotionScores s;
  s.basic = fixed_array<features::kBasicEmotions>(reply.at("basic").at(0), "basic", doc.id);
  s.fine = fixed_array<features::kFineEmotions>(reply.at("fine").at(0), "fine", doc.id);
  return s;
}

std::shared_ptr<const EmbeddingProvider> make_embedding_provider(const ProviderSpec& spec) {
  if (spec.kind == "test_hash") {
    return std::make_shared<TestHashProvider>(spec.http.dim, spec.http.truncation);
  }
  if (spec.kind == "file_cache") return std::make_shared<FileCacheProvider>(spec.cache_path);
  if (spec.kind == "http") return std::make_shared<HttpProvider>(spec.http);
  throw ConfigError("unknown embedding provider '" + spec.kind + "'");
}

std::shared_ptr<const EmotionProvider> make_emotion_provider(const ProviderSpec& spec) {
  if (spec.kind == "test_hash") return std::make_shared<TestHashEmotionProvider>();
  if (spec.kind == "file_cache") return std::make_shared<FileCacheEmotionProvider>(spec.cache_path);
  if (spec.kind == "http") return std::make_shared<HttpEmotionProvider>(spec.http);
  throw ConfigError("unknown emotion provider '" + spec.kind + "'");
}

}  // namespace erisk::embed
