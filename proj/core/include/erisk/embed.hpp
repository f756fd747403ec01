#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "erisk/features.hpp"

namespace erisk::embed {

inline constexpr std::size_t kDefaultDim = 1024;
inline constexpr std::size_t kDefaultTruncation = 512;

struct Document {
  std::string id;
  std::string text;
};

struct Embedding {
  std::vector<double> vector;
  std::string provider_id;
  std::size_t truncation_limit = kDefaultTruncation;
  bool degenerate = false;  // all-zero vector (e.g. empty text)
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual Embedding embed(const Document& doc) const = 0;
  virtual std::vector<Embedding> embed_batch(std::span<const Document> docs) const;
};

/// The span from the first to the `limit`-th whitespace-separated token.
std::string truncate_tokens(std::string_view text, std::size_t limit);

/// Signed feature hashing of word unigrams, word bigrams and character
/// trigrams into `dim` buckets, L2-normalised. Fixed hash seed, so vectors
/// are stable across processes and platforms.
class TestHashProvider final : public EmbeddingProvider {
 public:
  explicit TestHashProvider(std::size_t dim = kDefaultDim,
                            std::size_t truncation = kDefaultTruncation);
  std::string id() const override { return "test_hash"; }
  std::size_t dim() const override { return dim_; }
  Embedding embed(const Document& doc) const override;

 private:
  std::size_t dim_;
  std::size_t truncation_;
};

/// Precomputed vectors from JSONL lines {"doc_id": str, "vector": [...]}.
class FileCacheProvider final : public EmbeddingProvider {
 public:
  explicit FileCacheProvider(const std::filesystem::path& path);
  std::string id() const override { return "file_cache"; }
  std::size_t dim() const override { return dim_; }
  /// LookupError carrying the doc id on a miss.
  Embedding embed(const Document& doc) const override;
  std::size_t size() const { return vectors_.size(); }

 private:
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::size_t dim_ = 0;
};

struct HttpSettings {
  std::string base_url;        // e.g. "http://127.0.0.1:8765"
  std::string auth_token;      // sent as "Authorization: Bearer <token>" when non-empty
  std::size_t dim = kDefaultDim;
  std::size_t truncation = kDefaultTruncation;
  std::size_t max_batch = 16;
  std::ptrdiff_t max_in_flight = 4;
  int timeout_seconds = 60;
};

/// Client for the inference sidecar: POST /embed {"texts":[...]} -> {"vectors":[[...]]}.
class HttpProvider final : public EmbeddingProvider {
 public:
  explicit HttpProvider(HttpSettings settings);
  std::string id() const override { return "http"; }
  std::size_t dim() const override { return settings_.dim; }
  Embedding embed(const Document& doc) const override;
  std::vector<Embedding> embed_batch(std::span<const Document> docs) const override;

 private:
  HttpSettings settings_;
  mutable std::counting_semaphore<1024> in_flight_;
};

/// Standard cosine similarity. DomainError on dimension mismatch or zero vectors.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(const Embedding& a, const Embedding& b);

class EmotionProvider {
 public:
  virtual ~EmotionProvider() = default;
  virtual std::string id() const = 0;
  virtual features::EmotionScores score(const Document& doc) const = 0;
};

/// Deterministic stand-in for the emotion classifiers: hashed per-word
/// label weights; basic scores are a softmax (sum to 1), fine scores are
/// independent sigmoids.
class TestHashEmotionProvider final : public EmotionProvider {
 public:
  std::string id() const override { return "test_hash"; }
  features::EmotionScores score(const Document& doc) const override;
};

/// JSONL lines {"doc_id": str, "basic": [6], "fine": [28]}.
class FileCacheEmotionProvider final : public EmotionProvider {
 public:
  explicit FileCacheEmotionProvider(const std::filesystem::path& path);
  std::string id() const override { return "file_cache"; }
  features::EmotionScores score(const Document& doc) const override;

 private:
  std::unordered_map<std::string, features::EmotionScores> scores_;
};

/// POST /emotions {"texts":[...]} -> {"basic":[[...]], "fine":[[...]]}.
class HttpEmotionProvider final : public EmotionProvider {
 public:
  explicit HttpEmotionProvider(HttpSettings settings);
  std::string id() const override { return "http"; }
  features::EmotionScores score(const Document& doc) const override;

 private:
  HttpSettings settings_;
};

/// Provider selection as written in experiment configs.
struct ProviderSpec {
  std::string kind = "test_hash";  // test_hash | file_cache | http
  std::filesystem::path cache_path;
  HttpSettings http;
};

std::shared_ptr<const EmbeddingProvider> make_embedding_provider(const ProviderSpec& spec);
std::shared_ptr<const EmotionProvider> make_emotion_provider(const ProviderSpec& spec);

/// 64-bit FNV-1a with the workbench's fixed offset basis.
std::uint64_t stable_hash(std::string_view bytes, std::uint64_t seed = 0);

}  // namespace erisk::embed
