#include "erisk/lexdiv.hpp"

#include <cmath>
#include <limits>
#include <string_view>
#include <unordered_map>

#include "erisk/error.hpp"

namespace erisk::lexdiv {
namespace {

void require_tokens(std::span<const std::string> tokens) {
  if (tokens.empty()) throw DomainError("lexical diversity needs at least one token");
}

std::size_t distinct(std::span<const std::string> tokens) {
  std::unordered_map<std::string_view, std::size_t> seen;
  for (const auto& t : tokens) ++seen[t];
  return seen.size();
}

// One directional MTLD pass.
double mtld_pass(std::span<const std::string> tokens, double threshold, bool reverse) {
  const auto n = tokens.size();
  std::unordered_map<std::string_view, std::size_t> types;
  double factors = 0.0;
  std::size_t count = 0;
  double running = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& tok = tokens[reverse ? n - 1 - k : k];
    ++types[tok];
    ++count;
    running = static_cast<double>(types.size()) / static_cast<double>(count);
    if (running < threshold) {
      factors += 1.0;
      types.clear();
      count = 0;
      running = 1.0;
    }
  }
  if (count > 0) factors += (1.0 - running) / (1.0 - threshold);
  if (factors == 0.0) return static_cast<double>(n);
  return static_cast<double>(n) / factors;
}

}  // namespace

double log_binomial(std::size_t n, std::size_t k) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double ttr(std::span<const std::string> tokens) {
  require_tokens(tokens);
  return static_cast<double>(distinct(tokens)) / static_cast<double>(tokens.size());
}

double msttr(std::span<const std::string> tokens, std::size_t segment_len) {
  require_tokens(tokens);
  if (segment_len == 0) throw DomainError("msttr: segment_len must be positive");
  const auto segments = tokens.size() / segment_len;
  if (segments == 0) return ttr(tokens);
  double sum = 0.0;
  for (std::size_t s = 0; s < segments; ++s) sum += ttr(tokens.subspan(s * segment_len, segment_len));
  return sum / static_cast<double>(segments);
}

double mattr(std::span<const std::string> tokens, std::size_t window_len) {
  require_tokens(tokens);
  if (window_len == 0) throw DomainError("mattr: window_len must be positive");
  const auto n = tokens.size();
  if (n < window_len) return ttr(tokens);
  // Sliding type counts: O(N) updates.
  std::unordered_map<std::string_view, std::size_t> counts;
  for (std::size_t k = 0; k < window_len; ++k) ++counts[tokens[k]];
  const double w = static_cast<double>(window_len);
  double sum = static_cast<double>(counts.size()) / w;
  for (std::size_t start = 1; start + window_len <= n; ++start) {
    auto it = counts.find(tokens[start - 1]);
    if (--it->second == 0) counts.erase(it);
    ++counts[tokens[start + window_len - 1]];
    sum += static_cast<double>(counts.size()) / w;
  }
  return sum / static_cast<double>(n - window_len + 1);
}

double hdd(std::span<const std::string> tokens, std::size_t sample) {
  require_tokens(tokens);
  if (sample == 0) throw DomainError("hdd: sample size must be positive");
  const auto n = tokens.size();
  const auto s = std::min(sample, n);
  std::unordered_map<std::string_view, std::size_t> freq;
  for (const auto& t : tokens) ++freq[t];
  const double log_total = log_binomial(n, s);
  double sum = 0.0;
  for (const auto& [type, count] : freq) {
    // P(type absent from a sample of size s) = C(N - n_t, s) / C(N, s).
    const double absent = std::exp(log_binomial(n - count, s) - log_total);
    sum += 1.0 - absent;
  }
  return sum / static_cast<double>(s);
}

double mtld(std::span<const std::string> tokens, double threshold) {
  require_tokens(tokens);
  if (!(threshold > 0.0 && threshold < 1.0)) throw DomainError("mtld: threshold must be in (0,1)");
  return 0.5 * (mtld_pass(tokens, threshold, false) + mtld_pass(tokens, threshold, true));
}

LexDivScores lexdiv(std::span<const std::string> tokens, const LexDivConfig& cfg) {
  require_tokens(tokens);
  const double n = static_cast<double>(tokens.size());
  const double v = static_cast<double>(distinct(tokens));
  LexDivScores out;
  out.ttr = v / n;
  out.root_ttr = v / std::sqrt(n);
  if (tokens.size() == 1) {
    out.log_ttr = 1.0;
    out.maas = 0.0;
  } else {
    const double ln_n = std::log(n);
    out.log_ttr = std::log(v) / ln_n;
    out.maas = (ln_n - std::log(v)) / (ln_n * ln_n);
  }
  out.msttr = msttr(tokens, cfg.segment_len);
  out.mattr = mattr(tokens, cfg.window_len);
  out.hdd = hdd(tokens, cfg.hdd_sample);
  out.mtld = mtld(tokens, cfg.mtld_threshold);
  return out;
}

}  // namespace erisk::lexdiv
