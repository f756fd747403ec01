#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace erisk::lexdiv {

struct LexDivConfig {
  std::size_t segment_len = 50;   // MSTTR
  std::size_t window_len = 50;    // MATTR
  std::size_t hdd_sample = 42;    // HD-D sample size
  double mtld_threshold = 0.72;   // MTLD factor ceiling
};

struct LexDivScores {
  double ttr = 0;
  double root_ttr = 0;
  double log_ttr = 0;
  double maas = 0;
  double msttr = 0;
  double mattr = 0;
  double hdd = 0;
  double mtld = 0;
};

/// Scores over lowercased word tokens. Throws DomainError for an empty
/// sequence or a config with zero lengths / threshold outside (0,1).
LexDivScores lexdiv(std::span<const std::string> tokens, const LexDivConfig& cfg = {});

// Individual measures, exposed for tests and benchmarks. All require a
// non-empty sequence.
double ttr(std::span<const std::string> tokens);
double msttr(std::span<const std::string> tokens, std::size_t segment_len);
double mattr(std::span<const std::string> tokens, std::size_t window_len);
double hdd(std::span<const std::string> tokens, std::size_t sample);
double mtld(std::span<const std::string> tokens, double threshold);

/// ln C(n, k); -inf when k > n.
double log_binomial(std::size_t n, std::size_t k);

}  // namespace erisk::lexdiv
