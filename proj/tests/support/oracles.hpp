#pragma once

// Independent reference computations used by unit and acceptance tests.
// None of these call into the library code they are compared against.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "erisk/model.hpp"
#include "erisk/stream.hpp"

namespace oracle {

struct LexDiv {
  double ttr, root_ttr, log_ttr, maas, msttr, mattr;
};

/// Textbook formulas, recomputed with std::set per window/segment.
LexDiv direct_lexdiv(const std::vector<std::string>& tokens, std::size_t segment_len, std::size_t window_len);

/// Expected distinct-type count of a size-s sample without replacement,
/// divided by s, by enumerating every s-subset of positions. N <= ~20.
double brute_hdd(const std::vector<std::string>& tokens, std::size_t s);

/// MTLD written from its definition: factor ends when the running TTR
/// falls below the threshold; the leftover contributes a partial factor.
double naive_mtld(const std::vector<std::string>& tokens, double threshold);

/// Random token sequence of length n over a vocabulary of v words.
std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t n, std::size_t v);

struct ReadabilityCounts {
  double words, sentences, syllables, letters;
};
double fernandez_huerta(const ReadabilityCounts& c);
double flesch_szigriszt(const ReadabilityCounts& c);
double gutierrez(const ReadabilityCounts& c);
double ari(const ReadabilityCounts& c);

struct GradCheck {
  double max_rel_error = 0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

/// Central differences of model::loss against the analytic gradient.
/// `w1_samples` entries of W1 are drawn at random; b1, W2, b2 are checked
/// in full. Entries whose perturbation flips a ReLU input are skipped.
GradCheck check_gradients(const erisk::model::HeadParams& h, const std::vector<erisk::model::Example>& batch,
                          erisk::model::Mode mode, double eps, std::size_t w1_samples, std::mt19937_64& rng);

struct Erde {
  std::map<int, double> erde;
  double precision, recall, f1, latency_tp, speed, f_latency;
};

/// Per-subject cost sum written out from the lab's definitions.
Erde direct_erde(const erisk::stream::DecisionLog& log, const std::map<std::string, int>& gold,
                 const std::vector<int>& os, double p = 0.0078);

struct Task3 {
  double mzoe, mae, mae_macro, ged, rs, ecs, scs, wcs;
};

/// Sheets as (user -> 22 answers in item order 1..12, 19..28).
Task3 brute_task3(const std::map<std::string, std::vector<int>>& pred,
                  const std::map<std::string, std::vector<int>>& gold);

}  // namespace oracle
