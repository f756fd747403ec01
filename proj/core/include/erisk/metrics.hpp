#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "erisk/edeq.hpp"
#include "erisk/stream.hpp"

namespace erisk::metrics {

struct MetricConfig {
  std::vector<int> erde_o = {5, 50};
  double c_fn = 1.0;
  double c_tp = 1.0;
  /// Cost of a false positive; defaults to the positive prevalence of the
  /// evaluated population.
  std::optional<double> c_fp;
  double speed_p = 0.0078;
  /// Aggregate latency_TP and the speed penalty by mean instead of median.
  bool latency_mean = false;
};

/// subject_id -> 0/1.
using GoldLabels = std::map<std::string, int>;

struct DecisionMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::map<int, double> erde;  // o -> ERDE_o
  double latency_tp = 0;
  double speed = 0;
  double f_latency = 0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double c_fp = 0;
  bool no_true_positives = false;  // latency_tp and speed are 0 by convention
};

/// lc_o(k) = 1 - 1/(1 + e^(k - o)).
double latency_cost(double k, double o);
/// penalty(k) = -1 + 2/(1 + e^(-p (k - 1))).
double speed_penalty(double k, double p);

/// Every logged subject is evaluated; the alert of a positive subject is
/// its first decision=1, counted as writing k = round + 1. ValidationError
/// when a logged subject has no gold label.
DecisionMetrics decision_metrics(const stream::DecisionLog& log, const GoldLabels& gold,
                                 const MetricConfig& cfg = {});

struct RankingAtK {
  double precision = 0;
  double ndcg = 0;
  bool truncated = false;  // k exceeded the population; computed over what exists
};

struct RankingMetrics {
  std::map<int, RankingAtK> at;
  bool no_relevant = false;  // NDCG reported as 0
};

/// Sorted by descending score, ties by subject_id. Binary gains with
/// log2(rank + 1) discounts. DomainError on an empty score map.
RankingMetrics ranking_metrics(const std::map<std::string, double>& scores, const GoldLabels& gold,
                               std::span<const int> ks);

/// Score of each subject after j writings (its last score if it ran out
/// of writings earlier). Subjects with no entries are skipped.
std::map<std::string, double> scores_after(const stream::DecisionLog& log, std::size_t j);

struct QuestionnaireMetrics {
  double mzoe = 0;
  double mae = 0;
  double mae_macro = 0;
  double ged = 0;
  double rs = 0;
  double ecs = 0;
  double scs = 0;
  double wcs = 0;
};

/// ValidationError unless pred and gold cover the same users and every item.
QuestionnaireMetrics questionnaire_metrics(std::span<const edeq::AnswerSheet> pred,
                                           std::span<const edeq::AnswerSheet> gold,
                                           const edeq::Questionnaire& q);

/// JSON objects with the field names used in reports.
std::string to_json(const DecisionMetrics& m);
std::string to_json(const RankingMetrics& m);
std::string to_json(const QuestionnaireMetrics& m);

/// Two-column "name  value" table, names left-aligned.
std::string to_table(const std::vector<std::pair<std::string, double>>& rows);
std::vector<std::pair<std::string, double>> rows_of(const DecisionMetrics& m);
std::vector<std::pair<std::string, double>> rows_of(const QuestionnaireMetrics& m);

}  // namespace erisk::metrics
