#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "erisk/error.hpp"
#include "erisk/metrics.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace erisk;
using namespace erisk::metrics;
using stream::DecisionLog;
using stream::LogEntry;

namespace {

/// One entry per round up to `rounds`; decision 1 from `alert_round` on.
std::vector<LogEntry> trace(std::size_t rounds, std::optional<std::size_t> alert_round, double score = 0.5) {
  std::vector<LogEntry> out;
  for (std::size_t r = 0; r < rounds; ++r)
    out.push_back({r, alert_round && r >= *alert_round ? 1 : 0, score + 0.001 * static_cast<double>(r)});
  return out;
}

std::map<std::string, std::vector<int>> flat(std::span<const edeq::AnswerSheet> sheets) {
  std::map<std::string, std::vector<int>> out;
  for (const auto& s : sheets)
    for (const auto& it : edeq::bundled_questionnaire().items) out[s.user_id].push_back(s.answers.at(it.number));
  return out;
}

std::string sid(int i) { return (i < 10 ? "s0" : "s") + std::to_string(i); }

edeq::AnswerSheet uniform(const std::string& user, int v) {
  edeq::AnswerSheet s{user, {}};
  for (const auto& it : edeq::bundled_questionnaire().items) s.answers[it.number] = v;
  return s;
}

}  // namespace

TEST(Latency, Cost) {
  EXPECT_NEAR(latency_cost(1, 5), 1.0 - 1.0 / (1.0 + std::exp(-4.0)), 1e-15);
  EXPECT_NEAR(latency_cost(1, 5), 0.017986, 1e-6);
  EXPECT_DOUBLE_EQ(latency_cost(5, 5), 0.5);
  EXPECT_DOUBLE_EQ(speed_penalty(1, 0.0078), 0.0);
  EXPECT_GT(speed_penalty(100, 0.0078), 0.0);
  EXPECT_LT(speed_penalty(1e9, 0.0078), 1.0 + 1e-12);
}

TEST(Decision, SingleEarlyTruePositive) {
  DecisionLog log{{"a", trace(3, 0)}, {"b", trace(3, std::nullopt)}};
  GoldLabels gold{{"a", 1}, {"b", 0}};
  MetricConfig cfg;
  cfg.erde_o = {5};
  const auto m = decision_metrics(log, gold, cfg);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
  EXPECT_DOUBLE_EQ(m.latency_tp, 1.0);
  EXPECT_DOUBLE_EQ(m.speed, 1.0);
  EXPECT_DOUBLE_EQ(m.f_latency, m.f1);
  EXPECT_NEAR(m.erde.at(5), 0.017986 / 2.0, 1e-6);
  EXPECT_FALSE(m.no_true_positives);
}

TEST(Decision, FalsePositiveCostsPrevalence) {
  DecisionLog log;
  GoldLabels gold;
  for (int i = 0; i < 10; ++i) {
    const std::string id = "s" + std::to_string(i);
    gold[id] = i < 2 ? 1 : 0;
    log[id] = trace(4, i == 5 ? std::optional<std::size_t>(2) : std::nullopt);
  }
  const auto m = decision_metrics(log, gold);
  EXPECT_DOUBLE_EQ(m.c_fp, 0.2);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.fn, 2u);
  // Two missed positives cost 1 each, the false alarm 0.2.
  EXPECT_NEAR(m.erde.at(5), (2.0 + 0.2) / 10.0, 1e-12);
  EXPECT_TRUE(m.no_true_positives);
  EXPECT_EQ(m.latency_tp, 0.0);
  EXPECT_EQ(m.speed, 0.0);
  EXPECT_EQ(m.f_latency, 0.0);
}

TEST(Decision, CfpOverride) {
  DecisionLog log{{"a", trace(2, 0)}, {"b", trace(2, std::nullopt)}};
  GoldLabels gold{{"a", 0}, {"b", 1}};
  MetricConfig cfg;
  cfg.c_fp = 0.7;
  cfg.erde_o = {5};
  const auto m = decision_metrics(log, gold, cfg);
  EXPECT_NEAR(m.erde.at(5), (0.7 + 1.0) / 2.0, 1e-12);
}

TEST(Decision, AlertIsFirstPositiveDecision) {
  DecisionLog log{{"a", {{0, 0, 0.1}, {1, 0, 0.2}, {2, 1, 0.9}, {3, 1, 0.9}}}};
  const auto m = decision_metrics(log, {{"a", 1}});
  EXPECT_DOUBLE_EQ(m.latency_tp, 3.0);
  EXPECT_NEAR(m.erde.at(5), latency_cost(3, 5), 1e-15);
}

TEST(Decision, MedianVersusMean) {
  DecisionLog log{{"a", trace(10, 0)}, {"b", trace(10, 1)}, {"c", trace(10, 8)}};
  GoldLabels gold{{"a", 1}, {"b", 1}, {"c", 1}};
  auto med = decision_metrics(log, gold);
  EXPECT_DOUBLE_EQ(med.latency_tp, 2.0);
  MetricConfig cfg;
  cfg.latency_mean = true;
  auto mean = decision_metrics(log, gold, cfg);
  EXPECT_DOUBLE_EQ(mean.latency_tp, 4.0);
}

TEST(Decision, Errors) {
  DecisionLog log{{"a", trace(2, 0)}};
  EXPECT_THROW(decision_metrics(log, {{"z", 1}}), ValidationError);
  MetricConfig cfg;
  cfg.erde_o = {0};
  EXPECT_THROW(decision_metrics(log, {{"a", 1}}, cfg), DomainError);
}

TEST(Decision, MatchesDirectOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    DecisionLog log;
    GoldLabels gold;
    const int n = 5 + static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
      const std::string id = "u" + std::to_string(i);
      gold[id] = rng() % 3 == 0;
      const std::size_t rounds = 1 + rng() % 60;
      std::optional<std::size_t> alert;
      if (rng() % 2) alert = rng() % rounds;
      log[id] = trace(rounds, alert);
    }
    MetricConfig cfg;
    const auto got = decision_metrics(log, gold, cfg);
    const auto want = oracle::direct_erde(log, gold, {5, 50});
    for (int o : {5, 50}) EXPECT_NEAR(got.erde.at(o), want.erde.at(o), 1e-12);
    EXPECT_NEAR(got.precision, want.precision, 1e-12);
    EXPECT_NEAR(got.recall, want.recall, 1e-12);
    EXPECT_NEAR(got.f1, want.f1, 1e-12);
    EXPECT_NEAR(got.latency_tp, want.latency_tp, 1e-12);
    EXPECT_NEAR(got.speed, want.speed, 1e-12);
    EXPECT_NEAR(got.f_latency, want.f_latency, 1e-12);
  }
}

TEST(Decision, ErdeNonIncreasingInO) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 30; ++trial) {
    DecisionLog log;
    GoldLabels gold;
    for (int i = 0; i < 20; ++i) {
      const std::string id = "u" + std::to_string(i);
      gold[id] = i % 4 == 0;
      log[id] = trace(40, rng() % 2 ? std::optional<std::size_t>(rng() % 40) : std::nullopt);
    }
    MetricConfig cfg;
    cfg.erde_o = {1, 2, 5, 10, 20, 50, 100};
    const auto m = decision_metrics(log, gold, cfg);
    double prev = 2.0;
    for (int o : cfg.erde_o) {
      EXPECT_LE(m.erde.at(o), prev + 1e-15);
      EXPECT_GE(m.erde.at(o), 0.0);
      EXPECT_LE(m.erde.at(o), 1.0);
      prev = m.erde.at(o);
    }
  }
}

TEST(Ranking, PrecisionAtTen) {
  std::map<std::string, double> scores;
  GoldLabels gold;
  for (int i = 0; i < 20; ++i) {
    scores[sid(i)] = 1.0 - 0.01 * i;
    gold[sid(i)] = (i == 0 || i == 4 || i == 9 || i == 15) ? 1 : 0;
  }
  const std::vector<int> ks{10};
  const auto r = ranking_metrics(scores, gold, ks);
  EXPECT_DOUBLE_EQ(r.at.at(10).precision, 0.3);
  const double dcg = 1.0 + 1.0 / std::log2(6.0) + 1.0 / std::log2(11.0);
  const double idcg = 1.0 + 1.0 / std::log2(3.0) + 1.0 / std::log2(4.0) + 1.0 / std::log2(5.0);
  EXPECT_NEAR(r.at.at(10).ndcg, dcg / idcg, 1e-12);
  EXPECT_FALSE(r.at.at(10).truncated);
}

TEST(Ranking, PositivesFirstGiveNdcgOne) {
  std::mt19937_64 rng(40);
  for (int trial = 0; trial < 20; ++trial) {
    std::map<std::string, double> scores;
    GoldLabels gold;
    for (int i = 0; i < 50; ++i) {
      const bool pos = rng() % 4 == 0 || i == 0;
      gold[sid(i)] = pos;
      scores[sid(i)] = pos ? 0.5 + 0.5 * (rng() % 1000) / 1000.0 : 0.49 * (rng() % 1000) / 1000.0;
    }
    const std::vector<int> ks{1, 10, 50};
    const auto r = ranking_metrics(scores, gold, ks);
    for (int k : ks) EXPECT_NEAR(r.at.at(k).ndcg, 1.0, 1e-12) << k;
  }
}

TEST(Ranking, NdcgBounded) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 30; ++trial) {
    std::map<std::string, double> scores;
    GoldLabels gold;
    for (int i = 0; i < 30; ++i) {
      scores[sid(i)] = u(rng);
      gold[sid(i)] = rng() % 3 == 0;
    }
    gold[sid(0)] = 1;
    const std::vector<int> ks{5, 10, 30};
    for (const auto& [k, at] : ranking_metrics(scores, gold, ks).at) {
      EXPECT_GE(at.ndcg, 0.0);
      EXPECT_LE(at.ndcg, 1.0 + 1e-12);
      EXPECT_GE(at.precision, 0.0);
      EXPECT_LE(at.precision, 1.0);
    }
  }
}

TEST(Ranking, TiesBreakBySubjectId) {
  std::map<std::string, double> scores{{"b", 0.5}, {"a", 0.5}};
  const std::vector<int> ks{1};
  EXPECT_DOUBLE_EQ(ranking_metrics(scores, {{"a", 1}, {"b", 0}}, ks).at.at(1).precision, 1.0);
  EXPECT_DOUBLE_EQ(ranking_metrics(scores, {{"a", 0}, {"b", 1}}, ks).at.at(1).precision, 0.0);
}

TEST(Ranking, NoRelevantAndTruncated) {
  std::map<std::string, double> scores{{"a", 0.9}, {"b", 0.1}};
  const std::vector<int> ks{1, 10};
  const auto r = ranking_metrics(scores, {{"a", 0}, {"b", 0}}, ks);
  EXPECT_TRUE(r.no_relevant);
  EXPECT_EQ(r.at.at(1).ndcg, 0.0);
  EXPECT_TRUE(r.at.at(10).truncated);
  EXPECT_FALSE(r.at.at(1).truncated);
  EXPECT_THROW(ranking_metrics({}, {}, ks), DomainError);
}

TEST(Ranking, ScoresAfter) {
  DecisionLog log{{"a", {{0, 0, 0.1}, {1, 0, 0.2}, {2, 0, 0.3}}}, {"b", {{0, 0, 0.7}}}, {"c", {}}};
  auto s1 = scores_after(log, 1);
  EXPECT_DOUBLE_EQ(s1.at("a"), 0.1);
  auto s3 = scores_after(log, 3);
  EXPECT_DOUBLE_EQ(s3.at("a"), 0.3);
  EXPECT_DOUBLE_EQ(s3.at("b"), 0.7);
  EXPECT_EQ(s3.count("c"), 0u);
}

TEST(Questionnaire, TwoItemExample) {
  // With every other item equal, a single [0,6] vs [0,0] pair on RS items
  // gives MZOE 1/22 and MAE 6/22 over the whole sheet.
  auto gold = uniform("u", 0);
  auto pred = uniform("u", 0);
  gold.answers[2] = 6;
  const std::vector<edeq::AnswerSheet> p{pred}, g{gold};
  const auto m = questionnaire_metrics(p, g, edeq::bundled_questionnaire());
  EXPECT_NEAR(m.mzoe, 1.0 / 22.0, 1e-12);
  EXPECT_NEAR(m.mae, 6.0 / 22.0, 1e-12);
  // Gold categories 0 (21 items, error 0) and 6 (1 item, error 6).
  EXPECT_NEAR(m.mae_macro, 3.0, 1e-12);
  EXPECT_NEAR(m.rs, 6.0 / 5.0, 1e-12);
}

TEST(Questionnaire, Perfect) {
  std::mt19937_64 rng(50);
  std::vector<edeq::AnswerSheet> sheets;
  for (int u = 0; u < 5; ++u) {
    edeq::AnswerSheet s{"u" + std::to_string(u), {}};
    for (const auto& it : edeq::bundled_questionnaire().items) s.answers[it.number] = static_cast<int>(rng() % 7);
    sheets.push_back(s);
  }
  const auto m = questionnaire_metrics(sheets, sheets, edeq::bundled_questionnaire());
  for (double v : {m.mzoe, m.mae, m.mae_macro, m.ged, m.rs, m.ecs, m.scs, m.wcs}) EXPECT_EQ(v, 0.0);
}

TEST(Questionnaire, MatchesBruteForce) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<edeq::AnswerSheet> pred, gold;
    const int users = 1 + static_cast<int>(rng() % 8);
    for (int u = 0; u < users; ++u) {
      edeq::AnswerSheet p{"u" + std::to_string(u), {}}, g{"u" + std::to_string(u), {}};
      for (const auto& it : edeq::bundled_questionnaire().items) {
        p.answers[it.number] = static_cast<int>(rng() % 7);
        g.answers[it.number] = static_cast<int>(rng() % 4);
      }
      pred.push_back(p);
      gold.push_back(g);
    }
    const auto got = questionnaire_metrics(pred, gold, edeq::bundled_questionnaire());
    const auto want = oracle::brute_task3(flat(pred), flat(gold));
    EXPECT_NEAR(got.mzoe, want.mzoe, 1e-12);
    EXPECT_NEAR(got.mae, want.mae, 1e-12);
    EXPECT_NEAR(got.mae_macro, want.mae_macro, 1e-12);
    EXPECT_NEAR(got.ged, want.ged, 1e-12);
    EXPECT_NEAR(got.rs, want.rs, 1e-12);
    EXPECT_NEAR(got.ecs, want.ecs, 1e-12);
    EXPECT_NEAR(got.scs, want.scs, 1e-12);
    EXPECT_NEAR(got.wcs, want.wcs, 1e-12);
  }
}

TEST(Questionnaire, CoverageErrors) {
  const auto& q = edeq::bundled_questionnaire();
  const std::vector<edeq::AnswerSheet> a{uniform("a", 1)}, b{uniform("b", 1)}, dup{uniform("a", 1), uniform("a", 2)};
  EXPECT_THROW(questionnaire_metrics(a, b, q), ValidationError);
  EXPECT_THROW(questionnaire_metrics(dup, dup, q), ValidationError);
  auto missing = uniform("a", 1);
  missing.answers.erase(28);
  const std::vector<edeq::AnswerSheet> m{missing};
  EXPECT_THROW(questionnaire_metrics(m, a, q), ValidationError);
}

TEST(Output, JsonAndTable) {
  DecisionLog log{{"a", trace(3, 0)}, {"b", trace(3, std::nullopt)}};
  const auto m = decision_metrics(log, {{"a", 1}, {"b", 0}});
  const auto j = nlohmann::json::parse(to_json(m));
  EXPECT_DOUBLE_EQ(j.at("F1").get<double>(), 1.0);
  EXPECT_TRUE(j.contains("ERDE_5"));
  EXPECT_TRUE(j.contains("ERDE_50"));
  EXPECT_TRUE(j.contains("F_latency"));
  const auto table = to_table(rows_of(m));
  EXPECT_NE(table.find("F1"), std::string::npos);
  EXPECT_NE(table.find("1.000000"), std::string::npos);
}
