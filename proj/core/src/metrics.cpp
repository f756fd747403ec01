#include "erisk/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "erisk/error.hpp"
#include "json.hpp"

namespace erisk::metrics {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double latency_cost(double k, double o) { return 1.0 - 1.0 / (1.0 + std::exp(k - o)); }

double speed_penalty(double k, double p) { return -1.0 + 2.0 / (1.0 + std::exp(-p * (k - 1.0))); }

DecisionMetrics decision_metrics(const stream::DecisionLog& log, const GoldLabels& gold,
                                 const MetricConfig& cfg) {
  for (int o : cfg.erde_o)
    if (o <= 0) throw DomainError(fmt::format("erde_o must be positive, got {}", o));

  DecisionMetrics m;
  std::size_t positives = 0;
  for (const auto& [subject, entries] : log) {
    auto it = gold.find(subject);
    if (it == gold.end()) throw ValidationError("no gold label for subject " + subject);
    if (it->second == 1) ++positives;
  }
  if (log.empty()) throw ValidationError("decision log is empty");

  m.c_fp = cfg.c_fp ? *cfg.c_fp : static_cast<double>(positives) / static_cast<double>(log.size());

  std::map<int, double> erde_sum;
  for (int o : cfg.erde_o) erde_sum[o] = 0.0;
  std::vector<double> tp_delays;

  for (const auto& [subject, entries] : log) {
    const bool truth = gold.at(subject) == 1;
    auto first = std::find_if(entries.begin(), entries.end(), [](const stream::LogEntry& e) { return e.decision == 1; });
    const bool alerted = first != entries.end();
    if (alerted && truth) {
      ++m.tp;
      const double k = static_cast<double>(first->round + 1);
      tp_delays.push_back(k);
      for (int o : cfg.erde_o) erde_sum[o] += cfg.c_tp * latency_cost(k, o);
    } else if (alerted) {
      ++m.fp;
      for (int o : cfg.erde_o) erde_sum[o] += m.c_fp;
    } else if (truth) {
      ++m.fn;
      for (int o : cfg.erde_o) erde_sum[o] += cfg.c_fn;
    } else {
      ++m.tn;
    }
  }

  const double n = static_cast<double>(log.size());
  for (auto& [o, s] : erde_sum) m.erde[o] = s / n;

  m.precision = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
  m.recall = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;

  if (tp_delays.empty()) {
    m.no_true_positives = true;
  } else {
    std::vector<double> penalties;
    penalties.reserve(tp_delays.size());
    for (double k : tp_delays) penalties.push_back(speed_penalty(k, cfg.speed_p));
    m.latency_tp = cfg.latency_mean ? mean(tp_delays) : median(tp_delays);
    m.speed = 1.0 - (cfg.latency_mean ? mean(penalties) : median(penalties));
  }
  m.f_latency = m.f1 * m.speed;
  return m;
}

RankingMetrics ranking_metrics(const std::map<std::string, double>& scores, const GoldLabels& gold,
                               std::span<const int> ks) {
  if (scores.empty()) throw DomainError("ranking needs at least one scored subject");
  std::vector<std::pair<std::string, double>> ranked(scores.begin(), scores.end());
  // The map is already ordered by subject_id, so a stable sort keeps ties in id order.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<int> rel(ranked.size());
  std::size_t total_relevant = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    auto it = gold.find(ranked[i].first);
    if (it == gold.end()) throw ValidationError("no gold label for subject " + ranked[i].first);
    rel[i] = it->second == 1 ? 1 : 0;
    total_relevant += rel[i];
  }

  RankingMetrics out;
  out.no_relevant = total_relevant == 0;
  for (int k : ks) {
    if (k <= 0) throw DomainError(fmt::format("rank cutoff must be positive, got {}", k));
    RankingAtK r;
    const std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
    r.truncated = static_cast<std::size_t>(k) > ranked.size();
    double hits = 0, dcg = 0, idcg = 0;
    for (std::size_t i = 0; i < limit; ++i) {
      const double discount = 1.0 / std::log2(static_cast<double>(i) + 2.0);
      hits += rel[i];
      dcg += rel[i] * discount;
      if (i < total_relevant) idcg += discount;
    }
    r.precision = hits / static_cast<double>(limit);
    r.ndcg = idcg > 0 ? dcg / idcg : 0.0;
    out.at[k] = r;
  }
  return out;
}

std::map<std::string, double> scores_after(const stream::DecisionLog& log, std::size_t j) {
  std::map<std::string, double> out;
  for (const auto& [subject, entries] : log) {
    const stream::LogEntry* last = nullptr;
    for (const auto& e : entries) {
      if (e.round >= j) break;
      last = &e;
    }
    if (last == nullptr && !entries.empty()) last = &entries.front();
    if (last != nullptr) out[subject] = last->score;
  }
  return out;
}

QuestionnaireMetrics questionnaire_metrics(std::span<const edeq::AnswerSheet> pred,
                                           std::span<const edeq::AnswerSheet> gold,
                                           const edeq::Questionnaire& q) {
  std::map<std::string, const edeq::AnswerSheet*> p, g;
  for (const auto& s : pred)
    if (!p.emplace(s.user_id, &s).second) throw ValidationError("duplicate predicted sheet for " + s.user_id);
  for (const auto& s : gold)
    if (!g.emplace(s.user_id, &s).second) throw ValidationError("duplicate gold sheet for " + s.user_id);
  for (const auto& [u, _] : p)
    if (!g.count(u)) throw ValidationError("user " + u + " has a prediction but no gold sheet");
  for (const auto& [u, _] : g)
    if (!p.count(u)) throw ValidationError("user " + u + " has a gold sheet but no prediction");
  if (g.empty()) throw ValidationError("no answer sheets to compare");

  std::size_t pairs = 0, wrong = 0;
  double abs_sum = 0;
  std::array<double, 7> cat_sum{};
  std::array<std::size_t, 7> cat_n{};
  double ged = 0, rs = 0, ecs = 0, scs = 0, wcs = 0;

  for (const auto& [u, gs] : g) {
    const auto& ps = *p.at(u);
    for (const auto& item : q.items) {
      auto pi = ps.answers.find(item.number);
      auto gi = gs->answers.find(item.number);
      if (pi == ps.answers.end() || gi == gs->answers.end())
        throw ValidationError(fmt::format("user {} is missing item {}", u, item.number));
      const int gv = gi->second;
      if (gv < 0 || gv > 6) throw ValidationError(fmt::format("user {} item {} gold answer {} outside 0..6", u, item.number, gv));
      const double d = std::abs(pi->second - gv);
      ++pairs;
      wrong += pi->second != gv ? 1 : 0;
      abs_sum += d;
      cat_sum[static_cast<std::size_t>(gv)] += d;
      ++cat_n[static_cast<std::size_t>(gv)];
    }
    const auto sp = edeq::score_sheet(ps, q);
    const auto sg = edeq::score_sheet(*gs, q);
    ged += std::abs(sp.global - sg.global);
    rs += std::abs(sp.rs - sg.rs);
    ecs += std::abs(sp.ecs - sg.ecs);
    scs += std::abs(sp.scs - sg.scs);
    wcs += std::abs(sp.wcs - sg.wcs);
  }

  QuestionnaireMetrics m;
  m.mzoe = static_cast<double>(wrong) / static_cast<double>(pairs);
  m.mae = abs_sum / static_cast<double>(pairs);
  double macro = 0;
  int cats = 0;
  for (std::size_t c = 0; c < 7; ++c) {
    if (cat_n[c] == 0) continue;
    macro += cat_sum[c] / static_cast<double>(cat_n[c]);
    ++cats;
  }
  m.mae_macro = macro / cats;
  const double users = static_cast<double>(g.size());
  m.ged = ged / users;
  m.rs = rs / users;
  m.ecs = ecs / users;
  m.scs = scs / users;
  m.wcs = wcs / users;
  return m;
}

std::string to_json(const DecisionMetrics& m) {
  nlohmann::ordered_json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["F1"] = m.f1;
  for (const auto& [o, v] : m.erde) j[fmt::format("ERDE_{}", o)] = v;
  j["latency_TP"] = m.latency_tp;
  j["speed"] = m.speed;
  j["F_latency"] = m.f_latency;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["fn"] = m.fn;
  j["tn"] = m.tn;
  j["c_fp"] = m.c_fp;
  j["no_true_positives"] = m.no_true_positives;
  return j.dump(2);
}

std::string to_json(const RankingMetrics& m) {
  nlohmann::ordered_json j;
  for (const auto& [k, r] : m.at) {
    j[fmt::format("P@{}", k)] = r.precision;
    j[fmt::format("NDCG@{}", k)] = r.ndcg;
    if (r.truncated) j[fmt::format("truncated@{}", k)] = true;
  }
  j["no_relevant"] = m.no_relevant;
  return j.dump(2);
}

std::string to_json(const QuestionnaireMetrics& m) {
  nlohmann::ordered_json j;
  for (const auto& [name, v] : rows_of(m)) j[name] = v;
  return j.dump(2);
}

std::vector<std::pair<std::string, double>> rows_of(const DecisionMetrics& m) {
  std::vector<std::pair<std::string, double>> rows = {
      {"precision", m.precision}, {"recall", m.recall}, {"F1", m.f1}};
  for (const auto& [o, v] : m.erde) rows.emplace_back(fmt::format("ERDE_{}", o), v);
  rows.emplace_back("latency_TP", m.latency_tp);
  rows.emplace_back("speed", m.speed);
  rows.emplace_back("F_latency", m.f_latency);
  return rows;
}

std::vector<std::pair<std::string, double>> rows_of(const QuestionnaireMetrics& m) {
  return {{"MZOE", m.mzoe}, {"MAE", m.mae}, {"MAE_macro", m.mae_macro}, {"GED", m.ged},
          {"RS", m.rs},     {"ECS", m.ecs}, {"SCS", m.scs},             {"WCS", m.wcs}};
}

std::string to_table(const std::vector<std::pair<std::string, double>>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  std::string out;
  for (const auto& [name, v] : rows) out += fmt::format("{:<{}}  {:>10.6f}\n", name, width, v);
  return out;
}

}  // namespace erisk::metrics
