#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace oracle {

namespace {

double set_ttr(const std::vector<std::string>& t, std::size_t from, std::size_t len) {
  std::set<std::string> s(t.begin() + static_cast<long>(from), t.begin() + static_cast<long>(from + len));
  return static_cast<double>(s.size()) / static_cast<double>(len);
}

}  // namespace

LexDiv direct_lexdiv(const std::vector<std::string>& tokens, std::size_t segment_len, std::size_t window_len) {
  const std::size_t n = tokens.size();
  const double N = static_cast<double>(n);
  const double V = static_cast<double>(std::set<std::string>(tokens.begin(), tokens.end()).size());
  LexDiv out{};
  out.ttr = V / N;
  out.root_ttr = V / std::sqrt(N);
  out.log_ttr = n == 1 ? 1.0 : std::log(V) / std::log(N);
  out.maas = n == 1 ? 0.0 : (std::log(N) - std::log(V)) / (std::log(N) * std::log(N));

  if (n < segment_len) {
    out.msttr = out.ttr;
  } else {
    double sum = 0;
    std::size_t k = 0;
    for (std::size_t start = 0; start + segment_len <= n; start += segment_len, ++k) sum += set_ttr(tokens, start, segment_len);
    out.msttr = sum / static_cast<double>(k);
  }
  if (n < window_len) {
    out.mattr = out.ttr;
  } else {
    double sum = 0;
    std::size_t k = 0;
    for (std::size_t start = 0; start + window_len <= n; ++start, ++k) sum += set_ttr(tokens, start, window_len);
    out.mattr = sum / static_cast<double>(k);
  }
  return out;
}

double brute_hdd(const std::vector<std::string>& tokens, std::size_t s) {
  const std::size_t n = tokens.size();
  s = std::min(s, n);
  std::vector<std::size_t> pick(s);
  double distinct_sum = 0;
  double subsets = 0;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t next, std::size_t depth) {
    if (depth == s) {
      std::set<std::string> seen;
      for (std::size_t i : pick) seen.insert(tokens[i]);
      distinct_sum += static_cast<double>(seen.size());
      subsets += 1;
      return;
    }
    for (std::size_t i = next; i < n; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return distinct_sum / subsets / static_cast<double>(s);
}

double naive_mtld(const std::vector<std::string>& tokens, double threshold) {
  auto pass = [&](std::vector<std::string> seq) {
    double factors = 0;
    std::vector<std::string> current;
    for (const auto& t : seq) {
      current.push_back(t);
      std::set<std::string> types(current.begin(), current.end());
      const double ratio = static_cast<double>(types.size()) / static_cast<double>(current.size());
      if (ratio < threshold) {
        factors += 1;
        current.clear();
      }
    }
    if (!current.empty()) {
      std::set<std::string> types(current.begin(), current.end());
      const double ratio = static_cast<double>(types.size()) / static_cast<double>(current.size());
      factors += (1 - ratio) / (1 - threshold);
    }
    return factors == 0 ? static_cast<double>(seq.size()) : static_cast<double>(seq.size()) / factors;
  };
  std::vector<std::string> rev(tokens.rbegin(), tokens.rend());
  return (pass(tokens) + pass(rev)) / 2;
}

std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t n, std::size_t v) {
  std::uniform_int_distribution<std::size_t> pick(0, v - 1);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(pick(rng)));
  return out;
}

double fernandez_huerta(const ReadabilityCounts& c) {
  return 206.84 - 0.60 * (100 * c.syllables / c.words) - 1.02 * (100 * c.sentences / c.words);
}
double flesch_szigriszt(const ReadabilityCounts& c) {
  return 206.835 - 62.3 * (c.syllables / c.words) - c.words / c.sentences;
}
double gutierrez(const ReadabilityCounts& c) { return 95.2 - 9.7 * (c.letters / c.words) - 0.35 * (c.words / c.sentences); }
double ari(const ReadabilityCounts& c) { return 4.71 * (c.letters / c.words) + 0.5 * (c.words / c.sentences) - 21.43; }

GradCheck check_gradients(const erisk::model::HeadParams& h, const std::vector<erisk::model::Example>& batch,
                          erisk::model::Mode mode, double eps, std::size_t w1_samples, std::mt19937_64& rng) {
  using erisk::model::HeadParams;
  const auto analytic = erisk::model::loss_and_grad(h, batch, mode).grad;
  GradCheck out;

  // Pre-activations of every sample; used to spot entries whose
  // perturbation crosses a ReLU kink.
  std::vector<Eigen::VectorXd> pre;
  for (const auto& ex : batch) pre.push_back(h.w1 * ex.x + h.b1);

  auto check = [&](double& param, double grad, auto crosses) {
    if (crosses()) {
      ++out.skipped_kinks;
      return;
    }
    const double saved = param;
    HeadParams& hp = const_cast<HeadParams&>(h);
    param = saved + eps;
    const double up = erisk::model::loss(hp, batch, mode);
    param = saved - eps;
    const double down = erisk::model::loss(hp, batch, mode);
    param = saved;
    const double numeric = (up - down) / (2 * eps);
    const double scale = std::max(std::abs(numeric), std::abs(grad));
    const double rel = scale < 1e-10 ? 0.0 : std::abs(numeric - grad) / scale;
    out.max_rel_error = std::max(out.max_rel_error, rel);
    ++out.checked;
  };

  auto& hp = const_cast<HeadParams&>(h);
  std::uniform_int_distribution<Eigen::Index> row(0, h.w1.rows() - 1), col(0, h.w1.cols() - 1);
  for (std::size_t s = 0; s < w1_samples; ++s) {
    const auto r = row(rng), c = col(rng);
    check(hp.w1(r, c), analytic.w1(r, c), [&] {
      for (std::size_t i = 0; i < batch.size(); ++i)
        if (std::abs(pre[i][r]) <= std::abs(eps * batch[i].x[c])) return true;
      return false;
    });
  }
  for (Eigen::Index r = 0; r < h.b1.size(); ++r) {
    check(hp.b1[r], analytic.b1[r], [&] {
      for (std::size_t i = 0; i < batch.size(); ++i)
        if (std::abs(pre[i][r]) <= eps) return true;
      return false;
    });
  }
  for (Eigen::Index r = 0; r < h.w2.rows(); ++r)
    for (Eigen::Index c = 0; c < h.w2.cols(); ++c) check(hp.w2(r, c), analytic.w2(r, c), [] { return false; });
  for (Eigen::Index r = 0; r < h.b2.size(); ++r) check(hp.b2[r], analytic.b2[r], [] { return false; });
  return out;
}

Erde direct_erde(const erisk::stream::DecisionLog& log, const std::map<std::string, int>& gold,
                 const std::vector<int>& os, double p) {
  double positives = 0;
  for (const auto& [s, _] : log) positives += gold.at(s);
  const double cfp = positives / static_cast<double>(log.size());

  Erde out{};
  double tp = 0, fp = 0, fn = 0;
  std::vector<double> ks;
  for (int o : os) out.erde[o] = 0;
  for (const auto& [s, entries] : log) {
    int alert_k = 0;
    for (const auto& e : entries)
      if (e.decision == 1) {
        alert_k = static_cast<int>(e.round) + 1;
        break;
      }
    const int truth = gold.at(s);
    for (int o : os) {
      double cost = 0;
      if (alert_k > 0 && truth == 1) cost = 1.0 - 1.0 / (1.0 + std::exp(static_cast<double>(alert_k - o)));
      if (alert_k > 0 && truth == 0) cost = cfp;
      if (alert_k == 0 && truth == 1) cost = 1.0;
      out.erde[o] += cost / static_cast<double>(log.size());
    }
    if (alert_k > 0 && truth == 1) {
      ++tp;
      ks.push_back(alert_k);
    }
    if (alert_k > 0 && truth == 0) ++fp;
    if (alert_k == 0 && truth == 1) ++fn;
  }
  out.precision = tp + fp > 0 ? tp / (tp + fp) : 0;
  out.recall = tp + fn > 0 ? tp / (tp + fn) : 0;
  out.f1 = out.precision + out.recall > 0 ? 2 * out.precision * out.recall / (out.precision + out.recall) : 0;
  auto med = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
  };
  if (ks.empty()) {
    out.latency_tp = 0;
    out.speed = 0;
  } else {
    std::vector<double> pen;
    for (double k : ks) pen.push_back(-1 + 2 / (1 + std::exp(-p * (k - 1))));
    out.latency_tp = med(ks);
    out.speed = 1 - med(pen);
  }
  out.f_latency = out.f1 * out.speed;
  return out;
}

Task3 brute_task3(const std::map<std::string, std::vector<int>>& pred,
                  const std::map<std::string, std::vector<int>>& gold) {
  // Item numbers in answer order, and the EDE-Q 6.0 subscale members.
  const std::vector<int> items = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28};
  const std::vector<std::vector<int>> subscales = {
      {1, 2, 3, 4, 5}, {7, 9, 19, 20, 21}, {6, 8, 10, 11, 23, 26, 27, 28}, {8, 12, 22, 24, 25}};
  auto answer = [&](const std::vector<int>& sheet, int item) {
    for (std::size_t i = 0; i < items.size(); ++i)
      if (items[i] == item) return sheet[i];
    return -1;
  };
  auto scores = [&](const std::vector<int>& sheet) {
    std::vector<double> s;
    for (const auto& members : subscales) {
      double sum = 0;
      for (int m : members) sum += answer(sheet, m);
      s.push_back(sum / static_cast<double>(members.size()));
    }
    s.push_back((s[0] + s[1] + s[2] + s[3]) / 4);
    return s;
  };

  Task3 out{};
  double pairs = 0, wrong = 0, abs_sum = 0;
  double cat_sum[7] = {}, cat_n[7] = {};
  double sub[5] = {};
  for (const auto& [user, g] : gold) {
    const auto& p = pred.at(user);
    for (std::size_t i = 0; i < g.size(); ++i) {
      pairs += 1;
      if (p[i] != g[i]) wrong += 1;
      abs_sum += std::abs(p[i] - g[i]);
      cat_sum[g[i]] += std::abs(p[i] - g[i]);
      cat_n[g[i]] += 1;
    }
    const auto sp = scores(p), sg = scores(g);
    for (int k = 0; k < 5; ++k) sub[k] += std::abs(sp[k] - sg[k]);
  }
  out.mzoe = wrong / pairs;
  out.mae = abs_sum / pairs;
  double macro = 0, cats = 0;
  for (int c = 0; c < 7; ++c)
    if (cat_n[c] > 0) {
      macro += cat_sum[c] / cat_n[c];
      cats += 1;
    }
  out.mae_macro = macro / cats;
  const double users = static_cast<double>(gold.size());
  out.rs = sub[0] / users;
  out.ecs = sub[1] / users;
  out.scs = sub[2] / users;
  out.wcs = sub[3] / users;
  out.ged = sub[4] / users;
  return out;
}

}  // namespace oracle
