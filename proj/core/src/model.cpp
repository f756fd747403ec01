#include "erisk/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "erisk/error.hpp"

namespace erisk::model {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

void check_out_dim(int out_dim) {
  if (out_dim != 1 && out_dim != 2) {
    throw DomainError("out_dim must be 1 or 2, got " + std::to_string(out_dim));
  }
}

void check_input(const HeadParams& h, Eigen::Index rows) {
  if (static_cast<std::size_t>(rows) != h.input_dim()) {
    throw DomainError("input has length " + std::to_string(rows) + ", head expects " +
                      std::to_string(h.input_dim()));
  }
}

// Inverted-dropout multipliers for one sample: 0 or 1/(1-p).
VectorXd dropout_mask(std::uint64_t seed, std::size_t hidden, double p) {
  std::mt19937_64 rng(seed);
  VectorXd m(static_cast<Eigen::Index>(hidden));
  const double keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = unit_interval(rng()) >= p ? keep_scale : 0.0;
  return m;
}

struct BatchForward {
  MatrixXd x;       // input x B
  MatrixXd mask;    // hidden x B (all ones in eval mode)
  MatrixXd d;       // pre-activation after dropout
  MatrixXd hidden;  // ReLU(d)
  MatrixXd logits;  // out x B
};

BatchForward run_batch(const HeadParams& h, std::span<const Example> batch, const Mode& mode) {
  BatchForward f;
  const auto n = static_cast<Eigen::Index>(batch.size());
  f.x.resize(static_cast<Eigen::Index>(h.input_dim()), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    check_input(h, batch[static_cast<std::size_t>(i)].x.size());
    f.x.col(i) = batch[static_cast<std::size_t>(i)].x;
  }
  f.mask = MatrixXd::Ones(static_cast<Eigen::Index>(h.hidden_dim()), n);
  if (mode.dropout_seed) {
    for (Eigen::Index i = 0; i < n; ++i) {
      f.mask.col(i) = dropout_mask(dropout_mask_seed(*mode.dropout_seed, static_cast<std::size_t>(i)),
                                   h.hidden_dim(), h.dropout_p);
    }
  }
  f.d = ((h.w1 * f.x).colwise() + h.b1).cwiseProduct(f.mask);
  f.hidden = f.d.cwiseMax(0.0);
  f.logits = (h.w2 * f.hidden).colwise() + h.b2;
  return f;
}

void check_labels(std::span<const Example> batch) {
  for (const auto& e : batch) {
    if (e.label != 0 && e.label != 1) {
      throw DomainError("label must be 0 or 1, got " + std::to_string(e.label));
    }
  }
}

// Per-sample loss and d(loss)/d(logits), not yet averaged.
double sample_loss(const VectorXd& z, int y, VectorXd* dz) {
  if (z.size() == 1) {
    const double s = z[0];
    if (dz) *dz = VectorXd::Constant(1, sigmoid(s) - y);
    return std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::abs(s)));
  }
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  if (dz) {
    *dz = (z.array() - lse).exp().matrix();
    (*dz)[y] -= 1.0;
  }
  return lse - z[y];
}

double prf(std::size_t tp, std::size_t fp, std::size_t fn, double* precision, double* recall) {
  const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  *precision = p;
  *recall = r;
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw ValidationError(std::string("checkpoint ") + name + " has wrong row count");
  }
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = j[static_cast<std::size_t>(r)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ValidationError(std::string("checkpoint ") + name + " has wrong column count");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

VectorXd vector_from_json(const json& j, Eigen::Index n, const char* name) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != n) {
    throw ValidationError(std::string("checkpoint ") + name + " has wrong length");
  }
  return Eigen::Map<const VectorXd>(v.data(), n);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_interval(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

std::uint64_t dropout_mask_seed(std::uint64_t batch_seed, std::size_t sample_index) {
  return splitmix64(batch_seed ^ splitmix64(sample_index + 1));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

VectorXd softmax(const VectorXd& z) {
  const VectorXd e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

HeadParams init_head(std::uint64_t seed, int out_dim, std::size_t input_dim, std::size_t hidden_dim) {
  check_out_dim(out_dim);
  if (input_dim == 0 || hidden_dim == 0) throw DomainError("head dimensions must be positive");
  std::mt19937_64 rng(seed);
  auto fill = [&](MatrixXd& m, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = (2.0 * unit_interval(rng()) - 1.0) * bound;
    }
  };
  HeadParams h;
  h.out_dim = out_dim;
  h.seed = seed;
  h.w1.resize(static_cast<Eigen::Index>(hidden_dim), static_cast<Eigen::Index>(input_dim));
  h.w2.resize(out_dim, static_cast<Eigen::Index>(hidden_dim));
  fill(h.w1, input_dim);
  fill(h.w2, hidden_dim);
  h.b1 = VectorXd::Zero(static_cast<Eigen::Index>(hidden_dim));
  h.b2 = VectorXd::Zero(out_dim);
  return h;
}

VectorXd forward(const HeadParams& h, const VectorXd& x, Mode mode) {
  check_input(h, x.size());
  VectorXd d = h.w1 * x + h.b1;
  if (mode.dropout_seed) {
    d = d.cwiseProduct(dropout_mask(dropout_mask_seed(*mode.dropout_seed, 0), h.hidden_dim(),
                                    h.dropout_p));
  }
  return h.w2 * d.cwiseMax(0.0) + h.b2;
}

LossAndGrad loss_and_grad(const HeadParams& h, std::span<const Example> batch, Mode mode) {
  if (batch.empty()) throw DomainError("loss_and_grad needs a non-empty batch");
  check_labels(batch);
  const auto f = run_batch(h, batch, mode);
  const auto n = static_cast<Eigen::Index>(batch.size());

  MatrixXd dz(h.out_dim, n);
  double total = 0;
  VectorXd dzi;
  for (Eigen::Index i = 0; i < n; ++i) {
    total += sample_loss(f.logits.col(i), batch[static_cast<std::size_t>(i)].label, &dzi);
    dz.col(i) = dzi;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  dz *= inv_n;

  LossAndGrad out;
  out.loss = total * inv_n;
  out.grad.w2 = dz * f.hidden.transpose();
  out.grad.b2 = dz.rowwise().sum();
  // Back through ReLU (active where d > 0) and the dropout multipliers.
  const MatrixXd dd = (h.w2.transpose() * dz).cwiseProduct((f.d.array() > 0.0).cast<double>().matrix());
  const MatrixXd da1 = dd.cwiseProduct(f.mask);
  out.grad.w1 = da1 * f.x.transpose();
  out.grad.b1 = da1.rowwise().sum();
  return out;
}

double loss(const HeadParams& h, std::span<const Example> batch, Mode mode) {
  if (batch.empty()) throw DomainError("loss needs a non-empty batch");
  check_labels(batch);
  const auto f = run_batch(h, batch, mode);
  double total = 0;
  for (Eigen::Index i = 0; i < f.logits.cols(); ++i) {
    total += sample_loss(f.logits.col(i), batch[static_cast<std::size_t>(i)].label, nullptr);
  }
  return total / static_cast<double>(batch.size());
}

HeadParams train_head(std::span<const Example> data, const TrainConfig& cfg, int out_dim,
                      TrainLog* log) {
  check_out_dim(out_dim);
  if (data.size() < 2) throw ValidationError("training needs at least two examples");
  check_labels(data);
  const auto positives = std::count_if(data.begin(), data.end(), [](const Example& e) { return e.label == 1; });
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(data.size())) {
    throw ValidationError("training data must contain both classes");
  }
  if (cfg.batch_size == 0 || cfg.learning_rate <= 0) throw ValidationError("bad training config");

  auto h = init_head(cfg.seed, out_dim, static_cast<std::size_t>(data.front().x.size()));
  Gradients m{MatrixXd::Zero(h.w1.rows(), h.w1.cols()), VectorXd::Zero(h.b1.size()),
              MatrixXd::Zero(h.w2.rows(), h.w2.cols()), VectorXd::Zero(h.b2.size())};
  Gradients v = m;

  std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x5eedULL));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Example> batch;
  std::size_t step = 0;

  if (log && log->track_full_loss_steps > 0) log->full_loss.push_back(loss(h, data));

  auto adamw = [&](auto& param, auto& g, auto& m1, auto& m2, double bc1, double bc2) {
    param *= (1.0 - cfg.learning_rate * cfg.weight_decay);
    m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * g;
    m2 = cfg.beta2 * m2 + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    param.array() -= cfg.learning_rate * (m1.array() / bc1) / ((m2.array() / bc2).sqrt() + cfg.eps);
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the raw engine output keeps shuffles identical
    // across standard libraries.
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng() % (i + 1)]);
    }
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + cfg.batch_size); ++k) {
        batch.push_back(data[order[k]]);
      }
      ++step;
      auto lg = loss_and_grad(h, batch, Mode::train(splitmix64(cfg.seed + step)));
      if (log) log->batch_loss.push_back(lg.loss);
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      adamw(h.w1, lg.grad.w1, m.w1, v.w1, bc1, bc2);
      adamw(h.b1, lg.grad.b1, m.b1, v.b1, bc1, bc2);
      adamw(h.w2, lg.grad.w2, m.w2, v.w2, bc1, bc2);
      adamw(h.b2, lg.grad.b2, m.b2, v.b2, bc1, bc2);
      if (log && step <= log->track_full_loss_steps) log->full_loss.push_back(loss(h, data));
    }
  }
  return h;
}

std::vector<FoldResult> cross_validate(std::span<const Example> data, const TrainConfig& cfg,
                                       int out_dim) {
  check_out_dim(out_dim);
  if (cfg.folds < 2) throw DomainError("cross validation needs at least 2 folds");
  if (data.size() < cfg.folds) {
    throw DomainError("cross validation needs at least " + std::to_string(cfg.folds) +
                      " examples, got " + std::to_string(data.size()));
  }
  check_labels(data);

  std::vector<std::size_t> fold_of(data.size());
  std::mt19937_64 rng(splitmix64(cfg.seed ^ 0xf01dULL));
  std::size_t counter = 0;
  for (int cls : {1, 0}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].label == cls) idx.push_back(i);
    }
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    for (auto i : idx) fold_of[i] = counter++ % cfg.folds;
  }

  const DecisionPolicy policy{out_dim == 2 ? PolicyKind::binary_softmax : PolicyKind::regression_threshold};
  std::vector<FoldResult> results;
  for (std::size_t k = 0; k < cfg.folds; ++k) {
    std::vector<Example> train, test;
    for (std::size_t i = 0; i < data.size(); ++i) (fold_of[i] == k ? test : train).push_back(data[i]);
    auto fold_cfg = cfg;
    fold_cfg.seed = splitmix64(cfg.seed + k);
    const auto h = train_head(train, fold_cfg, out_dim);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& e : test) {
      const int pred = decide(h, e.x, policy).label;
      tp += pred == 1 && e.label == 1;
      fp += pred == 1 && e.label == 0;
      fn += pred == 0 && e.label == 1;
    }
    FoldResult r{k, train.size(), test.size(), 0, 0, 0};
    r.f1 = prf(tp, fp, fn, &r.precision, &r.recall);
    results.push_back(r);
  }
  return results;
}

DecisionPolicy policy_for_run(int run) {
  switch (run) {
    case 0: return {PolicyKind::regression_threshold, 0.5, features::Preprocess::none};
    case 1: return {PolicyKind::regression_threshold, 0.5, features::Preprocess::strip_urls};
    case 2: return {PolicyKind::binary_softmax, 0.5, features::Preprocess::none};
    default: break;
  }
  throw ConfigError("unknown task 1 run id " + std::to_string(run) + " (expected 0, 1 or 2)");
}

Decision decide(const HeadParams& h, const VectorXd& x, const DecisionPolicy& policy) {
  if (policy.out_dim() != h.out_dim) {
    throw ConfigError("decision policy expects out_dim " + std::to_string(policy.out_dim()) +
                      " but the head has " + std::to_string(h.out_dim));
  }
  const VectorXd z = forward(h, x, Mode::eval());
  if (policy.kind == PolicyKind::regression_threshold) {
    const double s = sigmoid(z[0]);
    return {s >= policy.threshold ? 1 : 0, s};
  }
  const VectorXd p = softmax(z);
  return {z[1] >= z[0] ? 1 : 0, p[1]};
}

std::string checkpoint_to_json(const HeadParams& h, const TrainConfig& cfg) {
  json j;
  j["dims"] = {{"input", h.input_dim()}, {"hidden", h.hidden_dim()}};
  j["out_dim"] = h.out_dim;
  j["dropout_p"] = h.dropout_p;
  j["W1"] = matrix_json(h.w1);
  j["b1"] = std::vector<double>(h.b1.data(), h.b1.data() + h.b1.size());
  j["W2"] = matrix_json(h.w2);
  j["b2"] = std::vector<double>(h.b2.data(), h.b2.data() + h.b2.size());
  j["seed"] = h.seed;
  j["config"] = {{"learning_rate", cfg.learning_rate}, {"batch_size", cfg.batch_size},
                 {"epochs", cfg.epochs},               {"beta1", cfg.beta1},
                 {"beta2", cfg.beta2},                 {"eps", cfg.eps},
                 {"weight_decay", cfg.weight_decay},   {"folds", cfg.folds},
                 {"seed", cfg.seed},                   {"optimizer", "AdamW"}};
  return j.dump();
}

HeadParams checkpoint_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    HeadParams h;
    const auto in = j.at("dims").at("input").get<Eigen::Index>();
    const auto hid = j.at("dims").at("hidden").get<Eigen::Index>();
    h.out_dim = j.at("out_dim").get<int>();
    check_out_dim(h.out_dim);
    h.dropout_p = j.value("dropout_p", 0.5);
    h.w1 = matrix_from_json(j.at("W1"), hid, in, "W1");
    h.b1 = vector_from_json(j.at("b1"), hid, "b1");
    h.w2 = matrix_from_json(j.at("W2"), h.out_dim, hid, "W2");
    h.b2 = vector_from_json(j.at("b2"), h.out_dim, "b2");
    h.seed = j.value("seed", std::uint64_t{0});
    return h;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint json: ") + e.what(), 0);
  }
}

void save_checkpoint(const std::filesystem::path& path, const HeadParams& h, const TrainConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << checkpoint_to_json(h, cfg) << '\n';
}

HeadParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace erisk::model
