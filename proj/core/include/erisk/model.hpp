#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "erisk/features.hpp"

namespace erisk::model {

inline constexpr std::size_t kEmbeddingDim = 1024;
inline constexpr std::size_t kInputDim = kEmbeddingDim + features::kFeatureDim;  // 1103
inline constexpr std::size_t kHiddenDim = 128;

/// Two dense layers: input -> 128 -> out_dim, with dropout then ReLU
/// between them.
struct HeadParams {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // out_dim x hidden
  Eigen::VectorXd b2;  // out_dim
  int out_dim = 1;
  double dropout_p = 0.5;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(w1.rows()); }
};

struct TrainConfig {
  double learning_rate = 5e-5;
  std::size_t batch_size = 8;
  std::size_t epochs = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::size_t folds = 5;
  std::uint64_t seed = 42;
};

struct Example {
  Eigen::VectorXd x;
  int label = 0;
};

/// Inference or training forward pass. A dropout seed selects training
/// mode; the same seed always yields the same mask.
struct Mode {
  std::optional<std::uint64_t> dropout_seed;

  static Mode eval() { return {}; }
  static Mode train(std::uint64_t seed) { return {seed}; }
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0. DomainError
/// unless out_dim is 1 or 2.
HeadParams init_head(std::uint64_t seed, int out_dim, std::size_t input_dim = kInputDim,
                     std::size_t hidden_dim = kHiddenDim);

/// logits = W2 * ReLU(dropout(W1 x + b1)) + b2.
Eigen::VectorXd forward(const HeadParams& h, const Eigen::VectorXd& x, Mode mode = Mode::eval());

struct Gradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

struct LossAndGrad {
  double loss = 0;
  Gradients grad;
};

/// Mean binary cross-entropy on the sigmoid logit (out_dim 1) or mean
/// softmax cross-entropy (out_dim 2), with exact gradients. In training
/// mode sample i uses the mask of `dropout_mask_seed(seed, i)`.
LossAndGrad loss_and_grad(const HeadParams& h, std::span<const Example> batch,
                          Mode mode = Mode::eval());

/// Loss only; same conventions as loss_and_grad.
double loss(const HeadParams& h, std::span<const Example> batch, Mode mode = Mode::eval());

std::uint64_t dropout_mask_seed(std::uint64_t batch_seed, std::size_t sample_index);

struct TrainLog {
  std::vector<double> batch_loss;        // loss of each minibatch before its step
  std::size_t track_full_loss_steps = 0; // record full-data eval loss after this many steps
  std::vector<double> full_loss;         // [0] is before any step
};

/// AdamW over seeded shuffled minibatches. ValidationError for fewer than
/// two examples, one class only, or labels outside {0,1}.
HeadParams train_head(std::span<const Example> data, const TrainConfig& cfg, int out_dim,
                      TrainLog* log = nullptr);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Stratified k-fold (k = cfg.folds) with a seeded split.
std::vector<FoldResult> cross_validate(std::span<const Example> data, const TrainConfig& cfg,
                                       int out_dim);

enum class PolicyKind { regression_threshold, binary_softmax };

struct DecisionPolicy {
  PolicyKind kind = PolicyKind::regression_threshold;
  double threshold = 0.5;
  features::Preprocess preprocess = features::Preprocess::none;

  int out_dim() const { return kind == PolicyKind::binary_softmax ? 2 : 1; }
};

/// Run 0: sigmoid >= 0.5, raw text. Run 1: same with URL stripping.
/// Run 2: two-class softmax, raw text. ConfigError for other ids.
DecisionPolicy policy_for_run(int run);

struct Decision {
  int label = 0;
  double score = 0;
};

/// Score = sigmoid (out_dim 1) or positive-class softmax probability
/// (out_dim 2). Ties between softmax logits resolve to the positive label.
Decision decide(const HeadParams& h, const Eigen::VectorXd& x, const DecisionPolicy& policy);

double sigmoid(double z);
Eigen::VectorXd softmax(const Eigen::VectorXd& z);

std::string checkpoint_to_json(const HeadParams& h, const TrainConfig& cfg);
HeadParams checkpoint_from_json(std::string_view text);
void save_checkpoint(const std::filesystem::path& path, const HeadParams& h, const TrainConfig& cfg);
HeadParams load_checkpoint(const std::filesystem::path& path);

/// Uniform [0,1) double from a 64-bit generator output (53-bit mantissa).
double unit_interval(std::uint64_t bits);
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace erisk::model
