#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "erisk/corpus.hpp"
#include "erisk/edeq.hpp"
#include "erisk/embed.hpp"
#include "erisk/features.hpp"
#include "erisk/metrics.hpp"
#include "erisk/model.hpp"
#include "erisk/stream.hpp"

namespace erisk::pipeline {

std::string version();

struct CorpusSource {
  std::filesystem::path path;
  std::string format = "jsonl";         // jsonl | xml
  std::filesystem::path golden;         // xml only, optional
};

struct ExperimentConfig {
  CorpusSource train;
  CorpusSource test;
  int run = 0;                          // task 1 run, 0..2
  int edeq_run = 1;                     // task 3 run, 1..3
  std::string preprocess;               // optional; must agree with the run when set
  std::size_t window_posts = 50;
  embed::ProviderSpec embedding;
  embed::ProviderSpec emotions;
  model::TrainConfig train_cfg;
  metrics::MetricConfig metric_cfg;
  std::vector<int> ranking_k = {10, 100};
  std::vector<std::size_t> ranking_after = {1};
  edeq::EdeqConfig edeq_cfg;
  std::filesystem::path questionnaire;  // empty = bundled
  std::filesystem::path edeq_gold;      // optional flat answers file
  std::filesystem::path output_dir = "out";
  std::string team_token = "workbench";
  std::uint64_t seed = 42;
};

/// Reads TOML sections [corpus], [run], [train], [metrics], [edeq],
/// [provider], [output]. `overrides` are "section.key=value" strings
/// with TOML values, applied before conversion. Relative paths resolve
/// against the config file's directory. ConfigError on unknown keys or
/// wrong types.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});
ExperimentConfig config_from_toml(std::string_view text, const std::vector<std::string>& overrides = {},
                                  const std::filesystem::path& base_dir = {});

/// Canonical JSON of everything that influences artifacts (the output
/// directory is excluded).
std::string config_to_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

/// ValidationError when a referenced path is missing or run fields
/// disagree. `task` is 1 or 3.
void validate(const ExperimentConfig& cfg, int task);

std::vector<corpus::UserHistory> load_corpus(const CorpusSource& src);

struct Providers {
  std::shared_ptr<const embed::EmbeddingProvider> embedding;
  std::shared_ptr<const embed::EmotionProvider> emotions;
};
Providers make_providers(const ExperimentConfig& cfg);

/// Unscaled 79-feature vector of one document. Empty documents give zero
/// lexical-diversity and readability parts.
features::FeatureVector document_features(const std::string& doc_id, const std::string& text,
                                          const embed::EmotionProvider& emotions);

/// [embedding | scaled features]; DomainError unless the sizes add up to
/// the head's input width.
Eigen::VectorXd head_input(const embed::Embedding& e, const features::FeatureVector& scaled);

struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<int> labels;  // -1 for unknown
  std::vector<features::FeatureVector> raw;
  std::vector<embed::Embedding> embeddings;
};

/// One document per subject: its last `window_posts` posts concatenated.
/// Documents are keyed by subject_id.
FeatureTable featurize(const std::vector<corpus::UserHistory>& histories, std::size_t window_posts,
                       features::Preprocess preprocess, const Providers& providers);

struct TrainedModel {
  features::Scaler scaler;
  model::HeadParams head;
  std::vector<model::FoldResult> cv;
};

/// Fits the scaler on labelled rows, reports k-fold CV, then trains the
/// final head on all labelled rows.
TrainedModel train_model(const FeatureTable& table, const model::TrainConfig& cfg, int out_dim);

/// Per-round strategy: each subject's document is its last `window_posts`
/// writings seen so far, keyed "subject_id@round". Alerts latch.
stream::Strategy make_strategy(std::shared_ptr<const TrainedModel> model, model::DecisionPolicy policy,
                               std::size_t window_posts, Providers providers);

/// In-process simulation of the round protocol over `histories`.
stream::DecisionLog simulate(const std::vector<corpus::UserHistory>& histories,
                             std::shared_ptr<const TrainedModel> model, const model::DecisionPolicy& policy,
                             std::size_t window_posts, const Providers& providers,
                             const std::string& token = "workbench");

/// Labels of histories whose label is known.
metrics::GoldLabels gold_labels(const std::vector<corpus::UserHistory>& histories);

std::string cv_to_json(const std::vector<model::FoldResult>& folds);

/// Writes manifest.json: config hash, seed, versions and the FNV hash of
/// each listed artifact.
void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                    const std::vector<std::string>& artifacts);

struct Task1Result {
  metrics::DecisionMetrics decision;
  metrics::RankingMetrics ranking;
  std::vector<model::FoldResult> cv;
};

/// features.csv, scaler.json, model.json, cv.json, decisions.csv,
/// metrics.json and manifest.json under cfg.output_dir.
Task1Result run_task1(const ExperimentConfig& cfg);

struct Task3Result {
  std::vector<edeq::AnswerSheet> sheets;
  std::optional<metrics::QuestionnaireMetrics> metrics;
};

/// answers.txt, scores.json, metrics.json (when gold answers are given)
/// and manifest.json under cfg.output_dir.
Task3Result run_task3(const ExperimentConfig& cfg);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace erisk::pipeline
