#include "erisk/pipeline.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "erisk/annotate.hpp"
#include "erisk/error.hpp"
#include "erisk/lexdiv.hpp"
#include "erisk/readability.hpp"
#include "json.hpp"
#include "toml.hpp"

#ifndef ERISK_VERSION
#define ERISK_VERSION "0.0.0"
#endif

namespace erisk::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string version() { return ERISK_VERSION; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

// ---------------------------------------------------------------- config

namespace {

void merge_into(toml::table& dst, const toml::table& src) {
  for (const auto& [k, v] : src) {
    auto* dst_sub = dst[k].as_table();
    if (dst_sub != nullptr && v.is_table()) {
      merge_into(*dst_sub, *v.as_table());
    } else {
      dst.insert_or_assign(k, v);
    }
  }
}

class Section {
 public:
  Section(const toml::table& root, std::string name) : name_(std::move(name)) {
    if (const auto* node = root.get(name_)) {
      table_ = node->as_table();
      if (table_ == nullptr) throw ConfigError(fmt::format("[{}] must be a table", name_));
    }
  }

  void allow(std::initializer_list<std::string_view> keys) {
    if (table_ == nullptr) return;
    std::set<std::string_view> ok(keys);
    for (const auto& [k, v] : *table_)
      if (!ok.count(k.str())) throw ConfigError(fmt::format("unknown key {}.{}", name_, k.str()));
  }

  template <typename T>
  std::optional<T> get(std::string_view key) const {
    if (table_ == nullptr) return std::nullopt;
    const auto* node = table_->get(key);
    if (node == nullptr) return std::nullopt;
    auto v = node->value<T>();
    if (!v) throw ConfigError(fmt::format("{}.{} has the wrong type", name_, key));
    return v;
  }

  template <typename T>
  void read(std::string_view key, T& out) const {
    if (auto v = get<T>(key)) out = *v;
  }

  void read_size(std::string_view key, std::size_t& out) const {
    if (auto v = get<std::int64_t>(key)) {
      if (*v < 0) throw ConfigError(fmt::format("{}.{} must be non-negative", name_, key));
      out = static_cast<std::size_t>(*v);
    }
  }

  void read_path(std::string_view key, fs::path& out, const fs::path& base) const {
    if (auto v = get<std::string>(key)) {
      fs::path p(*v);
      out = (p.empty() || p.is_absolute() || base.empty()) ? p : (base / p).lexically_normal();
    }
  }

  template <typename T>
  std::optional<std::vector<T>> array(std::string_view key) const {
    if (table_ == nullptr) return std::nullopt;
    const auto* node = table_->get(key);
    if (node == nullptr) return std::nullopt;
    const auto* arr = node->as_array();
    if (arr == nullptr) throw ConfigError(fmt::format("{}.{} must be an array", name_, key));
    std::vector<T> out;
    for (const auto& el : *arr) {
      auto v = el.value<std::int64_t>();
      if (!v) throw ConfigError(fmt::format("{}.{} must hold integers", name_, key));
      out.push_back(static_cast<T>(*v));
    }
    return out;
  }

 private:
  std::string name_;
  const toml::table* table_ = nullptr;
};

json spec_json(const embed::ProviderSpec& s) {
  json j;
  j["kind"] = s.kind;
  if (s.kind == "file_cache") j["cache"] = s.cache_path.generic_string();
  if (s.kind == "http") {
    j["url"] = s.http.base_url;
    j["dim"] = s.http.dim;
    j["truncation"] = s.http.truncation;
  }
  return j;
}

}  // namespace

ExperimentConfig config_from_toml(std::string_view text, const std::vector<std::string>& overrides,
                                  const fs::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
    for (const auto& o : overrides) {
      auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError("override must look like section.key=value: " + o);
      toml::table patch;
      try {
        patch = toml::parse(o);
      } catch (const toml::parse_error&) {
        // Bare strings are accepted for convenience: run.preprocess=none.
        patch = toml::parse(fmt::format("{} = {}", o.substr(0, eq), json(o.substr(eq + 1)).dump()));
      }
      merge_into(root, patch);
    }
  } catch (const toml::parse_error& e) {
    throw ConfigError(fmt::format("config: {} (line {})", e.description(), e.source().begin.line));
  }

  for (const auto& [k, v] : root) {
    static const std::set<std::string_view> sections = {"corpus", "run", "train", "metrics", "edeq", "provider", "output"};
    if (!sections.count(k.str())) throw ConfigError(fmt::format("unknown section [{}]", k.str()));
  }

  ExperimentConfig cfg;

  Section corpus(root, "corpus");
  corpus.allow({"train", "train_format", "train_golden", "test", "test_format", "test_golden", "questionnaire", "edeq_gold"});
  corpus.read_path("train", cfg.train.path, base_dir);
  corpus.read("train_format", cfg.train.format);
  corpus.read_path("train_golden", cfg.train.golden, base_dir);
  corpus.read_path("test", cfg.test.path, base_dir);
  corpus.read("test_format", cfg.test.format);
  corpus.read_path("test_golden", cfg.test.golden, base_dir);
  corpus.read_path("questionnaire", cfg.questionnaire, base_dir);
  corpus.read_path("edeq_gold", cfg.edeq_gold, base_dir);

  Section run(root, "run");
  run.allow({"task1", "edeq", "preprocess", "window_posts", "seed", "team_token"});
  if (auto v = run.get<std::int64_t>("task1")) cfg.run = static_cast<int>(*v);
  if (auto v = run.get<std::int64_t>("edeq")) cfg.edeq_run = static_cast<int>(*v);
  run.read("preprocess", cfg.preprocess);
  run.read_size("window_posts", cfg.window_posts);
  if (auto v = run.get<std::int64_t>("seed")) cfg.seed = static_cast<std::uint64_t>(*v);
  run.read("team_token", cfg.team_token);

  Section train(root, "train");
  train.allow({"learning_rate", "batch_size", "epochs", "beta1", "beta2", "eps", "weight_decay", "folds"});
  train.read("learning_rate", cfg.train_cfg.learning_rate);
  train.read_size("batch_size", cfg.train_cfg.batch_size);
  train.read_size("epochs", cfg.train_cfg.epochs);
  train.read("beta1", cfg.train_cfg.beta1);
  train.read("beta2", cfg.train_cfg.beta2);
  train.read("eps", cfg.train_cfg.eps);
  train.read("weight_decay", cfg.train_cfg.weight_decay);
  train.read_size("folds", cfg.train_cfg.folds);
  cfg.train_cfg.seed = cfg.seed;

  Section met(root, "metrics");
  met.allow({"erde_o", "c_fn", "c_tp", "c_fp", "speed_p", "latency", "ranking_k", "ranking_after"});
  if (auto v = met.array<int>("erde_o")) cfg.metric_cfg.erde_o = *v;
  met.read("c_fn", cfg.metric_cfg.c_fn);
  met.read("c_tp", cfg.metric_cfg.c_tp);
  if (auto v = met.get<double>("c_fp")) cfg.metric_cfg.c_fp = *v;
  met.read("speed_p", cfg.metric_cfg.speed_p);
  if (auto v = met.get<std::string>("latency")) {
    if (*v != "median" && *v != "mean") throw ConfigError("metrics.latency must be \"median\" or \"mean\"");
    cfg.metric_cfg.latency_mean = *v == "mean";
  }
  if (auto v = met.array<int>("ranking_k")) cfg.ranking_k = *v;
  if (auto v = met.array<std::size_t>("ranking_after")) cfg.ranking_after = *v;

  Section ed(root, "edeq");
  ed.allow({"day_threshold", "window_days", "inclusive_span"});
  if (cfg.edeq_run < 1 || cfg.edeq_run > 3) throw ConfigError(fmt::format("run.edeq must be 1, 2 or 3, got {}", cfg.edeq_run));
  cfg.edeq_cfg = edeq::config_for_run(cfg.edeq_run);
  ed.read("day_threshold", cfg.edeq_cfg.day_threshold);
  if (auto v = ed.get<std::int64_t>("window_days")) cfg.edeq_cfg.window_days = static_cast<int>(*v);
  ed.read("inclusive_span", cfg.edeq_cfg.inclusive_span);

  Section prov(root, "provider");
  prov.allow({"embedding", "embedding_cache", "emotions", "emotions_cache", "url", "auth_token", "dim",
              "truncation", "max_batch", "max_in_flight", "timeout_seconds"});
  embed::HttpSettings http;
  prov.read("url", http.base_url);
  prov.read("auth_token", http.auth_token);
  prov.read_size("dim", http.dim);
  prov.read_size("truncation", http.truncation);
  prov.read_size("max_batch", http.max_batch);
  if (auto v = prov.get<std::int64_t>("max_in_flight")) http.max_in_flight = static_cast<std::ptrdiff_t>(*v);
  if (auto v = prov.get<std::int64_t>("timeout_seconds")) http.timeout_seconds = static_cast<int>(*v);
  cfg.embedding.http = http;
  cfg.emotions.http = http;
  prov.read("embedding", cfg.embedding.kind);
  prov.read_path("embedding_cache", cfg.embedding.cache_path, base_dir);
  prov.read("emotions", cfg.emotions.kind);
  prov.read_path("emotions_cache", cfg.emotions.cache_path, base_dir);

  Section out(root, "output");
  out.allow({"dir"});
  out.read_path("dir", cfg.output_dir, base_dir);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  if (!fs::exists(path)) throw ValidationError("config file not found: " + path.string());
  return config_from_toml(read_file(path), overrides, path.parent_path());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  auto src = [](const CorpusSource& s) {
    json c;
    c["path"] = s.path.generic_string();
    c["format"] = s.format;
    if (!s.golden.empty()) c["golden"] = s.golden.generic_string();
    return c;
  };
  j["train"] = src(cfg.train);
  j["test"] = src(cfg.test);
  j["run"] = cfg.run;
  j["edeq_run"] = cfg.edeq_run;
  j["preprocess"] = cfg.preprocess;
  j["window_posts"] = cfg.window_posts;
  j["embedding"] = spec_json(cfg.embedding);
  j["emotions"] = spec_json(cfg.emotions);
  const auto& t = cfg.train_cfg;
  j["train_cfg"] = {{"learning_rate", t.learning_rate}, {"batch_size", t.batch_size}, {"epochs", t.epochs},
                    {"beta1", t.beta1}, {"beta2", t.beta2}, {"eps", t.eps}, {"weight_decay", t.weight_decay},
                    {"folds", t.folds}, {"seed", t.seed}};
  const auto& m = cfg.metric_cfg;
  j["metric_cfg"] = {{"erde_o", m.erde_o}, {"c_fn", m.c_fn}, {"c_tp", m.c_tp},
                     {"c_fp", m.c_fp ? json(*m.c_fp) : json(nullptr)}, {"speed_p", m.speed_p},
                     {"latency", m.latency_mean ? "mean" : "median"}};
  j["ranking_k"] = cfg.ranking_k;
  j["ranking_after"] = cfg.ranking_after;
  j["edeq_cfg"] = {{"day_threshold", cfg.edeq_cfg.day_threshold}, {"window_days", cfg.edeq_cfg.window_days},
                   {"inclusive_span", cfg.edeq_cfg.inclusive_span}};
  j["questionnaire"] = cfg.questionnaire.generic_string();
  j["edeq_gold"] = cfg.edeq_gold.generic_string();
  j["team_token"] = cfg.team_token;
  j["seed"] = cfg.seed;
  return j.dump();
}

std::string config_hash(const ExperimentConfig& cfg) {
  return fmt::format("{:016x}", embed::stable_hash(config_to_json(cfg)));
}

void validate(const ExperimentConfig& cfg, int task) {
  auto need = [](const fs::path& p, std::string_view what) {
    if (p.empty()) throw ValidationError(fmt::format("{} path is not set", what));
    if (!fs::exists(p)) throw ValidationError(fmt::format("{} not found: {}", what, p.string()));
  };
  auto need_format = [](const CorpusSource& s) {
    if (s.format != "jsonl" && s.format != "xml")
      throw ValidationError("corpus format must be jsonl or xml, got " + s.format);
    if (!s.golden.empty() && !fs::exists(s.golden)) throw ValidationError("golden truth not found: " + s.golden.string());
  };
  auto need_provider = [](const embed::ProviderSpec& s, std::string_view what) {
    if (s.kind == "file_cache" && !fs::exists(s.cache_path))
      throw ValidationError(fmt::format("{} cache not found: {}", what, s.cache_path.string()));
    if (s.kind != "file_cache" && s.kind != "test_hash" && s.kind != "http")
      throw ValidationError(fmt::format("unknown {} provider '{}'", what, s.kind));
  };

  if (task == 1) {
    need(cfg.train.path, "training corpus");
    need_format(cfg.train);
    if (!cfg.test.path.empty()) {
      need(cfg.test.path, "test corpus");
      need_format(cfg.test);
    }
    if (cfg.run < 0 || cfg.run > 2) throw ValidationError(fmt::format("run.task1 must be 0, 1 or 2, got {}", cfg.run));
    const auto expected = model::policy_for_run(cfg.run).preprocess == features::Preprocess::strip_urls ? "strip_urls" : "none";
    if (!cfg.preprocess.empty() && cfg.preprocess != expected)
      throw ValidationError(fmt::format("run {} implies preprocess = \"{}\", config says \"{}\"", cfg.run, expected, cfg.preprocess));
    if (cfg.window_posts == 0) throw ValidationError("run.window_posts must be positive");
    need_provider(cfg.emotions, "emotion");
  } else if (task == 3) {
    need(cfg.test.path, "test corpus");
    need_format(cfg.test);
    if (!cfg.questionnaire.empty()) need(cfg.questionnaire, "questionnaire");
    if (!cfg.edeq_gold.empty()) need(cfg.edeq_gold, "gold answers");
    if (!(cfg.edeq_cfg.day_threshold > 0 && cfg.edeq_cfg.day_threshold < 1))
      throw ValidationError("edeq.day_threshold must lie in (0,1)");
    if (cfg.edeq_cfg.window_days < 1) throw ValidationError("edeq.window_days must be positive");
  } else {
    throw ValidationError(fmt::format("unknown task {}", task));
  }
  need_provider(cfg.embedding, "embedding");
}

std::vector<corpus::UserHistory> load_corpus(const CorpusSource& src) {
  if (src.format == "xml") {
    return corpus::ingest_erisk_xml(src.path, src.golden.empty() ? std::nullopt : std::optional<fs::path>(src.golden));
  }
  return corpus::ingest_jsonl(src.path);
}

Providers make_providers(const ExperimentConfig& cfg) {
  return {embed::make_embedding_provider(cfg.embedding), embed::make_emotion_provider(cfg.emotions)};
}

// ------------------------------------------------------------- features

features::FeatureVector document_features(const std::string& doc_id, const std::string& text,
                                          const embed::EmotionProvider& emotions) {
  const auto doc = annotate::annotate(text);
  const auto vol = features::volumetry(doc);

  std::vector<std::string> words;
  for (const auto& t : doc.tokens)
    if (t.is_word) words.push_back(annotate::lowercase(t.surface));
  lexdiv::LexDivScores lex;
  if (!words.empty()) lex = lexdiv::lexdiv(words);

  readability::ReadabilityScores read;
  if (doc.word_count() >= 1 && !doc.sentences.empty()) read = readability::readability(doc);

  const auto emo = emotions.score(embed::Document{doc_id, text});
  return features::assemble(vol, lex, read, emo);
}

Eigen::VectorXd head_input(const embed::Embedding& e, const features::FeatureVector& scaled) {
  const std::size_t n = e.vector.size() + scaled.values.size();
  if (n != model::kInputDim)
    throw DomainError(fmt::format("head input needs {} values, got {} embedding + {} features",
                                  model::kInputDim, e.vector.size(), scaled.values.size()));
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  Eigen::Index i = 0;
  for (double v : e.vector) x[i++] = v;
  for (double v : scaled.values) x[i++] = v;
  return x;
}

FeatureTable featurize(const std::vector<corpus::UserHistory>& histories, std::size_t window_posts,
                       features::Preprocess preprocess, const Providers& providers) {
  FeatureTable t;
  for (const auto& h : histories) {
    const auto window = corpus::select_last_n(h, window_posts);
    const auto text = features::concat_window(window, preprocess);
    t.ids.push_back(h.subject_id);
    t.labels.push_back(corpus::label_to_int(h.label));
    t.raw.push_back(document_features(h.subject_id, text, *providers.emotions));
    t.embeddings.push_back(providers.embedding->embed(embed::Document{h.subject_id, text}));
  }
  return t;
}

TrainedModel train_model(const FeatureTable& table, const model::TrainConfig& cfg, int out_dim) {
  std::vector<features::FeatureVector> labelled;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    if (table.labels[i] < 0) continue;
    rows.push_back(i);
    labelled.push_back(table.raw[i]);
  }
  if (rows.empty()) throw ValidationError("training corpus has no labelled subjects");

  TrainedModel m;
  m.scaler = features::fit_scaler(labelled);
  std::vector<model::Example> data;
  for (std::size_t r : rows) {
    data.push_back({head_input(table.embeddings[r], features::apply_scaler(m.scaler, table.raw[r])), table.labels[r]});
  }
  spdlog::info("train: {} labelled subjects, {}-fold CV", data.size(), cfg.folds);
  m.cv = model::cross_validate(data, cfg, out_dim);
  m.head = model::train_head(data, cfg, out_dim);
  return m;
}

namespace {

struct StrategyState {
  std::shared_ptr<const TrainedModel> model;
  model::DecisionPolicy policy;
  std::size_t window_posts;
  Providers providers;
  std::map<std::string, std::vector<corpus::Post>> seen;
  std::set<std::string> alerted;
};

}  // namespace

stream::Strategy make_strategy(std::shared_ptr<const TrainedModel> trained, model::DecisionPolicy policy,
                               std::size_t window_posts, Providers providers) {
  auto state = std::make_shared<StrategyState>(
      StrategyState{std::move(trained), policy, window_posts, std::move(providers), {}, {}});
  return [state](const std::vector<stream::Writing>& writings) {
    std::vector<stream::SubmittedDecision> out;
    out.reserve(writings.size());
    for (const auto& w : writings) {
      auto date = parse_timestamp(w.date);
      if (!date) throw ValidationError(fmt::format("writing {}@{} has a bad date '{}'", w.subject_id, w.round, w.date));
      auto& posts = state->seen[w.subject_id];
      posts.push_back(corpus::Post{*date, w.title, w.text, w.round});

      corpus::PostWindow window{w.subject_id, {}, corpus::LastN{state->window_posts}};
      const std::size_t first = posts.size() > state->window_posts ? posts.size() - state->window_posts : 0;
      window.posts.assign(posts.begin() + static_cast<std::ptrdiff_t>(first), posts.end());

      const auto text = features::concat_window(window, state->policy.preprocess);
      const auto doc_id = fmt::format("{}@{}", w.subject_id, w.round);
      const auto raw = document_features(doc_id, text, *state->providers.emotions);
      const auto emb = state->providers.embedding->embed(embed::Document{doc_id, text});
      const auto x = head_input(emb, features::apply_scaler(state->model->scaler, raw));
      auto d = model::decide(state->model->head, x, state->policy);
      if (state->alerted.count(w.subject_id)) d.label = 1;
      if (d.label == 1) state->alerted.insert(w.subject_id);
      out.push_back({w.subject_id, d.label, d.score});
    }
    return out;
  };
}

stream::DecisionLog simulate(const std::vector<corpus::UserHistory>& histories,
                             std::shared_ptr<const TrainedModel> trained, const model::DecisionPolicy& policy,
                             std::size_t window_posts, const Providers& providers, const std::string& token) {
  stream::RoundServer server(histories);
  server.add_team(token);
  stream::InProcessTransport transport(server, token);
  return stream::run_client(transport, make_strategy(std::move(trained), policy, window_posts, providers));
}

metrics::GoldLabels gold_labels(const std::vector<corpus::UserHistory>& histories) {
  metrics::GoldLabels gold;
  for (const auto& h : histories) {
    const int l = corpus::label_to_int(h.label);
    if (l >= 0) gold[h.subject_id] = l;
  }
  return gold;
}

std::string cv_to_json(const std::vector<model::FoldResult>& folds) {
  json j = json::array();
  double f1 = 0;
  for (const auto& f : folds) {
    j.push_back({{"fold", f.fold}, {"n_train", f.n_train}, {"n_test", f.n_test},
                 {"precision", f.precision}, {"recall", f.recall}, {"f1", f.f1}});
    f1 += f.f1;
  }
  json out;
  out["folds"] = j;
  out["mean_f1"] = folds.empty() ? 0.0 : f1 / static_cast<double>(folds.size());
  return out.dump(2);
}

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg, const std::vector<std::string>& artifacts) {
  json j;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["versions"] = {{"erisk", version()},
                   {"embedding_provider", cfg.embedding.kind},
                   {"emotion_provider", cfg.emotions.kind},
                   {"annotator", "builtin"}};
  j["config"] = json::parse(config_to_json(cfg));
  json files;
  for (const auto& name : artifacts)
    files[name] = fmt::format("{:016x}", embed::stable_hash(read_file(dir / name)));
  j["artifacts"] = files;
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------- tasks

namespace {

template <typename F>
auto stage(std::string_view name, F&& fn) -> decltype(fn()) {
  spdlog::info("stage {}", name);
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", name, e.what()));
  } catch (const std::exception& e) {
    throw Error(fmt::format("{}: {}", name, e.what()));
  }
}

}  // namespace

Task1Result run_task1(const ExperimentConfig& cfg) {
  stage("validate", [&] { validate(cfg, 1); });
  const auto policy = model::policy_for_run(cfg.run);
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  auto train_corpus = stage("ingest", [&] { return load_corpus(cfg.train); });
  auto test_corpus = cfg.test.path.empty() ? train_corpus : stage("ingest", [&] { return load_corpus(cfg.test); });
  const auto providers = stage("providers", [&] { return make_providers(cfg); });

  const auto table = stage("featurize", [&] {
    return featurize(train_corpus, cfg.window_posts, policy.preprocess, providers);
  });
  auto trained = std::make_shared<TrainedModel>(stage("train", [&] {
    return train_model(table, cfg.train_cfg, policy.out_dim());
  }));

  stage("write-model", [&] {
    std::vector<features::FeatureVector> scaled;
    for (const auto& r : table.raw) scaled.push_back(features::apply_scaler(trained->scaler, r));
    features::write_feature_csv(dir / "features.csv", table.ids, scaled);
    features::save_scaler(dir / "scaler.json", trained->scaler);
    model::save_checkpoint(dir / "model.json", trained->head, cfg.train_cfg);
    write_file(dir / "cv.json", cv_to_json(trained->cv) + "\n");
  });

  const auto log = stage("simulate", [&] {
    return simulate(test_corpus, trained, policy, cfg.window_posts, providers, cfg.team_token);
  });
  stage("write-decisions", [&] { stream::write_log_csv(dir / "decisions.csv", log); });

  Task1Result result;
  result.cv = trained->cv;
  stage("evaluate", [&] {
    const auto gold = gold_labels(test_corpus);
    result.decision = metrics::decision_metrics(log, gold, cfg.metric_cfg);
    json j = json::parse(metrics::to_json(result.decision));
    j["run"] = cfg.run;
    json ranking;
    for (std::size_t after : cfg.ranking_after) {
      const auto r = metrics::ranking_metrics(metrics::scores_after(log, after), gold, cfg.ranking_k);
      if (after == cfg.ranking_after.front()) result.ranking = r;
      ranking[fmt::format("after_{}", after)] = json::parse(metrics::to_json(r));
    }
    j["ranking"] = ranking;
    write_file(dir / "metrics.json", j.dump(2) + "\n");
  });
  write_manifest(dir, cfg, {"features.csv", "scaler.json", "model.json", "cv.json", "decisions.csv", "metrics.json"});
  spdlog::info("task1 run {}: F1 {:.3f} F_latency {:.3f}", cfg.run, result.decision.f1, result.decision.f_latency);
  return result;
}

Task3Result run_task3(const ExperimentConfig& cfg) {
  stage("validate", [&] { validate(cfg, 3); });
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  const auto histories = stage("ingest", [&] { return load_corpus(cfg.test); });
  const auto q = stage("questionnaire", [&] {
    return cfg.questionnaire.empty() ? edeq::bundled_questionnaire() : edeq::load_questionnaire(cfg.questionnaire);
  });
  const auto provider = stage("providers", [&] { return embed::make_embedding_provider(cfg.embedding); });

  Task3Result result;
  stage("fill", [&] {
    spdlog::info("edeq run {}: day threshold {}", cfg.edeq_run, cfg.edeq_cfg.day_threshold);
    for (const auto& h : histories) result.sheets.push_back(edeq::fill_questionnaire(h, q, cfg.edeq_cfg, *provider));
  });

  std::vector<std::string> artifacts = {"answers.txt", "scores.json"};
  stage("score", [&] {
    edeq::write_answers(dir / "answers.txt", result.sheets, q);
    json scores;
    for (const auto& s : result.sheets) {
      const auto sc = edeq::score_sheet(s, q);
      scores[s.user_id] = {{"RS", sc.rs}, {"ECS", sc.ecs}, {"SCS", sc.scs}, {"WCS", sc.wcs}, {"global", sc.global}};
    }
    write_file(dir / "scores.json", scores.dump(2) + "\n");
  });

  if (cfg.edeq_gold.empty()) {
    spdlog::info("no gold answers configured; metrics skipped");
    fs::remove(dir / "metrics.json");
  } else {
    stage("evaluate", [&] {
      const auto gold = edeq::read_answers(cfg.edeq_gold, q);
      result.metrics = metrics::questionnaire_metrics(result.sheets, gold, q);
      write_file(dir / "metrics.json", metrics::to_json(*result.metrics) + "\n");
    });
    artifacts.push_back("metrics.json");
  }
  write_manifest(dir, cfg, artifacts);
  return result;
}

}  // namespace erisk::pipeline
