// erisk: command-line driver for the early-risk workbench.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "erisk/corpus.hpp"
#include "erisk/edeq.hpp"
#include "erisk/error.hpp"
#include "erisk/metrics.hpp"
#include "erisk/pipeline.hpp"
#include "erisk/stream.hpp"
#include "erisk/stream_http.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace erisk;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "TOML experiment config");
  cmd->add_option("--set", c.sets, "Override a config key, e.g. --set train.epochs=20");
}

pipeline::ExperimentConfig base_config(const Common& c) {
  if (c.config.empty()) return pipeline::config_from_toml("", c.sets);
  return pipeline::load_config(c.config, c.sets);
}

pipeline::CorpusSource source(const std::string& path, const std::string& format, const std::string& golden) {
  return {path, format, golden};
}

metrics::GoldLabels gold_from(const std::string& corpus, const std::string& format, const std::string& golden) {
  if (!golden.empty() && corpus.empty()) {
    metrics::GoldLabels gold;
    for (const auto& [id, l] : corpus::read_golden_truth(golden))
      if (l != corpus::Label::unknown) gold[id] = corpus::label_to_int(l);
    return gold;
  }
  return pipeline::gold_labels(pipeline::load_corpus(source(corpus, format, golden)));
}

std::shared_ptr<pipeline::TrainedModel> load_model(const fs::path& dir) {
  auto m = std::make_shared<pipeline::TrainedModel>();
  m->scaler = features::load_scaler(dir / "scaler.json");
  m->head = model::load_checkpoint(dir / "model.json");
  return m;
}

std::atomic<stream::HttpRoundServer*> g_server{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Early risk detection workbench"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");
  app.set_version_flag("--version", pipeline::version());

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and write it as normalised JSONL");
  std::string in_path, in_format = "jsonl", in_golden, in_out;
  ingest->add_option("input", in_path, "JSONL file or XML directory")->required();
  ingest->add_option("--format", in_format, "jsonl|xml")->check(CLI::IsMember({"jsonl", "xml"}));
  ingest->add_option("--golden", in_golden, "Golden-truth file (xml)");
  ingest->add_option("-o,--out", in_out, "Output JSONL");

  // featurize
  Common feat_c;
  auto* featurize = app.add_subcommand("featurize", "Compute the 79 handcrafted features per subject");
  add_common(featurize, feat_c);
  std::string feat_corpus, feat_format = "jsonl", feat_out = "features";
  std::optional<int> feat_run;
  featurize->add_option("--corpus", feat_corpus, "Corpus (defaults to corpus.train)");
  featurize->add_option("--format", feat_format, "jsonl|xml");
  featurize->add_option("--run", feat_run, "Task 1 run (0, 1, 2)");
  featurize->add_option("-o,--out", feat_out, "Output directory");

  // train
  Common train_c;
  auto* train = app.add_subcommand("train", "Train the head with k-fold CV and save scaler + model");
  add_common(train, train_c);
  std::string train_out = "model";
  std::optional<int> train_run;
  std::optional<std::size_t> train_epochs;
  train->add_option("--run", train_run, "Task 1 run (0, 1, 2)");
  train->add_option("--epochs", train_epochs, "Training epochs");
  train->add_option("-o,--out", train_out, "Output directory");

  // simulate
  Common sim_c;
  auto* simulate = app.add_subcommand("simulate", "Run a trained model through the round protocol");
  add_common(simulate, sim_c);
  std::string sim_model = "model", sim_out = "decisions.csv", sim_connect, sim_host = "127.0.0.1", sim_token;
  std::optional<int> sim_run;
  int sim_port = 8080;
  bool sim_serve = false;
  simulate->add_option("--model", sim_model, "Directory with scaler.json and model.json");
  simulate->add_option("--run", sim_run, "Task 1 run (0, 1, 2)");
  simulate->add_option("-o,--out", sim_out, "Decision log CSV");
  simulate->add_flag("--serve", sim_serve, "Serve the test corpus over HTTP instead of running a client");
  simulate->add_option("--connect", sim_connect, "Run the client against http://host:port");
  simulate->add_option("--host", sim_host, "Bind address for --serve");
  simulate->add_option("--port", sim_port, "Port for --serve");
  simulate->add_option("--token", sim_token, "Team token (defaults to run.team_token)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Decision and ranking metrics for a decision log");
  std::string ev_log, ev_corpus, ev_format = "jsonl", ev_golden, ev_out;
  std::vector<int> ev_o = {5, 50}, ev_k = {10, 100};
  std::vector<std::size_t> ev_after = {1};
  bool ev_mean = false;
  evaluate->add_option("decisions", ev_log, "Decision log CSV")->required();
  evaluate->add_option("--corpus", ev_corpus, "Labelled corpus");
  evaluate->add_option("--format", ev_format, "jsonl|xml");
  evaluate->add_option("--golden", ev_golden, "Golden-truth file");
  evaluate->add_option("--erde-o", ev_o, "ERDE deadlines");
  evaluate->add_option("--k", ev_k, "Ranking cutoffs");
  evaluate->add_option("--after", ev_after, "Writings after which rankings are taken");
  evaluate->add_flag("--latency-mean", ev_mean, "Aggregate latency by mean instead of median");
  evaluate->add_option("-o,--out", ev_out, "Write metrics JSON here");

  // edeq-fill
  Common fill_c;
  auto* fill = app.add_subcommand("edeq-fill", "Answer the EDE-Q for every user");
  add_common(fill, fill_c);
  std::string fill_corpus, fill_out = "answers.txt";
  std::optional<int> fill_run;
  std::optional<double> fill_threshold;
  bool fill_inclusive = false;
  fill->add_option("--corpus", fill_corpus, "User corpus (defaults to corpus.test)");
  fill->add_option("--run", fill_run, "Run 1, 2 or 3");
  fill->add_option("--threshold", fill_threshold, "Day-item similarity threshold");
  fill->add_flag("--inclusive-span", fill_inclusive, "Count both end days of a span");
  fill->add_option("-o,--out", fill_out, "Answers file");

  // edeq-score
  auto* score = app.add_subcommand("edeq-score", "Subscale scores, and metrics against gold answers");
  std::string sc_pred, sc_gold, sc_out, sc_questionnaire;
  score->add_option("answers", sc_pred, "Answers file")->required();
  score->add_option("--gold", sc_gold, "Gold answers file");
  score->add_option("--questionnaire", sc_questionnaire, "Questionnaire JSON (default: bundled)");
  score->add_option("-o,--out", sc_out, "Write JSON here");

  // report
  auto* report = app.add_subcommand("report", "Print the metrics of an artifact directory");
  std::string rep_dir;
  report->add_option("dir", rep_dir, "Artifact directory")->required();

  // full runs
  Common t1_c, t3_c;
  std::string t1_out, t3_out;
  auto* task1 = app.add_subcommand("run-task1", "ingest -> features -> train -> simulate -> evaluate");
  add_common(task1, t1_c);
  task1->add_option("-o,--out", t1_out, "Artifact directory (overrides output.dir)");
  auto* task3 = app.add_subcommand("run-task3", "ingest -> fill EDE-Q -> score -> evaluate");
  add_common(task3, t3_c);
  task3->add_option("-o,--out", t3_out, "Artifact directory (overrides output.dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  auto logger = spdlog::stderr_color_mt("erisk");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*ingest) {
      const auto hs = pipeline::load_corpus(source(in_path, in_format, in_golden));
      std::size_t posts = 0;
      for (const auto& h : hs) posts += h.posts.size();
      if (!in_out.empty()) corpus::write_jsonl(in_out, hs);
      fmt::print("{} subjects, {} posts\n", hs.size(), posts);

    } else if (*featurize) {
      auto cfg = base_config(feat_c);
      if (!feat_corpus.empty()) cfg.train = source(feat_corpus, feat_format, "");
      if (feat_run) cfg.run = *feat_run;
      const auto hs = pipeline::load_corpus(cfg.train);
      const auto table = pipeline::featurize(hs, cfg.window_posts, model::policy_for_run(cfg.run).preprocess,
                                             pipeline::make_providers(cfg));
      fs::create_directories(feat_out);
      features::write_feature_csv(fs::path(feat_out) / "features.csv", table.ids, table.raw);
      std::vector<features::FeatureVector> labelled;
      for (std::size_t i = 0; i < table.raw.size(); ++i)
        if (table.labels[i] >= 0) labelled.push_back(table.raw[i]);
      if (!labelled.empty()) features::save_scaler(fs::path(feat_out) / "scaler.json", features::fit_scaler(labelled));
      fmt::print("{} subjects featurized into {}\n", table.ids.size(), feat_out);

    } else if (*train) {
      auto cfg = base_config(train_c);
      if (train_run) cfg.run = *train_run;
      if (train_epochs) cfg.train_cfg.epochs = *train_epochs;
      pipeline::validate(cfg, 1);
      const auto policy = model::policy_for_run(cfg.run);
      const auto table = pipeline::featurize(pipeline::load_corpus(cfg.train), cfg.window_posts, policy.preprocess,
                                             pipeline::make_providers(cfg));
      const auto m = pipeline::train_model(table, cfg.train_cfg, policy.out_dim());
      const fs::path dir = train_out;
      fs::create_directories(dir);
      features::save_scaler(dir / "scaler.json", m.scaler);
      model::save_checkpoint(dir / "model.json", m.head, cfg.train_cfg);
      pipeline::write_file(dir / "cv.json", pipeline::cv_to_json(m.cv) + "\n");
      for (const auto& f : m.cv)
        fmt::print("fold {}  P {:.3f}  R {:.3f}  F1 {:.3f}\n", f.fold, f.precision, f.recall, f.f1);

    } else if (*simulate) {
      auto cfg = base_config(sim_c);
      if (sim_run) cfg.run = *sim_run;
      const auto token = sim_token.empty() ? cfg.team_token : sim_token;
      const auto& src = cfg.test.path.empty() ? cfg.train : cfg.test;
      if (sim_serve) {
        stream::RoundServer server(pipeline::load_corpus(src));
        server.add_team(token);
        stream::HttpRoundServer http(server);
        g_server = &http;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        fmt::print("serving {} subjects on http://{}:{} for team '{}'\n", server.subject_count(), sim_host, sim_port, token);
        std::fflush(stdout);
        http.listen(sim_host, sim_port);
        g_server = nullptr;
        stream::write_log_csv(sim_out, server.log(token));
        return 0;
      }
      const auto policy = model::policy_for_run(cfg.run);
      auto m = load_model(sim_model);
      stream::DecisionLog log;
      if (!sim_connect.empty()) {
        stream::HttpTransport transport(sim_connect, token);
        log = stream::run_client(transport,
                                 pipeline::make_strategy(m, policy, cfg.window_posts, pipeline::make_providers(cfg)));
      } else {
        log = pipeline::simulate(pipeline::load_corpus(src), m, policy, cfg.window_posts, pipeline::make_providers(cfg),
                                 token);
      }
      stream::write_log_csv(sim_out, log);
      fmt::print("{} subjects logged to {}\n", log.size(), sim_out);

    } else if (*evaluate) {
      if (ev_corpus.empty() && ev_golden.empty()) throw ValidationError("evaluate needs --corpus or --golden");
      const auto log = stream::read_log_csv(ev_log);
      const auto gold = gold_from(ev_corpus, ev_format, ev_golden);
      metrics::MetricConfig mc;
      mc.erde_o = ev_o;
      mc.latency_mean = ev_mean;
      const auto dm = metrics::decision_metrics(log, gold, mc);
      nlohmann::ordered_json j = nlohmann::ordered_json::parse(metrics::to_json(dm));
      auto rows = metrics::rows_of(dm);
      for (std::size_t after : ev_after) {
        const auto rm = metrics::ranking_metrics(metrics::scores_after(log, after), gold, ev_k);
        j["ranking"][fmt::format("after_{}", after)] = nlohmann::ordered_json::parse(metrics::to_json(rm));
        for (const auto& [k, r] : rm.at) {
          rows.emplace_back(fmt::format("P@{} ({})", k, after), r.precision);
          rows.emplace_back(fmt::format("NDCG@{} ({})", k, after), r.ndcg);
        }
      }
      fmt::print("{}", metrics::to_table(rows));
      if (!ev_out.empty()) pipeline::write_file(ev_out, j.dump(2) + "\n");

    } else if (*fill) {
      auto cfg = base_config(fill_c);
      if (fill_run) {
        cfg.edeq_run = *fill_run;
        cfg.edeq_cfg = edeq::config_for_run(*fill_run);
      }
      if (fill_threshold) cfg.edeq_cfg.day_threshold = *fill_threshold;
      if (fill_inclusive) cfg.edeq_cfg.inclusive_span = true;
      if (!fill_corpus.empty()) cfg.test = source(fill_corpus, "jsonl", "");
      cfg.edeq_gold.clear();
      pipeline::validate(cfg, 3);
      const auto q = cfg.questionnaire.empty() ? edeq::bundled_questionnaire() : edeq::load_questionnaire(cfg.questionnaire);
      const auto provider = embed::make_embedding_provider(cfg.embedding);
      std::vector<edeq::AnswerSheet> sheets;
      for (const auto& h : pipeline::load_corpus(cfg.test))
        sheets.push_back(edeq::fill_questionnaire(h, q, cfg.edeq_cfg, *provider));
      edeq::write_answers(fill_out, sheets, q);
      fmt::print("{} questionnaires written to {}\n", sheets.size(), fill_out);

    } else if (*score) {
      const auto q = sc_questionnaire.empty() ? edeq::bundled_questionnaire() : edeq::load_questionnaire(sc_questionnaire);
      const auto pred = edeq::read_answers(sc_pred, q);
      nlohmann::ordered_json j;
      if (sc_gold.empty()) {
        for (const auto& s : pred) {
          const auto sc = edeq::score_sheet(s, q);
          fmt::print("{:<12} RS {:.3f}  ECS {:.3f}  SCS {:.3f}  WCS {:.3f}  global {:.3f}\n", s.user_id, sc.rs, sc.ecs,
                     sc.scs, sc.wcs, sc.global);
          j[s.user_id] = {{"RS", sc.rs}, {"ECS", sc.ecs}, {"SCS", sc.scs}, {"WCS", sc.wcs}, {"global", sc.global}};
        }
      } else {
        const auto m = metrics::questionnaire_metrics(pred, edeq::read_answers(sc_gold, q), q);
        fmt::print("{}", metrics::to_table(metrics::rows_of(m)));
        j = nlohmann::ordered_json::parse(metrics::to_json(m));
      }
      if (!sc_out.empty()) pipeline::write_file(sc_out, j.dump(2) + "\n");

    } else if (*report) {
      const fs::path dir = rep_dir;
      if (!fs::exists(dir / "metrics.json")) throw ValidationError("no metrics.json in " + rep_dir);
      const auto j = nlohmann::ordered_json::parse(pipeline::read_file(dir / "metrics.json"));
      std::vector<std::pair<std::string, double>> rows;
      for (const auto& [k, v] : j.items())
        if (v.is_number() && k != "run") rows.emplace_back(k, v.get<double>());
      if (j.contains("ranking"))
        for (const auto& [after, r] : j["ranking"].items())
          for (const auto& [k, v] : r.items())
            if (v.is_number()) rows.emplace_back(fmt::format("{} ({})", k, after), v.get<double>());
      fmt::print("{}", metrics::to_table(rows));
      if (fs::exists(dir / "manifest.json")) {
        const auto m = nlohmann::json::parse(pipeline::read_file(dir / "manifest.json"));
        fmt::print("config {}  seed {}  version {}\n", m["config_hash"].get<std::string>(), m["seed"].get<std::uint64_t>(),
                   m["versions"]["erisk"].get<std::string>());
      }

    } else if (*task1) {
      auto cfg = base_config(t1_c);
      if (!t1_out.empty()) cfg.output_dir = t1_out;
      const auto r = pipeline::run_task1(cfg);
      fmt::print("{}", metrics::to_table(metrics::rows_of(r.decision)));
      fmt::print("artifacts in {}\n", cfg.output_dir.string());

    } else if (*task3) {
      auto cfg = base_config(t3_c);
      if (!t3_out.empty()) cfg.output_dir = t3_out;
      const auto r = pipeline::run_task3(cfg);
      if (r.metrics) fmt::print("{}", metrics::to_table(metrics::rows_of(*r.metrics)));
      fmt::print("{} questionnaires, artifacts in {}\n", r.sheets.size(), cfg.output_dir.string());
    }
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
