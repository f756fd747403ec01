#include <gtest/gtest.h>

#include <thread>

#include "erisk/error.hpp"
#include "erisk/stream.hpp"
#include "erisk/stream_http.hpp"
#include "httplib.h"
#include "json.hpp"
#include "test_util.hpp"

using namespace erisk;
using namespace erisk::stream;

namespace {

std::vector<corpus::UserHistory> corpus_with(std::vector<std::pair<std::string, int>> subjects) {
  std::vector<corpus::UserHistory> out;
  const auto base = *parse_timestamp("2022-05-01 12:00:00");
  for (const auto& [id, n] : subjects) {
    std::vector<corpus::Post> posts;
    for (int i = 0; i < n; ++i)
      posts.push_back({base + std::chrono::hours(i), "", id + " post " + std::to_string(i), 0});
    out.push_back(corpus::make_history(id, corpus::Label::unknown, posts));
  }
  return out;
}

Strategy constant(int decision) {
  return [decision](const std::vector<Writing>& ws) {
    std::vector<SubmittedDecision> out;
    for (const auto& w : ws) out.push_back({w.subject_id, decision, decision * 0.9});
    return out;
  };
}

std::vector<SubmittedDecision> answer_all(const std::vector<Writing>& ws, int decision) {
  return constant(decision)(ws);
}

}  // namespace

TEST(RoundServer, ReleasesOneWritingPerSubject) {
  RoundServer s(corpus_with({{"a", 2}, {"b", 1}}));
  s.add_team("t");
  const auto r0 = s.next_round("t");
  ASSERT_EQ(r0.size(), 2u);
  EXPECT_EQ(r0[0].round, 0u);
  EXPECT_EQ(r0[0].text, "a post 0");
  EXPECT_THROW(s.next_round("t"), ProtocolError);
  EXPECT_EQ(s.submit("t", answer_all(r0, 0)), 0u);
  const auto r1 = s.next_round("t");
  ASSERT_EQ(r1.size(), 1u);
  EXPECT_EQ(r1[0].subject_id, "a");
  s.submit("t", answer_all(r1, 0));
  EXPECT_TRUE(s.next_round("t").empty());
  const auto st = s.state("t");
  EXPECT_EQ(st.finished.size(), 2u);
  EXPECT_TRUE(st.pending.empty());
}

TEST(RoundServer, UnknownToken) {
  RoundServer s(corpus_with({{"a", 1}}));
  EXPECT_THROW(s.next_round("nobody"), AuthError);
}

TEST(RoundServer, MissingSubjectNamed) {
  RoundServer s(corpus_with({{"a", 1}, {"b", 1}}));
  s.add_team("t");
  const auto ws = s.next_round("t");
  std::vector<SubmittedDecision> partial = {{"a", 0, 0.1}};
  try {
    s.submit("t", partial);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("b"), std::string::npos);
  }
  // nothing recorded, round still pending
  EXPECT_EQ(s.state("t").pending.size(), 2u);
  EXPECT_TRUE(s.log("t").empty());
}

TEST(RoundServer, UnknownAndDuplicateRejected) {
  RoundServer s(corpus_with({{"a", 1}}));
  s.add_team("t");
  s.next_round("t");
  EXPECT_THROW(s.submit("t", std::vector<SubmittedDecision>{{"a", 0, 0}, {"zz", 0, 0}}), ProtocolError);
  EXPECT_THROW(s.submit("t", std::vector<SubmittedDecision>{{"a", 0, 0}, {"a", 0, 0}}), ProtocolError);
  EXPECT_THROW(s.submit("t", std::vector<SubmittedDecision>{{"a", 2, 0}}), ProtocolError);
}

TEST(RoundServer, AlertsAreFinal) {
  RoundServer s(corpus_with({{"a", 6}}));
  s.add_team("t");
  for (int r = 0; r < 4; ++r) s.submit("t", answer_all(s.next_round("t"), r == 3 ? 1 : 0));
  EXPECT_EQ(s.state("t").alerts.at("a"), 3u);
  const auto ws = s.next_round("t");
  try {
    s.submit("t", answer_all(ws, 0));
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("alerts are final"), std::string::npos);
  }
  s.submit("t", answer_all(ws, 1));
  EXPECT_EQ(s.state("t").alerts.at("a"), 3u);
}

TEST(RoundServer, InterleavingNeverLeaksFuturePosts) {
  // Randomised interleaving of fetches and (possibly invalid) submissions:
  // every released writing must be exactly the next unseen post.
  RoundServer s(corpus_with({{"a", 5}, {"b", 3}, {"c", 7}}));
  s.add_team("t");
  std::map<std::string, std::size_t> answered;
  std::mt19937 rng(4);
  std::vector<Writing> outstanding;
  for (int step = 0; step < 200; ++step) {
    if (rng() % 2 == 0) {
      try {
        const auto ws = s.next_round("t");
        ASSERT_TRUE(outstanding.empty());
        for (const auto& w : ws) EXPECT_EQ(w.round, answered[w.subject_id]);
        outstanding = ws;
        if (ws.empty()) break;
      } catch (const ProtocolError&) {
        EXPECT_FALSE(outstanding.empty());
      }
    } else if (!outstanding.empty()) {
      auto ds = answer_all(outstanding, 0);
      if (rng() % 3 == 0) ds.pop_back();
      try {
        s.submit("t", ds);
        for (const auto& w : outstanding) ++answered[w.subject_id];
        outstanding.clear();
      } catch (const ProtocolError&) {
      }
    }
  }
  EXPECT_EQ(answered["c"], 7u);
}

TEST(RoundServer, TeamsAreIndependentUnderConcurrency) {
  RoundServer s(corpus_with({{"a", 40}, {"b", 25}}));
  const int teams = 4;
  for (int i = 0; i < teams; ++i) s.add_team("t" + std::to_string(i));
  std::vector<std::thread> threads;
  std::vector<DecisionLog> logs(teams);
  for (int i = 0; i < teams; ++i) {
    threads.emplace_back([&, i] {
      InProcessTransport tr(s, "t" + std::to_string(i));
      logs[i] = run_client(tr, constant(i % 2));
    });
  }
  for (auto& t : threads) t.join();
  for (int i = 0; i < teams; ++i) {
    EXPECT_EQ(logs[i].at("a").size(), 40u);
    EXPECT_EQ(logs[i], s.log("t" + std::to_string(i)));
  }
}

TEST(RunClient, AlwaysZero) {
  RoundServer s(corpus_with({{"a", 3}, {"b", 3}}));
  s.add_team("t");
  InProcessTransport tr(s, "t");
  const auto log = run_client(tr, constant(0));
  for (const auto& [id, entries] : log) {
    EXPECT_EQ(entries.size(), 3u);
    for (const auto& e : entries) EXPECT_EQ(e.decision, 0);
  }
  EXPECT_TRUE(s.state("t").alerts.empty());
}

TEST(RunClient, AlertAtRoundZero) {
  RoundServer s(corpus_with({{"a", 3}, {"b", 2}}));
  s.add_team("t");
  InProcessTransport tr(s, "t");
  run_client(tr, constant(1));
  const auto st = s.state("t");
  EXPECT_EQ(st.alerts.at("a"), 0u);
  EXPECT_EQ(st.alerts.at("b"), 0u);
}

TEST(RunClient, ReplayIsByteIdentical) {
  const auto c = corpus_with({{"a", 4}, {"b", 6}, {"c", 1}});
  auto strategy = [](const std::vector<Writing>& ws) {
    std::vector<SubmittedDecision> out;
    for (const auto& w : ws) out.push_back({w.subject_id, w.round >= 2 ? 1 : 0, 0.1 * static_cast<double>(w.round)});
    return out;
  };
  std::string first;
  for (int rep = 0; rep < 2; ++rep) {
    RoundServer s(c);
    s.add_team("t");
    InProcessTransport tr(s, "t");
    const auto csv = log_to_csv(run_client(tr, strategy));
    if (rep == 0) first = csv;
    else EXPECT_EQ(csv, first);
  }
}

namespace {

class FlakyTransport final : public Transport {
 public:
  FlakyTransport(RoundServer& s, int fail_on_fetch) : inner_(s, "t"), fail_on_(fail_on_fetch) {}
  std::vector<Writing> fetch() override {
    if (++fetches_ == fail_on_) throw TransportError("connection reset", 0);
    return inner_.fetch();
  }
  std::size_t submit(std::span<const SubmittedDecision> d) override { return inner_.submit(d); }

 private:
  InProcessTransport inner_;
  int fail_on_;
  int fetches_ = 0;
};

}  // namespace

TEST(RunClient, InterruptedThenResumed) {
  const auto c = corpus_with({{"a", 5}, {"b", 5}});
  RoundServer s(c);
  s.add_team("t");
  FlakyTransport tr(s, 3);
  DecisionLog partial;
  try {
    run_client(tr, constant(0));
    FAIL();
  } catch (const StreamInterrupted& e) {
    ASSERT_TRUE(e.last_completed_round());
    EXPECT_EQ(*e.last_completed_round(), 1u);
    partial = e.partial_log();
  }
  const auto full = run_client(tr, constant(0), partial);

  RoundServer clean(c);
  clean.add_team("t");
  InProcessTransport ctr(clean, "t");
  EXPECT_EQ(full, run_client(ctr, constant(0)));
}

TEST(LogCsv, RoundTrip) {
  testutil::TempDir dir;
  DecisionLog log;
  log["b"] = {{0, 0, 0.25}, {1, 1, 0.75}};
  log["a"] = {{0, 1, 0.1234567890123}};
  write_log_csv(dir / "d.csv", log);
  EXPECT_EQ(read_log_csv(dir / "d.csv"), log);
  EXPECT_EQ(testutil::slurp(dir / "d.csv").substr(0, 32), "subject_id,round,decision,score\n");
}

TEST(LogCsv, RejectsNonIncreasingRounds) {
  testutil::TempDir dir;
  testutil::write(dir / "d.csv", "subject_id,round,decision,score\na,1,0,0\na,1,0,0\n");
  EXPECT_THROW(read_log_csv(dir / "d.csv"), ParseError);
}

class HttpProtocol : public ::testing::Test {
 protected:
  HttpProtocol() : server_(corpus_with({{"a", 3}, {"b", 2}})), http_(server_) {
    server_.add_team("team1");
    port_ = http_.start();
    base_ = "http://127.0.0.1:" + std::to_string(port_);
  }
  ~HttpProtocol() override { http_.stop(); }

  RoundServer server_;
  HttpRoundServer http_;
  int port_ = 0;
  std::string base_;
};

TEST_F(HttpProtocol, ClientRunsToCompletion) {
  HttpTransport tr(base_, "team1");
  const auto log = run_client(tr, constant(0));
  EXPECT_EQ(log.at("a").size(), 3u);
  EXPECT_EQ(log.at("b").size(), 2u);
  EXPECT_EQ(log, server_.log("team1"));
}

TEST_F(HttpProtocol, WireShapes) {
  httplib::Client cli(base_);
  auto get = cli.Get("/teams/team1/writings");
  ASSERT_TRUE(get);
  EXPECT_EQ(get->status, 200);
  const auto arr = nlohmann::json::parse(get->body);
  ASSERT_TRUE(arr.is_array());
  ASSERT_EQ(arr.size(), 2u);
  for (const char* k : {"subject_id", "round", "title", "text", "date"}) EXPECT_TRUE(arr[0].contains(k)) << k;
  EXPECT_EQ(arr[0]["date"], "2022-05-01 12:00:00");

  auto again = cli.Get("/teams/team1/writings");
  EXPECT_EQ(again->status, 409);
  EXPECT_TRUE(nlohmann::json::parse(again->body).contains("error"));

  auto partial = cli.Post("/teams/team1/decisions", R"([{"subject_id":"a","decision":0,"score":0.1}])", "application/json");
  EXPECT_EQ(partial->status, 409);
  auto full = cli.Post("/teams/team1/decisions",
                       R"([{"subject_id":"a","decision":1,"score":0.9},{"subject_id":"b","decision":0,"score":0.1}])",
                       "application/json");
  EXPECT_EQ(full->status, 200);
  EXPECT_EQ(nlohmann::json::parse(full->body)["round"], 0);

  auto flip_fetch = cli.Get("/teams/team1/writings");
  auto flip = cli.Post("/teams/team1/decisions",
                       R"([{"subject_id":"a","decision":0,"score":0.1},{"subject_id":"b","decision":0,"score":0.1}])",
                       "application/json");
  EXPECT_EQ(flip->status, 409);
  EXPECT_NE(flip->body.find("alerts are final"), std::string::npos);

  EXPECT_EQ(cli.Get("/teams/ghost/writings")->status, 403);
  EXPECT_EQ(cli.Post("/teams/team1/decisions", "{not json", "application/json")->status, 400);
}

TEST_F(HttpProtocol, ErrorsMapToTypes) {
  HttpTransport ghost(base_, "ghost");
  EXPECT_THROW(ghost.fetch(), AuthError);
  HttpTransport tr(base_, "team1");
  tr.fetch();
  EXPECT_THROW(tr.fetch(), ProtocolError);
}

TEST(HttpProtocolDown, KillAndResume) {
  const auto c = corpus_with({{"a", 4}, {"b", 4}});
  RoundServer server(c);
  server.add_team("t");
  DecisionLog partial;
  std::vector<Writing> unanswered;
  int port = 0;
  {
    HttpRoundServer http(server);
    port = http.start();
    HttpTransport tr("http://127.0.0.1:" + std::to_string(port), "t", 2);
    int calls = 0;
    Strategy killing = [&](const std::vector<Writing>& ws) {
      if (++calls == 2) http.stop();  // server dies while the client is thinking
      return constant(0)(ws);
    };
    try {
      run_client(tr, killing);
      FAIL();
    } catch (const StreamInterrupted& e) {
      partial = e.partial_log();
      unanswered = e.unanswered();
      ASSERT_TRUE(e.last_completed_round());
      EXPECT_EQ(*e.last_completed_round(), 0u);
    }
  }
  // The submit of round 1 never arrived, so the server still expects it.
  EXPECT_EQ(server.state("t").round, 1u);
  EXPECT_EQ(partial.at("a").size(), 1u);
  ASSERT_EQ(unanswered.size(), 2u);

  // Bring the front end back and resume where the client left off.
  HttpRoundServer again(server);
  const int new_port = again.start();
  HttpTransport tr("http://127.0.0.1:" + std::to_string(new_port), "t");
  const auto full = run_client(tr, constant(0), partial, unanswered);
  again.stop();

  RoundServer clean(c);
  clean.add_team("t");
  InProcessTransport ctr(clean, "t");
  EXPECT_EQ(full, run_client(ctr, constant(0)));
  EXPECT_EQ(full, server.log("t"));
}
