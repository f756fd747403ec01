#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "erisk/corpus.hpp"
#include "erisk/error.hpp"

namespace erisk::stream {

struct Writing {
  std::string subject_id;
  std::size_t round = 0;
  std::string title;
  std::string text;
  std::string date;  // "YYYY-MM-DD HH:MM:SS"
};

struct SubmittedDecision {
  std::string subject_id;
  int decision = 0;
  double score = 0;
};

struct LogEntry {
  std::size_t round = 0;
  int decision = 0;
  double score = 0;

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

/// subject_id -> entries in round order.
using DecisionLog = std::map<std::string, std::vector<LogEntry>>;

struct RoundState {
  std::size_t round = 0;
  std::set<std::string> pending;
  std::set<std::string> finished;
  std::map<std::string, std::size_t> alerts;  // subject -> round of first positive decision
};

/// Mock lab server. Every round releases the next writing of each subject
/// that still has one, oldest first, and refuses to release more until the
/// round is answered. Each team token has its own state and lock.
class RoundServer {
 public:
  explicit RoundServer(std::vector<corpus::UserHistory> corpus);

  void add_team(const std::string& token);

  /// The current round's writings; an empty result means end of stream.
  /// ProtocolError("round incomplete") while decisions are pending,
  /// AuthError for unknown tokens.
  std::vector<Writing> next_round(const std::string& token);

  /// Records one decision per pending subject and advances the round.
  /// Returns the round that was answered. Nothing is recorded when any
  /// check fails.
  std::size_t submit(const std::string& token, std::span<const SubmittedDecision> decisions);

  RoundState state(const std::string& token) const;
  DecisionLog log(const std::string& token) const;
  std::size_t subject_count() const { return corpus_.size(); }

 private:
  struct Team {
    mutable std::mutex mu;
    RoundState state;
    DecisionLog log;
  };
  Team& team(const std::string& token) const;

  std::vector<corpus::UserHistory> corpus_;
  mutable std::shared_mutex teams_mu_;
  std::map<std::string, std::unique_ptr<Team>> teams_;
};

/// How the client reaches a server.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::vector<Writing> fetch() = 0;
  virtual std::size_t submit(std::span<const SubmittedDecision> decisions) = 0;
};

class InProcessTransport final : public Transport {
 public:
  InProcessTransport(RoundServer& server, std::string token)
      : server_(server), token_(std::move(token)) {}
  std::vector<Writing> fetch() override { return server_.next_round(token_); }
  std::size_t submit(std::span<const SubmittedDecision> d) override { return server_.submit(token_, d); }

 private:
  RoundServer& server_;
  std::string token_;
};

/// Maps one round's writings to one decision per subject.
using Strategy = std::function<std::vector<SubmittedDecision>(const std::vector<Writing>&)>;

/// Thrown by run_client when the exchange breaks mid-stream. Carries the
/// log so far, the last round the server acknowledged and, when the break
/// hit a submission, the writings of the unacknowledged round. Resume with
/// `run_client(t, s, e.partial_log(), e.unanswered())`.
class StreamInterrupted : public Error {
 public:
  StreamInterrupted(const std::string& what, std::optional<std::size_t> last_round, DecisionLog log,
                    std::vector<Writing> unanswered = {})
      : Error(what), last_round_(last_round), log_(std::move(log)), unanswered_(std::move(unanswered)) {}
  std::optional<std::size_t> last_completed_round() const { return last_round_; }
  const DecisionLog& partial_log() const { return log_; }
  const std::vector<Writing>& unanswered() const { return unanswered_; }

 private:
  std::optional<std::size_t> last_round_;
  DecisionLog log_;
  std::vector<Writing> unanswered_;
};

/// fetch -> strategy -> submit until the server reports end of stream.
/// `unanswered` writings, if any, are answered before the first fetch.
DecisionLog run_client(Transport& transport, const Strategy& strategy, DecisionLog resume = {},
                       std::vector<Writing> unanswered = {});

/// CSV "subject_id,round,decision,score", subjects sorted, rounds ascending.
std::string log_to_csv(const DecisionLog& log);
void write_log_csv(const std::filesystem::path& path, const DecisionLog& log);
DecisionLog read_log_csv(const std::filesystem::path& path);

}  // namespace erisk::stream
