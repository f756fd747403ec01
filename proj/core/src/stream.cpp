#include "erisk/stream.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace erisk::stream {
namespace {

std::string join(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
  return out;
}

}  // namespace

RoundServer::RoundServer(std::vector<corpus::UserHistory> corpus) : corpus_(std::move(corpus)) {
  std::sort(corpus_.begin(), corpus_.end(),
            [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });
}

void RoundServer::add_team(const std::string& token) {
  std::unique_lock lock(teams_mu_);
  teams_.try_emplace(token, std::make_unique<Team>());
}

RoundServer::Team& RoundServer::team(const std::string& token) const {
  std::shared_lock lock(teams_mu_);
  const auto it = teams_.find(token);
  if (it == teams_.end()) throw AuthError("unknown team token");
  return *it->second;
}

std::vector<Writing> RoundServer::next_round(const std::string& token) {
  auto& t = team(token);
  std::lock_guard lock(t.mu);
  auto& st = t.state;
  if (!st.pending.empty()) throw ProtocolError("round incomplete");

  std::vector<Writing> out;
  for (const auto& h : corpus_) {
    if (st.round < h.posts.size()) {
      const auto& p = h.posts[st.round];
      out.push_back({h.subject_id, st.round, p.title, p.text, format_timestamp(p.date)});
      st.pending.insert(h.subject_id);
    } else {
      st.finished.insert(h.subject_id);
    }
  }
  return out;
}

std::size_t RoundServer::submit(const std::string& token, std::span<const SubmittedDecision> decisions) {
  auto& t = team(token);
  std::lock_guard lock(t.mu);
  auto& st = t.state;
  if (st.pending.empty()) throw ProtocolError("no round outstanding; fetch writings first");

  std::set<std::string> seen;
  std::vector<std::string> unknown, duplicate, flipped, bad_value;
  for (const auto& d : decisions) {
    if (!st.pending.contains(d.subject_id)) {
      unknown.push_back(d.subject_id);
      continue;
    }
    if (!seen.insert(d.subject_id).second) duplicate.push_back(d.subject_id);
    if (d.decision != 0 && d.decision != 1) bad_value.push_back(d.subject_id);
    if (d.decision == 0 && st.alerts.contains(d.subject_id)) flipped.push_back(d.subject_id);
  }
  std::vector<std::string> missing;
  for (const auto& id : st.pending) {
    if (!seen.contains(id)) missing.push_back(id);
  }
  if (!unknown.empty()) throw ProtocolError("unknown subject(s): " + join(unknown));
  if (!duplicate.empty()) throw ProtocolError("duplicate decision(s) for: " + join(duplicate));
  if (!missing.empty()) throw ProtocolError("missing decision(s) for: " + join(missing));
  if (!bad_value.empty()) throw ProtocolError("decision must be 0 or 1 for: " + join(bad_value));
  if (!flipped.empty()) throw ProtocolError("alerts are final: " + join(flipped));

  for (const auto& d : decisions) {
    t.log[d.subject_id].push_back({st.round, d.decision, d.score});
    if (d.decision == 1) st.alerts.try_emplace(d.subject_id, st.round);
  }
  st.pending.clear();
  return st.round++;
}

RoundState RoundServer::state(const std::string& token) const {
  auto& t = team(token);
  std::lock_guard lock(t.mu);
  return t.state;
}

DecisionLog RoundServer::log(const std::string& token) const {
  auto& t = team(token);
  std::lock_guard lock(t.mu);
  return t.log;
}

DecisionLog run_client(Transport& transport, const Strategy& strategy, DecisionLog resume,
                       std::vector<Writing> unanswered) {
  DecisionLog log = std::move(resume);
  std::optional<std::size_t> last_round;
  for (const auto& [id, entries] : log) {
    if (!entries.empty()) last_round = std::max(last_round.value_or(0), entries.back().round);
  }
  std::vector<Writing> writings = std::move(unanswered);
  while (true) {
    if (writings.empty()) {
      try {
        writings = transport.fetch();
      } catch (const TransportError& e) {
        throw StreamInterrupted(std::string("fetch failed: ") + e.what(), last_round, log);
      }
      if (writings.empty()) return log;
    }

    const auto decisions = strategy(writings);
    try {
      transport.submit(decisions);
    } catch (const TransportError& e) {
      throw StreamInterrupted(std::string("submit failed: ") + e.what(), last_round, log, writings);
    }
    const auto round = writings.front().round;
    for (const auto& d : decisions) log[d.subject_id].push_back({round, d.decision, d.score});
    last_round = round;
    writings.clear();
  }
}

std::string log_to_csv(const DecisionLog& log) {
  std::string out = "subject_id,round,decision,score\n";
  for (const auto& [id, entries] : log) {
    for (const auto& e : entries) out += fmt::format("{},{},{},{}\n", id, e.round, e.decision, e.score);
  }
  return out;
}

void write_log_csv(const std::filesystem::path& path, const DecisionLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << log_to_csv(log);
}

DecisionLog read_log_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  DecisionLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 || line.empty()) continue;
    std::stringstream ss(line);
    std::string id, round, decision, score;
    if (!std::getline(ss, id, ',') || !std::getline(ss, round, ',') ||
        !std::getline(ss, decision, ',') || !std::getline(ss, score)) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected 4 columns", lineno);
    }
    try {
      auto& entries = log[id];
      LogEntry e{std::stoul(round), std::stoi(decision), std::stod(score)};
      if (!entries.empty() && entries.back().round >= e.round) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": rounds not increasing",
                         lineno);
      }
      entries.push_back(e);
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad number", lineno);
    }
  }
  return log;
}

}  // namespace erisk::stream
