#include "erisk/stream_http.hpp"

#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace erisk::stream {
namespace {

using nlohmann::json;

json error_body(const std::string& message) { return json{{"error", message}}; }

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const AuthError& e) {
    reply(res, 403, error_body(e.what()));
  } catch (const ProtocolError& e) {
    reply(res, 409, error_body(e.what()));
  } catch (const json::exception& e) {
    reply(res, 400, error_body(std::string("malformed request: ") + e.what()));
  } catch (const std::exception& e) {
    reply(res, 500, error_body(e.what()));
  }
}

[[noreturn]] void raise_for(const httplib::Result& res, const std::string& what) {
  if (!res) throw TransportError(what + ": " + httplib::to_string(res.error()), 0);
  std::string message = "HTTP " + std::to_string(res->status);
  try {
    message = json::parse(res->body).at("error").get<std::string>();
  } catch (const json::exception&) {
  }
  if (res->status == 403) throw AuthError(message);
  if (res->status == 409) throw ProtocolError(message);
  throw TransportError(what + ": " + message, res->status);
}

}  // namespace

struct HttpRoundServer::Impl {
  RoundServer& server;
  httplib::Server http;
  std::thread thread;

  explicit Impl(RoundServer& s) : server(s) {
    http.Get(R"(/teams/([^/]+)/writings)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        json out = json::array();
        for (const auto& w : server.next_round(req.matches[1])) {
          out.push_back({{"subject_id", w.subject_id},
                         {"round", w.round},
                         {"title", w.title},
                         {"text", w.text},
                         {"date", w.date}});
        }
        reply(res, 200, out);
      });
    });
    http.Post(R"(/teams/([^/]+)/decisions)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = json::parse(req.body);
        if (!body.is_array()) throw json::type_error::create(302, "expected a JSON array", &body);
        std::vector<SubmittedDecision> decisions;
        for (const auto& d : body) {
          decisions.push_back({d.at("subject_id").get<std::string>(), d.at("decision").get<int>(),
                               d.value("score", 0.0)});
        }
        const auto round = server.submit(req.matches[1], decisions);
        reply(res, 200, json{{"round", round}});
      });
    });
  }
};

HttpRoundServer::HttpRoundServer(RoundServer& server) : impl_(std::make_unique<Impl>(server)) {}

HttpRoundServer::~HttpRoundServer() { stop(); }

int HttpRoundServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->http.bind_to_any_port(host);
  } else if (!impl_->http.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw TransportError("cannot bind " + host + ":" + std::to_string(port), 0);
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return bound;
}

void HttpRoundServer::listen(const std::string& host, int port) {
  if (!impl_->http.listen(host, port)) {
    throw TransportError("cannot listen on " + host + ":" + std::to_string(port), 0);
  }
}

void HttpRoundServer::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

HttpTransport::HttpTransport(std::string base_url, std::string token, int timeout_seconds)
    : base_url_(std::move(base_url)), token_(std::move(token)), timeout_(timeout_seconds) {}

std::vector<Writing> HttpTransport::fetch() {
  httplib::Client cli(base_url_);
  cli.set_connection_timeout(timeout_, 0);
  cli.set_read_timeout(timeout_, 0);
  const auto path = "/teams/" + token_ + "/writings";
  auto res = cli.Get(path);
  if (!res || res->status != 200) raise_for(res, "GET " + path);
  std::vector<Writing> out;
  try {
    for (const auto& w : json::parse(res->body)) {
      out.push_back({w.at("subject_id").get<std::string>(), w.at("round").get<std::size_t>(),
                     w.at("title").get<std::string>(), w.at("text").get<std::string>(),
                     w.at("date").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw TransportError("GET " + path + ": malformed reply: " + e.what(), res->status);
  }
  return out;
}

std::size_t HttpTransport::submit(std::span<const SubmittedDecision> decisions) {
  json body = json::array();
  for (const auto& d : decisions) {
    body.push_back({{"subject_id", d.subject_id}, {"decision", d.decision}, {"score", d.score}});
  }
  httplib::Client cli(base_url_);
  cli.set_connection_timeout(timeout_, 0);
  cli.set_read_timeout(timeout_, 0);
  const auto path = "/teams/" + token_ + "/decisions";
  auto res = cli.Post(path, body.dump(), "application/json");
  if (!res || res->status != 200) raise_for(res, "POST " + path);
  try {
    return json::parse(res->body).at("round").get<std::size_t>();
  } catch (const json::exception& e) {
    throw TransportError("POST " + path + ": malformed reply: " + e.what(), res->status);
  }
}

}  // namespace erisk::stream
