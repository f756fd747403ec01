#pragma once

#include <memory>
#include <string>

#include "erisk/stream.hpp"

namespace erisk::stream {

/// HTTP front end for a RoundServer:
///   GET  /teams/{token}/writings   -> 200 [{"subject_id","round","title","text","date"}]
///   POST /teams/{token}/decisions  -> 200 {"round": r} | 409 {"error": ...}
/// Unknown tokens get 403, malformed bodies 400.
class HttpRoundServer {
 public:
  explicit HttpRoundServer(RoundServer& server);
  ~HttpRoundServer();
  HttpRoundServer(const HttpRoundServer&) = delete;
  HttpRoundServer& operator=(const HttpRoundServer&) = delete;

  /// Binds (port 0 picks a free one) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Client side of the same protocol. Non-2xx replies map to AuthError
/// (403), ProtocolError (409) or TransportError.
class HttpTransport final : public Transport {
 public:
  HttpTransport(std::string base_url, std::string token, int timeout_seconds = 30);
  std::vector<Writing> fetch() override;
  std::size_t submit(std::span<const SubmittedDecision> decisions) override;

 private:
  std::string base_url_;
  std::string token_;
  int timeout_;
};

}  // namespace erisk::stream
