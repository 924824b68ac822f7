#pragma once

// Client wire protocol: one JSON object per WebSocket text message, tagged by
// "type". The first message must be a versioned "join".

#include <deque>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "medevac/session.h"

namespace medevac {

inline constexpr const char* kProtocolVersion = "medevac-protocol/1";

/// Server side of one connection.
class ClientEndpoint {
 public:
  explicit ClientEndpoint(std::shared_ptr<Session> session) : session_(std::move(session)) {}

  /// Handles one inbound message. Returns false when the connection must close
  /// (after the queued error is sent).
  bool on_message(std::string_view text);
  /// Serialized messages ready to send, replies first, then the session outbox.
  std::vector<std::string> outgoing();
  /// Marks the client disconnected; its token stays valid for resume.
  void on_close();

  bool joined() const { return !client_.empty(); }
  const std::string& client() const { return client_; }

 private:
  void reply(Json msg, const Json& request);
  void error(const std::string& code, const std::string& message, const Json& request);

  std::shared_ptr<Session> session_;
  std::string client_;
  std::deque<Json> replies_;
};

}  // namespace medevac
