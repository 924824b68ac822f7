#pragma once

// Network front end for one session: the WebSocket client protocol, the
// instructor HTTP endpoints and the real-time clock that paces execution.

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "medevac/session.h"

namespace httplib {
class Server;
}

namespace medevac {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int ws_port = 0;    // 0 = any free port
  int http_port = 0;
  /// Real milliseconds between clock steps and broadcasts.
  int cadence_ms = 250;
  /// Extra acceleration on top of the scenario's time compression.
  double speed = 1.0;
  /// When false the clock never advances on its own (tests drive Session::advance).
  bool auto_clock = true;
};

class Server {
 public:
  Server(std::shared_ptr<Session> session, ServerOptions opts = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds both ports and starts serving; throws std::runtime_error on bind failure.
  void start();
  void stop();

  int ws_port() const { return ws_port_; }
  int http_port() const { return http_port_; }
  Session& session() { return *session_; }

 private:
  void accept_loop();
  void serve_connection(int fd);
  void clock_loop();
  void setup_http();

  std::shared_ptr<Session> session_;
  ServerOptions opts_;
  std::unique_ptr<httplib::Server> http_;
  std::atomic<bool> running_{false};
  int listen_fd_ = -1;
  int ws_port_ = 0;
  int http_port_ = 0;
  std::thread accept_thread_;
  std::thread http_thread_;
  std::thread clock_thread_;
  std::mutex conn_mu_;
  std::vector<std::thread> connections_;
};

}  // namespace medevac
