#include "medevac/server.h"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cmath>

#include <httplib.h>

#include "medevac/protocol.h"
#include "medevac/websocket.h"

namespace medevac {
namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

Server::Server(std::shared_ptr<Session> session, ServerOptions opts)
    : session_(std::move(session)), opts_(std::move(opts)), http_(std::make_unique<httplib::Server>()) {}

Server::~Server() { stop(); }

void Server::setup_http() {
  auto authorized = [this](const httplib::Request& req) {
    const std::string& token = session_->instructor_token();
    if (req.get_header_value("X-Session-Token") == token) return true;
    return req.get_header_value("Authorization") == "Bearer " + token;
  };
  auto guard = [authorized](auto handler) {
    return [authorized, handler](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req)) {
        send_json(res, 401, {{"error", "instructor token required"}});
        return;
      }
      try {
        handler(req, res);
      } catch (const std::invalid_argument& e) {
        send_json(res, 400, {{"error", e.what()}});
      } catch (const Json::exception& e) {
        send_json(res, 400, {{"error", e.what()}});
      } catch (const SessionError& e) {
        send_json(res, 404, {{"error", e.what()}});
      }
    };
  };

  http_->Get("/api/session", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, session_->describe());
  });
  http_->Get("/api/score", guard([this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, session_->live_score());
  }));
  http_->Get(R"(/api/view/([^/]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, session_->instructor_view(req.matches[1]));
  }));
  http_->Post("/api/inject", guard([this](const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body);
    const Intake in = session_->instructor_inject(body.at("team").get<std::string>(), inject_from_json(body.at("inject")));
    send_json(res, in.accepted ? 200 : 422, {{"accepted", in.accepted}, {"seq", in.seq}, {"reason", in.reason}});
  }));
  http_->Post("/api/commit", guard([this](const httplib::Request&, httplib::Response& res) {
    const Verdict v = session_->instructor_commit();
    send_json(res, v ? 200 : 409, {{"ok", v.allowed}, {"reason", v.reason}});
  }));
  http_->Post("/api/end", guard([this](const httplib::Request&, httplib::Response& res) {
    session_->end_execution();
    send_json(res, 200, {{"phase", std::string(to_string(session_->phase()))}});
  }));
  http_->Get(R"(/api/debrief/([^/]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
    if (session_->phase() != SessionPhase::Debrief) {
      send_json(res, 409, {{"error", "debrief is available after execution"}});
      return;
    }
    send_json(res, 200, session_->debrief(req.matches[1]));
  }));
}

void Server::start() {
  if (running_) return;
  setup_http();
  ws_port_ = opts_.ws_port;
  listen_fd_ = ws::listen_tcp(opts_.host, ws_port_);
  if (opts_.http_port == 0) {
    http_port_ = http_->bind_to_any_port(opts_.host);
  } else {
    http_port_ = http_->bind_to_port(opts_.host, opts_.http_port) ? opts_.http_port : -1;
  }
  if (http_port_ < 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("cannot bind instructor endpoint port");
  }
  running_ = true;
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  accept_thread_ = std::thread([this] { accept_loop(); });
  clock_thread_ = std::thread([this] { clock_loop(); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  http_->stop();
  if (http_thread_.joinable()) http_thread_.join();
  if (accept_thread_.joinable()) accept_thread_.join();
  if (clock_thread_.joinable()) clock_thread_.join();
  std::vector<std::thread> conns;
  {
    std::lock_guard lock(conn_mu_);
    conns.swap(connections_);
  }
  for (auto& t : conns) t.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

void Server::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    std::lock_guard lock(conn_mu_);
    connections_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void Server::serve_connection(int fd) {
  std::string leftover;
  if (!ws::server_handshake(fd, leftover)) {
    ::close(fd);
    return;
  }
  ws::Connection conn(fd, true);
  conn.prime(leftover);
  ClientEndpoint endpoint(session_);
  const int poll_ms = std::max(5, opts_.cadence_ms / 5);
  bool keep = true;
  try {
    while (running_ && conn.open() && keep) {
      if (auto text = conn.receive(poll_ms)) keep = endpoint.on_message(*text);
      for (const auto& out : endpoint.outgoing()) {
        if (!conn.send_text(out)) break;
      }
    }
  } catch (const ws::ProtocolError&) {
    conn.close(1002);
  }
  if (conn.open()) conn.close(keep ? 1001 : 1008);
  endpoint.on_close();
}

void Server::clock_loop() {
  using clock = std::chrono::steady_clock;
  std::optional<clock::time_point> started;
  long done = 0;
  const double ticks_per_real_second = session_->with_engine(session_->team_names().front(), [&](const Engine& e) {
    return opts_.speed * e.scenario().time_compression * 60.0 / e.world().tick_seconds;
  });
  while (running_) {
    std::this_thread::sleep_for(std::chrono::milliseconds(opts_.cadence_ms));
    if (!opts_.auto_clock || session_->phase() != SessionPhase::Execution) {
      session_->broadcast();
      continue;
    }
    if (!started) started = clock::now();
    const double real = std::chrono::duration<double>(clock::now() - *started).count();
    const long due = static_cast<long>(std::floor(real * ticks_per_real_second));
    if (due > done) {
      session_->advance(due - done);
      done = due;
    } else {
      session_->broadcast();
    }
  }
}

}  // namespace medevac
