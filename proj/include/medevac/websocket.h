#pragma once

// Minimal RFC 6455 endpoint: opening handshake, text frames, ping/pong and
// close. Enough for browser clients and the test harness; no extensions.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace medevac::ws {

enum class Opcode : std::uint8_t { Continuation = 0x0, Text = 0x1, Binary = 0x2, Close = 0x8, Ping = 0x9, Pong = 0xA };

inline constexpr std::size_t kMaxMessageBytes = 4 << 20;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sec-WebSocket-Accept for a client key.
std::string accept_key(std::string_view client_key);

/// One frame. Clients must mask; servers must not.
std::string encode_frame(Opcode op, std::string_view payload, std::optional<std::uint32_t> mask = std::nullopt);

struct Message {
  Opcode op = Opcode::Text;  // Text, Binary, Close, Ping or Pong
  std::string payload;
};

/// Incremental decoder that reassembles fragmented messages.
class FrameDecoder {
 public:
  /// `expect_masked`: true on the server side.
  explicit FrameDecoder(bool expect_masked) : expect_masked_(expect_masked) {}
  void feed(std::string_view bytes) { buf_.append(bytes); }
  /// Next complete message; throws ProtocolError on malformed input.
  std::optional<Message> next();

 private:
  bool expect_masked_;
  std::string buf_;
  std::string partial_;
  std::optional<Opcode> partial_op_;
};

/// A connected socket speaking WebSocket frames.
class Connection {
 public:
  Connection() = default;
  Connection(int fd, bool server_side);
  Connection(Connection&& o) noexcept;
  Connection& operator=(Connection&& o) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
  ~Connection();

  bool open() const { return fd_ >= 0; }
  /// Bytes read past the handshake that belong to the frame stream.
  void prime(std::string_view bytes) { decoder_.feed(bytes); }
  bool send_text(std::string_view text);
  /// Waits up to `timeout_ms` for a text message. Answers pings; returns
  /// nullopt on timeout. Throws ProtocolError, or returns nullopt with
  /// open() == false once the peer closes.
  std::optional<std::string> receive(int timeout_ms);
  void close(std::uint16_t code = 1000);

 private:
  bool write_all(std::string_view bytes);
  int fd_ = -1;
  bool server_side_ = true;
  FrameDecoder decoder_{true};
  std::uint32_t mask_state_ = 0x9e3779b9u;
};

/// Listening TCP socket; `port` 0 picks a free port, reported back through it.
int listen_tcp(const std::string& host, int& port);
/// Reads the HTTP upgrade request on an accepted socket and answers it.
/// Returns the request path, or nullopt after replying 400. Bytes that
/// arrived after the request land in `leftover`.
std::optional<std::string> server_handshake(int fd, std::string& leftover, int timeout_ms = 5000);
/// Connects and performs the client side of the handshake.
Connection connect(const std::string& host, int port, const std::string& path = "/");

}  // namespace medevac::ws
