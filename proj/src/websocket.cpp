#include "medevac/websocket.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

namespace medevac::ws {
namespace {

constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

std::string base64(const unsigned char* data, std::size_t n) {
  std::string out(4 * ((n + 2) / 3), '\0');
  const int len = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data, static_cast<int>(n));
  out.resize(static_cast<std::size_t>(len));
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

bool wait_readable(int fd, int timeout_ms) {
  pollfd p{fd, POLLIN, 0};
  int r;
  do {
    r = ::poll(&p, 1, timeout_ms);
  } while (r < 0 && errno == EINTR);
  return r > 0;
}

/// Reads until the blank line ending an HTTP header block.
std::optional<std::string> read_head(int fd, int timeout_ms, std::string& rest) {
  std::string buf;
  char chunk[1024];
  while (buf.find("\r\n\r\n") == std::string::npos) {
    if (buf.size() > 16384 || !wait_readable(fd, timeout_ms)) return std::nullopt;
    const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) return std::nullopt;
    buf.append(chunk, static_cast<std::size_t>(n));
  }
  const auto end = buf.find("\r\n\r\n") + 4;
  rest = buf.substr(end);
  buf.resize(end);
  return buf;
}

struct Head {
  std::string start_line;
  std::vector<std::pair<std::string, std::string>> headers;

  std::optional<std::string> get(std::string_view name) const {
    for (const auto& [k, v] : headers) {
      if (k == name) return v;
    }
    return std::nullopt;
  }
};

Head parse_head(const std::string& text) {
  Head h;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    const auto nl = text.find("\r\n", pos);
    if (nl == std::string::npos || nl == pos) break;
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 2;
    if (first) {
      h.start_line = line;
      first = false;
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    h.headers.emplace_back(lower(trim(line.substr(0, colon))), trim(line.substr(colon + 1)));
  }
  return h;
}

bool header_has_token(const std::optional<std::string>& v, std::string_view token) {
  if (!v) return false;
  const std::string s = lower(*v);
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const std::string part = trim(std::string_view(s).substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    if (part == token) return true;
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return false;
}

bool send_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

std::string accept_key(std::string_view client_key) {
  std::string joined(client_key);
  joined += kGuid;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(joined.data()), joined.size(), digest);
  return base64(digest, sizeof digest);
}

std::string encode_frame(Opcode op, std::string_view payload, std::optional<std::uint32_t> mask) {
  std::string out;
  out += static_cast<char>(0x80 | static_cast<std::uint8_t>(op));
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  const std::size_t n = payload.size();
  if (n < 126) {
    out += static_cast<char>(mask_bit | n);
  } else if (n <= 0xFFFF) {
    out += static_cast<char>(mask_bit | 126);
    out += static_cast<char>((n >> 8) & 0xFF);
    out += static_cast<char>(n & 0xFF);
  } else {
    out += static_cast<char>(mask_bit | 127);
    for (int i = 7; i >= 0; --i) out += static_cast<char>((static_cast<std::uint64_t>(n) >> (8 * i)) & 0xFF);
  }
  if (!mask) {
    out.append(payload);
    return out;
  }
  unsigned char key[4] = {static_cast<unsigned char>(*mask >> 24), static_cast<unsigned char>(*mask >> 16),
                          static_cast<unsigned char>(*mask >> 8), static_cast<unsigned char>(*mask)};
  out.append(reinterpret_cast<const char*>(key), 4);
  for (std::size_t i = 0; i < n; ++i) out += static_cast<char>(payload[i] ^ key[i % 4]);
  return out;
}

std::optional<Message> FrameDecoder::next() {
  for (;;) {
    if (buf_.size() < 2) return std::nullopt;
    const auto b0 = static_cast<std::uint8_t>(buf_[0]);
    const auto b1 = static_cast<std::uint8_t>(buf_[1]);
    if (b0 & 0x70) throw ProtocolError("reserved bits set");
    const bool fin = b0 & 0x80;
    const auto op = static_cast<Opcode>(b0 & 0x0F);
    const bool masked = b1 & 0x80;
    if (masked != expect_masked_) throw ProtocolError(expect_masked_ ? "client frame not masked" : "server frame masked");
    std::uint64_t len = b1 & 0x7F;
    std::size_t at = 2;
    if (len == 126) {
      if (buf_.size() < 4) return std::nullopt;
      len = (static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[2])) << 8) | static_cast<std::uint8_t>(buf_[3]);
      at = 4;
    } else if (len == 127) {
      if (buf_.size() < 10) return std::nullopt;
      len = 0;
      for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<std::uint8_t>(buf_[2 + i]);
      at = 10;
    }
    if (len > kMaxMessageBytes) throw ProtocolError("frame too large");
    const bool control = static_cast<std::uint8_t>(op) & 0x8;
    if (control && (len > 125 || !fin)) throw ProtocolError("bad control frame");
    const std::size_t need = at + (masked ? 4 : 0) + static_cast<std::size_t>(len);
    if (buf_.size() < need) return std::nullopt;
    std::string payload = buf_.substr(at + (masked ? 4 : 0), static_cast<std::size_t>(len));
    if (masked) {
      for (std::size_t i = 0; i < payload.size(); ++i) payload[i] ^= buf_[at + (i % 4)];
    }
    buf_.erase(0, need);

    if (control) return Message{op, std::move(payload)};
    if (op == Opcode::Continuation) {
      if (!partial_op_) throw ProtocolError("continuation without a start frame");
      partial_ += payload;
    } else if (op == Opcode::Text || op == Opcode::Binary) {
      if (partial_op_) throw ProtocolError("new message before the previous one finished");
      partial_op_ = op;
      partial_ = std::move(payload);
    } else {
      throw ProtocolError("unknown opcode");
    }
    if (partial_.size() > kMaxMessageBytes) throw ProtocolError("message too large");
    if (fin) {
      Message m{*partial_op_, std::move(partial_)};
      partial_.clear();
      partial_op_.reset();
      return m;
    }
  }
}

Connection::Connection(int fd, bool server_side) : fd_(fd), server_side_(server_side), decoder_(server_side) {
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  if (!server_side_) RAND_bytes(reinterpret_cast<unsigned char*>(&mask_state_), sizeof mask_state_);
}

Connection::Connection(Connection&& o) noexcept { *this = std::move(o); }

Connection& Connection::operator=(Connection&& o) noexcept {
  if (this != &o) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(o.fd_, -1);
    server_side_ = o.server_side_;
    decoder_ = std::move(o.decoder_);
    mask_state_ = o.mask_state_;
  }
  return *this;
}

Connection::~Connection() {
  if (fd_ >= 0) ::close(fd_);
}

bool Connection::write_all(std::string_view bytes) {
  if (fd_ < 0) return false;
  if (!send_all(fd_, bytes)) {
    ::close(fd_);
    fd_ = -1;
    return false;
  }
  return true;
}

bool Connection::send_text(std::string_view text) {
  std::optional<std::uint32_t> mask;
  if (!server_side_) {
    mask_state_ = mask_state_ * 1664525u + 1013904223u;
    mask = mask_state_;
  }
  return write_all(encode_frame(Opcode::Text, text, mask));
}

std::optional<std::string> Connection::receive(int timeout_ms) {
  for (;;) {
    if (fd_ < 0) return std::nullopt;
    while (auto m = decoder_.next()) {
      switch (m->op) {
        case Opcode::Text:
        case Opcode::Binary:
          return std::move(m->payload);
        case Opcode::Ping: {
          std::optional<std::uint32_t> mask;
          if (!server_side_) mask = mask_state_ = mask_state_ * 1664525u + 1013904223u;
          write_all(encode_frame(Opcode::Pong, m->payload, mask));
          break;
        }
        case Opcode::Close:
          close(1000);
          return std::nullopt;
        default:
          break;
      }
    }
    if (!wait_readable(fd_, timeout_ms)) return std::nullopt;
    char chunk[8192];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n <= 0) {
      ::close(fd_);
      fd_ = -1;
      return std::nullopt;
    }
    decoder_.feed(std::string_view(chunk, static_cast<std::size_t>(n)));
  }
}

void Connection::close(std::uint16_t code) {
  if (fd_ < 0) return;
  const char body[2] = {static_cast<char>(code >> 8), static_cast<char>(code & 0xFF)};
  std::optional<std::uint32_t> mask;
  if (!server_side_) mask = mask_state_ = mask_state_ * 1664525u + 1013904223u;
  send_all(fd_, encode_frame(Opcode::Close, std::string_view(body, 2), mask));
  ::shutdown(fd_, SHUT_RDWR);
  ::close(fd_);
  fd_ = -1;
}

int listen_tcp(const std::string& host, int& port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw std::runtime_error("bad listen address " + host);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 64) < 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw std::runtime_error("listen on " + host + ":" + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  port = ntohs(addr.sin_port);
  return fd;
}

std::optional<std::string> server_handshake(int fd, std::string& leftover, int timeout_ms) {
  const auto text = read_head(fd, timeout_ms, leftover);
  auto refuse = [&](const std::string& why) -> std::optional<std::string> {
    send_all(fd, "HTTP/1.1 400 Bad Request\r\nContent-Type: text/plain\r\nConnection: close\r\nContent-Length: " +
                     std::to_string(why.size()) + "\r\n\r\n" + why);
    return std::nullopt;
  };
  if (!text) return refuse("incomplete request");
  const Head h = parse_head(*text);
  if (h.start_line.rfind("GET ", 0) != 0) return refuse("websocket upgrade needs GET");
  const auto sp = h.start_line.find(' ', 4);
  const std::string path = h.start_line.substr(4, sp == std::string::npos ? std::string::npos : sp - 4);
  if (!header_has_token(h.get("upgrade"), "websocket") || !header_has_token(h.get("connection"), "upgrade")) {
    return refuse("not a websocket upgrade");
  }
  if (h.get("sec-websocket-version").value_or("") != "13") return refuse("websocket version 13 required");
  const auto key = h.get("sec-websocket-key");
  if (!key || key->empty()) return refuse("missing Sec-WebSocket-Key");
  const std::string reply =
      "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Accept: " +
      accept_key(*key) + "\r\n\r\n";
  if (!send_all(fd, reply)) return std::nullopt;
  return path;
}

Connection connect(const std::string& host, int port, const std::string& path) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) {
    throw std::runtime_error("cannot resolve " + host);
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0 || ::connect(fd, res->ai_addr, res->ai_addrlen) < 0) {
    ::freeaddrinfo(res);
    if (fd >= 0) ::close(fd);
    throw std::runtime_error("cannot connect to " + host + ":" + std::to_string(port));
  }
  ::freeaddrinfo(res);
  unsigned char nonce[16];
  RAND_bytes(nonce, sizeof nonce);
  const std::string key = base64(nonce, sizeof nonce);
  const std::string req = "GET " + path + " HTTP/1.1\r\nHost: " + host + ":" + std::to_string(port) +
                          "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + key +
                          "\r\nSec-WebSocket-Version: 13\r\n\r\n";
  if (!send_all(fd, req)) {
    ::close(fd);
    throw std::runtime_error("handshake send failed");
  }
  std::string rest;
  const auto text = read_head(fd, 5000, rest);
  if (!text) {
    ::close(fd);
    throw std::runtime_error("no handshake reply");
  }
  const Head h = parse_head(*text);
  if (h.start_line.find(" 101") == std::string::npos || h.get("sec-websocket-accept").value_or("") != accept_key(key)) {
    ::close(fd);
    throw std::runtime_error("handshake refused: " + h.start_line);
  }
  Connection c(fd, false);
  c.prime(rest);
  return c;
}

}  // namespace medevac::ws
