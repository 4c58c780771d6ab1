#include "sknn/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

namespace sknn {

Stage stage_of_tag(uint8_t tag) {
  switch (tag) {
    case kTagHandshake: return Stage::Handshake;
    case kTagDist:
    case kTagFDist: return Stage::Dist;
    case kTagATopk:
    case kTagFATopk: return Stage::ATopk;
    case kTagTopk:
    case kTagFTopk: return Stage::Topk;
    case kTagOram:
    case kTagFDromInit:
    case kTagFDromRead: return Stage::Oram;
    case kTagB2a:
    case kTagFB2aMat: return Stage::B2a;
    default: return Stage::Other;
  }
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Handshake: return "handshake";
    case Stage::Dist: return "dist";
    case Stage::ATopk: return "atopk";
    case Stage::Topk: return "topk";
    case Stage::Oram: return "oram";
    case Stage::B2a: return "b2a";
    default: return "other";
  }
}

void Channel::send(uint8_t tag, const std::vector<uint8_t>& payload) {
  uint8_t header[5];
  const uint32_t len = static_cast<uint32_t>(payload.size());
  header[0] = static_cast<uint8_t>(len);
  header[1] = static_cast<uint8_t>(len >> 8);
  header[2] = static_cast<uint8_t>(len >> 16);
  header[3] = static_cast<uint8_t>(len >> 24);
  header[4] = tag;
  send_raw(header, 5);
  if (!payload.empty()) send_raw(payload.data(), payload.size());
  auto& c = counters_[static_cast<size_t>(stage_of_tag(tag))];
  c.bytes_sent += 5 + payload.size();
  c.frames_sent += 1;
  last_was_send_ = true;
}

Frame Channel::recv() {
  uint8_t header[5];
  recv_raw(header, 5);
  const uint32_t len = static_cast<uint32_t>(header[0]) | (static_cast<uint32_t>(header[1]) << 8) |
                       (static_cast<uint32_t>(header[2]) << 16) |
                       (static_cast<uint32_t>(header[3]) << 24);
  Frame f;
  f.tag = header[4];
  f.payload.resize(len);
  if (len > 0) recv_raw(f.payload.data(), len);
  auto& c = counters_[static_cast<size_t>(stage_of_tag(f.tag))];
  c.bytes_received += 5 + len;
  c.frames_received += 1;
  if (last_was_send_) c.rounds += 1;
  last_was_send_ = false;
  if (recv_hook_) recv_hook_(f);
  return f;
}

std::vector<uint8_t> Channel::expect(uint8_t tag) {
  Frame f = recv();
  if (f.tag != tag)
    throw std::runtime_error(std::string("transport: expected tag ") + stage_name(stage_of_tag(tag)) +
                             ", got " + stage_name(stage_of_tag(f.tag)));
  return std::move(f.payload);
}

StageCounters Channel::totals() const {
  StageCounters total;
  for (const auto& c : counters_) {
    total.bytes_sent += c.bytes_sent;
    total.bytes_received += c.bytes_received;
    total.frames_sent += c.frames_sent;
    total.frames_received += c.frames_received;
    total.rounds += c.rounds;
  }
  return total;
}

// ---------------------------------------------------------------------------
// In-process pipe

class MemPipe {
 public:
  void write(const uint8_t* data, size_t len) {
    std::lock_guard<std::mutex> lock(mu_);
    buf_.insert(buf_.end(), data, data + len);
    cv_.notify_all();
  }
  void read(uint8_t* data, size_t len) {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return buf_.size() - pos_ >= len; });
    std::memcpy(data, buf_.data() + pos_, len);
    pos_ += len;
    if (pos_ == buf_.size() || pos_ > (1u << 20)) {
      buf_.erase(buf_.begin(), buf_.begin() + static_cast<ptrdiff_t>(pos_));
      pos_ = 0;
    }
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<uint8_t> buf_;
  size_t pos_ = 0;
};

MemChannel::MemChannel(std::shared_ptr<MemPipe> out, std::shared_ptr<MemPipe> in)
    : out_(std::move(out)), in_(std::move(in)) {}

std::pair<std::unique_ptr<MemChannel>, std::unique_ptr<MemChannel>> MemChannel::make_pair() {
  auto ab = std::make_shared<MemPipe>();
  auto ba = std::make_shared<MemPipe>();
  std::unique_ptr<MemChannel> a(new MemChannel(ab, ba));
  std::unique_ptr<MemChannel> b(new MemChannel(ba, ab));
  return {std::move(a), std::move(b)};
}

void MemChannel::send_raw(const uint8_t* data, size_t len) { out_->write(data, len); }
void MemChannel::recv_raw(uint8_t* data, size_t len) { in_->read(data, len); }

// ---------------------------------------------------------------------------
// TCP

TcpChannel::~TcpChannel() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpChannel> TcpChannel::connect(const std::string& host, uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("transport: socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw std::runtime_error("transport: bad address " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw std::runtime_error("transport: connect to " + host + " failed");
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return std::unique_ptr<TcpChannel>(new TcpChannel(fd));
}

void TcpChannel::send_raw(const uint8_t* data, size_t len) {
  size_t off = 0;
  while (off < len) {
    const ssize_t n = ::send(fd_, data + off, len - off, 0);
    if (n <= 0) throw std::runtime_error("transport: send failed");
    off += static_cast<size_t>(n);
  }
}

void TcpChannel::recv_raw(uint8_t* data, size_t len) {
  size_t off = 0;
  while (off < len) {
    const ssize_t n = ::recv(fd_, data + off, len - off, 0);
    if (n <= 0) throw std::runtime_error("transport: connection closed");
    off += static_cast<size_t>(n);
  }
}

TcpListener::TcpListener(const std::string& host, uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw std::runtime_error("transport: socket() failed");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw std::runtime_error("transport: bad bind address " + host);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    throw std::runtime_error("transport: bind failed");
  if (::listen(fd_, 8) != 0) throw std::runtime_error("transport: listen failed");
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpChannel> TcpListener::accept() {
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw std::runtime_error("transport: accept failed");
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return std::unique_ptr<TcpChannel>(new TcpChannel(fd));
}

std::pair<std::string, uint16_t> parse_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw std::runtime_error("address must be host:port");
  std::string host = addr.substr(0, colon);
  if (host.empty()) host = "127.0.0.1";
  const int port = std::stoi(addr.substr(colon + 1));
  if (port <= 0 || port > 65535) throw std::runtime_error("bad port in address");
  return {host, static_cast<uint16_t>(port)};
}

}  // namespace sknn
