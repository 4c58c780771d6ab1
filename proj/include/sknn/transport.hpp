#pragma once

#include <array>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace sknn {

// Frame format: 4-byte little-endian payload length, 1-byte stage tag,
// payload. One logical message per frame. Tags 0x80-0x8F are reserved for
// ideal-functionality calls travelling to the dealer endpoint.
enum : uint8_t {
  kTagHandshake = 0x01,
  kTagDist = 0x02,
  kTagATopk = 0x03,
  kTagTopk = 0x04,
  kTagOram = 0x05,
  kTagB2a = 0x06,
  kTagEnd = 0x7f,
  kTagFDist = 0x80,
  kTagFATopk = 0x81,
  kTagFTopk = 0x82,
  kTagFDromInit = 0x83,
  kTagFDromRead = 0x84,
  kTagFB2aMat = 0x85,
};

// Accounting stage a tag belongs to.
enum class Stage : uint8_t { Handshake = 0, Dist, ATopk, Topk, Oram, B2a, Other, kCount };
Stage stage_of_tag(uint8_t tag);
const char* stage_name(Stage s);

struct Frame {
  uint8_t tag = 0;
  std::vector<uint8_t> payload;
};

struct StageCounters {
  uint64_t bytes_sent = 0;
  uint64_t bytes_received = 0;
  uint64_t frames_sent = 0;
  uint64_t frames_received = 0;
  // A round is counted when the channel turns around: a receive that follows
  // sends (request/response = one round).
  uint64_t rounds = 0;
};

class Channel {
 public:
  virtual ~Channel() = default;

  void send(uint8_t tag, const std::vector<uint8_t>& payload);
  Frame recv();
  // Receive and check the expected tag.
  std::vector<uint8_t> expect(uint8_t tag);

  const StageCounters& counters(Stage s) const { return counters_[static_cast<size_t>(s)]; }
  StageCounters totals() const;

  // Test hook: observe every received frame.
  using RecvHook = std::function<void(const Frame&)>;
  void set_recv_hook(RecvHook hook) { recv_hook_ = std::move(hook); }

 protected:
  virtual void send_raw(const uint8_t* data, size_t len) = 0;
  virtual void recv_raw(uint8_t* data, size_t len) = 0;

 private:
  std::array<StageCounters, static_cast<size_t>(Stage::kCount)> counters_{};
  bool last_was_send_ = false;
  RecvHook recv_hook_;
};

// In-process channel pair backed by two byte queues.
class MemPipe;
class MemChannel : public Channel {
 public:
  // Returns the two connected endpoints.
  static std::pair<std::unique_ptr<MemChannel>, std::unique_ptr<MemChannel>> make_pair();

 protected:
  void send_raw(const uint8_t* data, size_t len) override;
  void recv_raw(uint8_t* data, size_t len) override;

 private:
  MemChannel(std::shared_ptr<MemPipe> out, std::shared_ptr<MemPipe> in);
  std::shared_ptr<MemPipe> out_, in_;
};

// Blocking TCP channel.
class TcpChannel : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {}
  ~TcpChannel() override;
  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  static std::unique_ptr<TcpChannel> connect(const std::string& host, uint16_t port);

 protected:
  void send_raw(const uint8_t* data, size_t len) override;
  void recv_raw(uint8_t* data, size_t len) override;

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  TcpListener(const std::string& host, uint16_t port);
  ~TcpListener();
  std::unique_ptr<TcpChannel> accept();

 private:
  int fd_ = -1;
};

// host:port parser; defaults to 127.0.0.1 when the host part is empty.
std::pair<std::string, uint16_t> parse_addr(const std::string& addr);

}  // namespace sknn
