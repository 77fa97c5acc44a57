#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lpc/geometry.hpp"
#include "lpc/wire.hpp"

namespace lpc {

class NetError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string errno_message(const std::string& prefix) {
  return prefix + ": " + std::strerror(errno);
}

}  // namespace detail

/// Connected TCP socket, move-only.
class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) : fd_(fd) {}
  TcpStream(TcpStream&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  TcpStream& operator=(TcpStream&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream() { close(); }

  bool open() const { return fd_ >= 0; }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  /// Keeps retrying the connect until it succeeds or retry_ms elapses, so
  /// a sensor may start slightly before its server.
  static TcpStream connect(const std::string& host, std::uint16_t port,
                           int retry_ms = 5000) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::milliseconds(retry_ms);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      throw NetError("bad address: " + host);
    }
    for (;;) {
      int fd = ::socket(AF_INET, SOCK_STREAM, 0);
      if (fd < 0) throw NetError(detail::errno_message("socket"));
      if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        return TcpStream(fd);
      }
      const int err = errno;
      ::close(fd);
      if (std::chrono::steady_clock::now() >= deadline) {
        errno = err;
        throw NetError(detail::errno_message("connect " + host + ":" +
                                             std::to_string(port)));
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }

  /// Makes blocked reads wake periodically so a reader loop can observe a
  /// stop flag.
  void set_stop_flag(const std::atomic<bool>* stop, int poll_ms = 200) {
    stop_ = stop;
    timeval tv{};
    tv.tv_sec = poll_ms / 1000;
    tv.tv_usec = (poll_ms % 1000) * 1000;
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  }

  void send_all(std::span<const std::uint8_t> bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
      const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent,
                               MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw NetError(detail::errno_message("send"));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  /// Fills the buffer completely. Returns false on a clean EOF before any
  /// byte; EOF mid-buffer is a truncated stream.
  bool recv_exact(std::span<std::uint8_t> bytes) {
    std::size_t got = 0;
    while (got < bytes.size()) {
      const ssize_t n = ::recv(fd_, bytes.data() + got, bytes.size() - got, 0);
      if (n == 0) {
        if (got == 0) return false;
        throw DecodeError(DecodeErrorKind::Truncated,
                          "connection closed mid-message");
      }
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
          if (stop_ != nullptr && stop_->load()) {
            throw NetError("receive aborted: server stopping");
          }
          continue;
        }
        throw NetError(detail::errno_message("recv"));
      }
      got += static_cast<std::size_t>(n);
    }
    return true;
  }

 private:
  int fd_ = -1;
  const std::atomic<bool>* stop_ = nullptr;
};

/// Listening TCP socket, move-only.
class TcpListener {
 public:
  TcpListener() = default;
  TcpListener(TcpListener&& other) noexcept
      : fd_(std::exchange(other.fd_, -1)), port_(other.port_) {}
  TcpListener& operator=(TcpListener&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = std::exchange(other.fd_, -1);
      port_ = other.port_;
    }
    return *this;
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener() { close(); }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  /// Binds and listens; port 0 picks an ephemeral port, readable via port().
  static TcpListener bind(const std::string& host, std::uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw NetError(detail::errno_message("socket"));
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd);
      throw NetError("bad address: " + host);
    }
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(fd, 16) != 0) {
      const std::string msg = detail::errno_message("bind/listen " + host);
      ::close(fd);
      throw NetError(msg);
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);
    TcpListener out;
    out.fd_ = fd;
    out.port_ = ntohs(bound.sin_port);
    return out;
  }

  std::uint16_t port() const { return port_; }

  /// Accepts one connection, waiting at most timeout_ms.
  std::optional<TcpStream> accept_for(int timeout_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc < 0) {
      if (errno == EINTR) return std::nullopt;
      throw NetError(detail::errno_message("poll"));
    }
    if (rc == 0) return std::nullopt;
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd < 0) throw NetError(detail::errno_message("accept"));
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return TcpStream(fd);
  }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

inline void send_frame_message(TcpStream& stream, const PointCloudFrame& frame,
                               std::uint32_t sensor_id) {
  stream.send_all(encode_message(frame, sensor_id));
}

/// Reads one length-delimited message off the stream. nullopt on a clean
/// end of stream.
inline std::optional<DecodedMessage> recv_frame_message(TcpStream& stream) {
  std::vector<std::uint8_t> buf(kFrameHeaderBytes);
  if (!stream.recv_exact(buf)) return std::nullopt;
  if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), buf.begin())) {
    throw DecodeError(DecodeErrorKind::BadMagic, "bad magic on stream");
  }
  const std::uint32_t count = detail::get_u32(buf, 24);
  buf.resize(kFrameHeaderBytes + static_cast<std::size_t>(count) * kPointBytes);
  if (count > 0) {
    if (!stream.recv_exact(std::span(buf).subspan(kFrameHeaderBytes))) {
      throw DecodeError(DecodeErrorKind::Truncated,
                        "connection closed mid-message");
    }
  }
  return decode_message(buf);
}

struct SensorConfig {
  std::uint32_t sensor_id = 1;
  RigidTransform extrinsic = RigidTransform::identity();
  RegionOfInterest roi = RegionOfInterest::keyboard_default();
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  bool realtime = false;  // pace frames at 1/rate_hz, else as fast as possible
  int connect_timeout_ms = 5000;
};

struct SensorRunStats {
  std::uint64_t frames_sent = 0;
  std::uint64_t points_sent = 0;
};

/// The sensor-device process: align to the world frame, crop, encode,
/// transmit in frame order over one connection.
inline SensorRunStats sensor_device_run(const FrameSequence& source,
                                        const SensorConfig& cfg) {
  if (!cfg.extrinsic.is_rigid()) {
    throw std::invalid_argument("sensor extrinsic is not rigid");
  }
  TcpStream stream =
      TcpStream::connect(cfg.host, cfg.port, cfg.connect_timeout_ms);
  SensorRunStats stats;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < source.frames.size(); ++i) {
    if (cfg.realtime) {
      const auto due =
          start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(
                          static_cast<double>(i) / source.nominal_rate_hz));
      std::this_thread::sleep_until(due);
    }
    const PointCloudFrame out =
        filter_roi(apply_transform(source.frames[i], cfg.extrinsic), cfg.roi);
    send_frame_message(stream, out, cfg.sensor_id);
    ++stats.frames_sent;
    stats.points_sent += out.points.size();
  }
  return stats;
}

/// One sensor's contribution to a frame index.
struct SensorFrame {
  std::uint32_t sensor_id = 0;
  PointCloudFrame frame;
};

/// Concatenates per-sensor frames for one index, in ascending sensor_id
/// order. Timestamp is the earliest input timestamp.
inline PointCloudFrame merge(std::span<const SensorFrame> parts) {
  if (parts.empty()) throw std::invalid_argument("merge: no frames");
  std::vector<const SensorFrame*> ordered;
  ordered.reserve(parts.size());
  for (const SensorFrame& part : parts) {
    if (part.frame.frame_index != parts.front().frame.frame_index) {
      throw std::invalid_argument("merge: mismatched frame_index");
    }
    ordered.push_back(&part);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const SensorFrame* a, const SensorFrame* b) {
              return a->sensor_id < b->sensor_id;
            });
  PointCloudFrame out;
  out.frame_index = parts.front().frame.frame_index;
  out.timestamp_micros = parts.front().frame.timestamp_micros;
  std::size_t total = 0;
  for (const SensorFrame* part : ordered) {
    out.timestamp_micros =
        std::min(out.timestamp_micros, part->frame.timestamp_micros);
    total += part->frame.points.size();
  }
  out.points.reserve(total);
  for (const SensorFrame* part : ordered) {
    out.points.insert(out.points.end(), part->frame.points.begin(),
                      part->frame.points.end());
  }
  return out;
}

struct MergePolicy {
  std::set<std::uint32_t> expected_sensor_ids;
  int frame_timeout_ms = 500;     // partial emit this long after first arrival
  int accept_timeout_ms = 60000;  // give up if no sensor ever connects
};

struct EdgeServerResult {
  FrameSequence merged;
  std::uint64_t complete_frames = 0;
  std::uint64_t partial_frames = 0;
  std::uint64_t omitted_parts = 0;  // missing (sensor, frame) pairs
  std::uint64_t duplicates_discarded = 0;
  std::uint64_t late_discarded = 0;  // arrived after their index was emitted
  std::uint64_t unexpected_messages = 0;
  std::uint64_t stream_errors = 0;
};

namespace detail {

struct PendingFrame {
  std::map<std::uint32_t, PointCloudFrame> parts;  // keyed by sensor id
  std::chrono::steady_clock::time_point first_arrival;
};

struct AssemblerState {
  std::mutex mu;
  std::condition_variable cv;
  std::map<std::uint64_t, PendingFrame> pending;
  std::set<std::uint32_t> registered;  // expected sensors seen so far
  int open_streams = 0;
  bool accept_done = false;
  std::uint64_t version = 0;  // bumped on every event, for grace waits
  std::optional<std::uint64_t> last_emitted;
  std::atomic<bool> stop{false};
  EdgeServerResult result;

  void bump() {
    ++version;
    cv.notify_all();
  }
};

inline void assembler_deliver(AssemblerState& st, std::uint32_t sensor_id,
                              PointCloudFrame frame) {
  const std::uint64_t idx = frame.frame_index;
  if (st.last_emitted.has_value() && idx <= *st.last_emitted) {
    ++st.result.late_discarded;
    return;
  }
  auto [it, created] = st.pending.try_emplace(idx);
  if (created) it->second.first_arrival = std::chrono::steady_clock::now();
  if (!it->second.parts.emplace(sensor_id, std::move(frame)).second) {
    ++st.result.duplicates_discarded;
  }
}

/// Reads one sensor's stream. The first message claims the sensor slot;
/// streams for unknown or already-claimed sensors are dropped.
inline void assembler_reader(AssemblerState& st, const MergePolicy& policy,
                             TcpStream stream) {
  stream.set_stop_flag(&st.stop);
  std::uint32_t claimed = 0;
  bool registered = false;
  try {
    for (;;) {
      auto msg = recv_frame_message(stream);
      if (!msg.has_value()) break;
      std::lock_guard lock(st.mu);
      if (!registered) {
        if (!policy.expected_sensor_ids.contains(msg->sensor_id) ||
            st.registered.contains(msg->sensor_id)) {
          ++st.result.unexpected_messages;
          st.bump();
          return;
        }
        claimed = msg->sensor_id;
        registered = true;
        st.registered.insert(claimed);
        ++st.open_streams;
      }
      if (msg->sensor_id != claimed) {
        ++st.result.unexpected_messages;
      } else {
        assembler_deliver(st, claimed, std::move(msg->frame));
      }
      st.bump();
    }
  } catch (const std::exception&) {
    std::lock_guard lock(st.mu);
    ++st.result.stream_errors;
  }
  std::lock_guard lock(st.mu);
  if (registered) --st.open_streams;
  st.bump();
}

}  // namespace detail

/// The 1st-edge-server process: accepts one connection per expected
/// sensor, assembles messages by frame_index, and emits each index merged
/// once every expected sensor delivered it or its timeout expired.
/// Emission order is ascending frame_index. Returns once every connected
/// stream has ended and nothing more can arrive.
inline EdgeServerResult edge_server_run(TcpListener& listener,
                                        const MergePolicy& policy,
                                        double output_rate_hz = 9.0) {
  if (policy.expected_sensor_ids.empty()) {
    throw std::invalid_argument("merge policy expects no sensors");
  }
  auto st = std::make_shared<detail::AssemblerState>();
  st->result.merged.nominal_rate_hz = output_rate_hz;

  std::vector<std::thread> readers;
  std::mutex readers_mu;
  std::thread accept_thread([&] {
    while (!st->stop.load()) {
      {
        std::lock_guard lock(st->mu);
        if (st->registered.size() == policy.expected_sensor_ids.size()) break;
      }
      std::optional<TcpStream> conn;
      try {
        conn = listener.accept_for(100);
      } catch (const std::exception&) {
        break;
      }
      if (conn.has_value()) {
        std::lock_guard lock(readers_mu);
        readers.emplace_back(detail::assembler_reader, std::ref(*st),
                             std::cref(policy), std::move(*conn));
      }
    }
    std::lock_guard lock(st->mu);
    st->accept_done = true;
    st->bump();
  });

  const auto join_all = [&] {
    st->stop.store(true);
    st->cv.notify_all();
    accept_thread.join();
    std::lock_guard lock(readers_mu);
    for (std::thread& t : readers) t.join();
  };

  const auto grace = std::chrono::milliseconds(policy.frame_timeout_ms);
  const auto accept_deadline = std::chrono::steady_clock::now() +
                               std::chrono::milliseconds(policy.accept_timeout_ms);
  try {
    std::unique_lock lock(st->mu);
    for (;;) {
      const bool all_registered =
          st->registered.size() == policy.expected_sensor_ids.size();
      if (st->pending.empty()) {
        if (st->open_streams == 0 && !st->registered.empty()) {
          if (all_registered) break;  // every expected stream fully drained
          // Some expected sensor never showed; give stragglers one timeout.
          const std::uint64_t seen = st->version;
          const bool changed =
              st->cv.wait_for(lock, grace, [&] { return st->version != seen; });
          if (!changed) break;
          continue;
        }
        if (st->registered.empty()) {
          if (std::chrono::steady_clock::now() >= accept_deadline) {
            throw NetError("no sensor connected before the accept timeout");
          }
          st->cv.wait_until(lock, accept_deadline);
          continue;
        }
        st->cv.wait(lock);
        continue;
      }

      const auto it = st->pending.begin();
      const bool complete =
          it->second.parts.size() == policy.expected_sensor_ids.size();
      const bool starved = st->open_streams == 0 && all_registered;
      const auto deadline = it->second.first_arrival +
                            std::chrono::milliseconds(policy.frame_timeout_ms);
      if (complete || starved ||
          std::chrono::steady_clock::now() >= deadline) {
        std::vector<SensorFrame> parts;
        parts.reserve(it->second.parts.size());
        for (auto& [sid, frame] : it->second.parts) {
          parts.push_back({sid, std::move(frame)});
        }
        st->result.merged.frames.push_back(merge(parts));
        st->last_emitted = it->first;
        if (parts.size() == policy.expected_sensor_ids.size()) {
          ++st->result.complete_frames;
        } else {
          ++st->result.partial_frames;
          st->result.omitted_parts +=
              policy.expected_sensor_ids.size() - parts.size();
        }
        st->pending.erase(it);
        continue;
      }
      st->cv.wait_until(lock, deadline);
    }
  } catch (...) {
    join_all();
    throw;
  }
  join_all();
  return st->result;
}

}  // namespace lpc
