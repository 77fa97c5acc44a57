#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpc/geometry.hpp"

namespace lpc {

/// Wire layout of one frame message, all little-endian:
///   magic            4 bytes  "LPC1"
///   sensor_id        u32
///   frame_index      u64
///   timestamp_micros u64
///   point_count      u32
///   payload          point_count * 3 * f32  (x, y, z meters)
inline constexpr std::array<std::uint8_t, 4> kFrameMagic = {'L', 'P', 'C', '1'};
inline constexpr std::size_t kFrameHeaderBytes = 28;
inline constexpr std::size_t kPointBytes = 12;

enum class DecodeErrorKind {
  BadMagic,
  Truncated,      // fewer bytes than the declared sizes require
  CountMismatch,  // declared counts leave bytes over
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  DecodeErrorKind kind() const { return kind_; }

 private:
  DecodeErrorKind kind_;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

inline void put_f32(std::vector<std::uint8_t>& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  return static_cast<std::uint32_t>(in[at]) |
         static_cast<std::uint32_t>(in[at + 1]) << 8 |
         static_cast<std::uint32_t>(in[at + 2]) << 16 |
         static_cast<std::uint32_t>(in[at + 3]) << 24;
}

inline std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = v << 8 | in[at + static_cast<std::size_t>(i)];
  }
  return v;
}

inline float get_f32(std::span<const std::uint8_t> in, std::size_t at) {
  return std::bit_cast<float>(get_u32(in, at));
}

}  // namespace detail

/// Coordinates travel as f32; this is the exact narrowing the codec applies.
inline Point3 narrow_to_f32(const Point3& p) {
  return {static_cast<double>(static_cast<float>(p.x)),
          static_cast<double>(static_cast<float>(p.y)),
          static_cast<double>(static_cast<float>(p.z))};
}

inline PointCloudFrame narrow_frame_to_f32(const PointCloudFrame& frame) {
  PointCloudFrame out;
  out.frame_index = frame.frame_index;
  out.timestamp_micros = frame.timestamp_micros;
  out.points.reserve(frame.points.size());
  for (const Point3& p : frame.points) out.points.push_back(narrow_to_f32(p));
  return out;
}

/// Body = everything after the magic. The sequence-file container stores
/// frames in this form.
inline void encode_message_body(std::vector<std::uint8_t>& out,
                                const PointCloudFrame& frame,
                                std::uint32_t sensor_id) {
  if (frame.points.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::length_error("frame exceeds 2^32 - 1 points");
  }
  detail::put_u32(out, sensor_id);
  detail::put_u64(out, frame.frame_index);
  detail::put_u64(out, frame.timestamp_micros);
  detail::put_u32(out, static_cast<std::uint32_t>(frame.points.size()));
  for (const Point3& p : frame.points) {
    detail::put_f32(out, static_cast<float>(p.x));
    detail::put_f32(out, static_cast<float>(p.y));
    detail::put_f32(out, static_cast<float>(p.z));
  }
}

inline std::vector<std::uint8_t> encode_message(const PointCloudFrame& frame,
                                                std::uint32_t sensor_id) {
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderBytes + frame.points.size() * kPointBytes);
  out.insert(out.end(), kFrameMagic.begin(), kFrameMagic.end());
  encode_message_body(out, frame, sensor_id);
  return out;
}

struct DecodedMessage {
  PointCloudFrame frame;
  std::uint32_t sensor_id = 0;
};

/// Body decoder shared by the wire codec and the sequence-file reader.
/// `at` advances past the consumed bytes.
inline DecodedMessage decode_message_body(std::span<const std::uint8_t> bytes,
                                          std::size_t& at) {
  if (bytes.size() < at + kFrameHeaderBytes - kFrameMagic.size()) {
    throw DecodeError(DecodeErrorKind::Truncated, "message header truncated");
  }
  DecodedMessage msg;
  msg.sensor_id = detail::get_u32(bytes, at);
  msg.frame.frame_index = detail::get_u64(bytes, at + 4);
  msg.frame.timestamp_micros = detail::get_u64(bytes, at + 12);
  const std::uint32_t count = detail::get_u32(bytes, at + 20);
  at += 24;
  if (bytes.size() - at < static_cast<std::size_t>(count) * kPointBytes) {
    throw DecodeError(DecodeErrorKind::Truncated,
                      "payload shorter than declared point count");
  }
  msg.frame.points.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t base = at + static_cast<std::size_t>(i) * kPointBytes;
    msg.frame.points.push_back(
        {static_cast<double>(detail::get_f32(bytes, base)),
         static_cast<double>(detail::get_f32(bytes, base + 4)),
         static_cast<double>(detail::get_f32(bytes, base + 8))});
  }
  at += static_cast<std::size_t>(count) * kPointBytes;
  return msg;
}

/// Decodes one standalone message. The buffer must hold exactly one
/// message: bad magic, missing bytes and leftover bytes are distinct errors.
inline DecodedMessage decode_message(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameMagic.size()) {
    throw DecodeError(DecodeErrorKind::Truncated, "message shorter than magic");
  }
  if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), bytes.begin())) {
    throw DecodeError(DecodeErrorKind::BadMagic, "bad frame message magic");
  }
  std::size_t at = kFrameMagic.size();
  DecodedMessage msg = decode_message_body(bytes, at);
  if (at != bytes.size()) {
    throw DecodeError(DecodeErrorKind::CountMismatch,
                      "declared point count leaves trailing bytes");
  }
  return msg;
}

}  // namespace lpc
