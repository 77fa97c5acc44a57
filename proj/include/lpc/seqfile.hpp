#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpc/geometry.hpp"
#include "lpc/wire.hpp"

namespace lpc {

/// Frame-sequence container, all little-endian:
///   magic          8 bytes  "LPCSEQ01"
///   frame_count    u32
///   nominal rate   u64, micro-hertz
///   frames         frame_count message bodies (no magic), sensor_id = 0
///                  for merged data
inline constexpr std::array<std::uint8_t, 8> kSequenceMagic = {
    'L', 'P', 'C', 'S', 'E', 'Q', '0', '1'};

inline void write_sequence(std::ostream& out, const FrameSequence& seq,
                           std::uint32_t sensor_id = 0) {
  if (!(seq.nominal_rate_hz > 0.0)) {
    throw std::invalid_argument("sequence rate must be positive");
  }
  std::vector<std::uint8_t> buf;
  buf.insert(buf.end(), kSequenceMagic.begin(), kSequenceMagic.end());
  detail::put_u32(buf, static_cast<std::uint32_t>(seq.frames.size()));
  detail::put_u64(buf, static_cast<std::uint64_t>(
                           std::llround(seq.nominal_rate_hz * 1e6)));
  for (const PointCloudFrame& frame : seq.frames) {
    encode_message_body(buf, frame, sensor_id);
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("sequence write failed");
}

inline FrameSequence read_sequence(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSequenceMagic.size()) {
    throw DecodeError(DecodeErrorKind::Truncated, "file shorter than magic");
  }
  if (!std::equal(kSequenceMagic.begin(), kSequenceMagic.end(),
                  bytes.begin())) {
    throw DecodeError(DecodeErrorKind::BadMagic, "bad sequence file magic");
  }
  std::size_t at = kSequenceMagic.size();
  if (bytes.size() < at + 12) {
    throw DecodeError(DecodeErrorKind::Truncated, "sequence header truncated");
  }
  const std::uint32_t count = detail::get_u32(bytes, at);
  const std::uint64_t micro_hz = detail::get_u64(bytes, at + 4);
  at += 12;
  if (micro_hz == 0) {
    throw DecodeError(DecodeErrorKind::CountMismatch,
                      "sequence rate must be positive");
  }
  FrameSequence seq;
  seq.nominal_rate_hz = static_cast<double>(micro_hz) / 1e6;
  seq.frames.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    seq.frames.push_back(decode_message_body(bytes, at).frame);
  }
  if (at != bytes.size()) {
    throw DecodeError(DecodeErrorKind::CountMismatch,
                      "declared frame count leaves trailing bytes");
  }
  return seq;
}

inline void write_sequence_file(const std::filesystem::path& path,
                                const FrameSequence& seq,
                                std::uint32_t sensor_id = 0) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + path.string());
  write_sequence(out, seq, sensor_id);
}

inline FrameSequence read_sequence_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return read_sequence(bytes);
}

}  // namespace lpc
