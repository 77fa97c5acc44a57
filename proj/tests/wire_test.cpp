#include "lpc/wire.hpp"

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "lpc/rng.hpp"
#include "lpc/seqfile.hpp"

namespace {

using lpc::DecodeError;
using lpc::DecodeErrorKind;
using lpc::PointCloudFrame;

PointCloudFrame random_frame(lpc::Rng& rng, std::size_t count) {
  PointCloudFrame frame;
  frame.frame_index = rng.next_u64() % 100000;
  frame.timestamp_micros = rng.next_u64() % 100000000;
  for (std::size_t i = 0; i < count; ++i) {
    frame.points.push_back({rng.next_in(-10.0, 10.0), rng.next_in(-10.0, 10.0),
                            rng.next_in(-10.0, 10.0)});
  }
  return frame;
}

DecodeErrorKind decode_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    lpc::decode_message(bytes);
  } catch (const DecodeError& e) {
    return e.kind();
  }
  throw std::logic_error("expected decode to fail");
}

TEST(Codec, EmptyFrameIsHeaderOnly) {
  PointCloudFrame frame;
  frame.frame_index = 0;
  frame.timestamp_micros = 0;
  const auto bytes = lpc::encode_message(frame, 7);
  EXPECT_EQ(bytes.size(), 28u);
}

TEST(Codec, TwoPointMessageLength) {
  PointCloudFrame frame;
  frame.points = {{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(lpc::encode_message(frame, 1).size(), 52u);
}

TEST(Codec, LittleEndianLayout) {
  PointCloudFrame frame;
  frame.frame_index = 0x0102030405060708ull;
  frame.timestamp_micros = 1;
  frame.points = {{1.0, 0.0, 0.0}};
  const auto bytes = lpc::encode_message(frame, 0xAABBCCDD);
  EXPECT_EQ(bytes[0], 'L');
  EXPECT_EQ(bytes[1], 'P');
  EXPECT_EQ(bytes[2], 'C');
  EXPECT_EQ(bytes[3], '1');
  EXPECT_EQ(bytes[4], 0xDD);  // sensor id, little endian
  EXPECT_EQ(bytes[7], 0xAA);
  EXPECT_EQ(bytes[8], 0x08);  // frame index low byte
  EXPECT_EQ(bytes[15], 0x01);
  EXPECT_EQ(bytes[24], 1);  // point count
  // f32 1.0 = 0x3F800000
  EXPECT_EQ(bytes[28], 0x00);
  EXPECT_EQ(bytes[31], 0x3F);
}

TEST(Codec, RoundTripsAtF32Precision) {
  lpc::Rng rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    const auto frame = random_frame(rng, rng.next_u64() % 40);
    const std::uint32_t sensor_id = static_cast<std::uint32_t>(rng.next_u64());
    const auto decoded = lpc::decode_message(lpc::encode_message(frame, sensor_id));
    EXPECT_EQ(decoded.sensor_id, sensor_id);
    EXPECT_EQ(decoded.frame, lpc::narrow_frame_to_f32(frame));
  }
}

TEST(Codec, EmptyFrameRoundTrips) {
  PointCloudFrame frame;
  frame.frame_index = 9;
  frame.timestamp_micros = 11;
  const auto decoded = lpc::decode_message(lpc::encode_message(frame, 3));
  EXPECT_EQ(decoded.frame, frame);
  EXPECT_EQ(decoded.sensor_id, 3u);
}

TEST(Codec, CorruptedMagicRejected) {
  lpc::Rng rng(72);
  auto bytes = lpc::encode_message(random_frame(rng, 3), 1);
  bytes[0] ^= 0xFF;
  EXPECT_EQ(decode_kind(bytes), DecodeErrorKind::BadMagic);
}

TEST(Codec, TruncationRejected) {
  lpc::Rng rng(73);
  auto bytes = lpc::encode_message(random_frame(rng, 3), 1);
  bytes.pop_back();
  EXPECT_EQ(decode_kind(bytes), DecodeErrorKind::Truncated);

  std::vector<std::uint8_t> header_only(bytes.begin(), bytes.begin() + 10);
  EXPECT_EQ(decode_kind(header_only), DecodeErrorKind::Truncated);
}

TEST(Codec, TrailingBytesRejected) {
  lpc::Rng rng(74);
  auto bytes = lpc::encode_message(random_frame(rng, 3), 1);
  bytes.push_back(0);
  EXPECT_EQ(decode_kind(bytes), DecodeErrorKind::CountMismatch);
}

TEST(Codec, ErrorKindsAreDistinct) {
  EXPECT_NE(DecodeErrorKind::BadMagic, DecodeErrorKind::Truncated);
  EXPECT_NE(DecodeErrorKind::Truncated, DecodeErrorKind::CountMismatch);
  EXPECT_NE(DecodeErrorKind::BadMagic, DecodeErrorKind::CountMismatch);
}

TEST(SequenceFile, RoundTripsInMemory) {
  lpc::Rng rng(75);
  lpc::FrameSequence seq;
  seq.nominal_rate_hz = 9.0;
  for (std::size_t i = 0; i < 8; ++i) {
    auto frame = random_frame(rng, 1 + rng.next_u64() % 20);
    frame.frame_index = i;
    seq.frames.push_back(std::move(frame));
  }
  std::ostringstream out;
  lpc::write_sequence(out, seq);
  const std::string text = out.str();
  const std::vector<std::uint8_t> bytes(text.begin(), text.end());
  const auto back = lpc::read_sequence(bytes);
  EXPECT_DOUBLE_EQ(back.nominal_rate_hz, 9.0);
  ASSERT_EQ(back.frames.size(), seq.frames.size());
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    EXPECT_EQ(back.frames[i], lpc::narrow_frame_to_f32(seq.frames[i]));
  }
}

TEST(SequenceFile, HeaderValidation) {
  lpc::FrameSequence seq;
  seq.frames.push_back({0, 0, {{1, 2, 3}}});
  std::ostringstream out;
  lpc::write_sequence(out, seq);
  const std::string text = out.str();
  std::vector<std::uint8_t> bytes(text.begin(), text.end());

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(
      {
        try {
          lpc::read_sequence(bad_magic);
        } catch (const DecodeError& e) {
          EXPECT_EQ(e.kind(), DecodeErrorKind::BadMagic);
          throw;
        }
      },
      DecodeError);

  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW(
      {
        try {
          lpc::read_sequence(truncated);
        } catch (const DecodeError& e) {
          EXPECT_EQ(e.kind(), DecodeErrorKind::Truncated);
          throw;
        }
      },
      DecodeError);

  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(
      {
        try {
          lpc::read_sequence(trailing);
        } catch (const DecodeError& e) {
          EXPECT_EQ(e.kind(), DecodeErrorKind::CountMismatch);
          throw;
        }
      },
      DecodeError);
}

TEST(SequenceFile, RoundTripsOnDisk) {
  lpc::Rng rng(76);
  lpc::FrameSequence seq;
  seq.nominal_rate_hz = 12.5;
  for (std::size_t i = 0; i < 4; ++i) {
    auto frame = random_frame(rng, 5);
    frame.frame_index = i;
    seq.frames.push_back(std::move(frame));
  }
  const auto path = std::filesystem::temp_directory_path() /
                    ("lpc_wiretest_" + std::to_string(::getpid()) + ".lpcseq");
  lpc::write_sequence_file(path, seq);
  const auto back = lpc::read_sequence_file(path);
  std::filesystem::remove(path);
  EXPECT_DOUBLE_EQ(back.nominal_rate_hz, 12.5);
  ASSERT_EQ(back.frames.size(), 4u);
  EXPECT_EQ(back.frames[2], lpc::narrow_frame_to_f32(seq.frames[2]));
}

TEST(SequenceFile, RejectsMissingFile) {
  EXPECT_THROW(lpc::read_sequence_file("/nonexistent/nope.lpcseq"),
               std::runtime_error);
}

}  // namespace
