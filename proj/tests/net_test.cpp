#include "lpc/net.hpp"

#include <algorithm>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "lpc/rng.hpp"
#include "lpc/synth.hpp"

namespace {

using lpc::PointCloudFrame;
using lpc::SensorFrame;

PointCloudFrame frame_with(std::uint64_t index, std::uint64_t ts,
                           std::size_t count, double base) {
  PointCloudFrame frame;
  frame.frame_index = index;
  frame.timestamp_micros = ts;
  for (std::size_t i = 0; i < count; ++i) {
    const double v = base + static_cast<double>(i);
    frame.points.push_back({v, v + 0.5, v - 0.5});
  }
  return frame;
}

TEST(Merge, ConcatenatesInSensorIdOrder) {
  const std::vector<SensorFrame> parts{
      {2, frame_with(4, 200, 5, 100.0)},
      {1, frame_with(4, 300, 3, 0.0)},
  };
  const auto merged = lpc::merge(parts);
  ASSERT_EQ(merged.points.size(), 8u);
  EXPECT_EQ(merged.frame_index, 4u);
  EXPECT_EQ(merged.timestamp_micros, 200u);  // earliest input stamp
  EXPECT_EQ(merged.points[0].x, 0.0);        // sensor 1 first
  EXPECT_EQ(merged.points[3].x, 100.0);
}

TEST(Merge, SingleSensorIsIdentity) {
  const std::vector<SensorFrame> parts{{9, frame_with(7, 70, 4, 1.0)}};
  const auto merged = lpc::merge(parts);
  EXPECT_EQ(merged, parts[0].frame);
}

TEST(Merge, RejectsMismatchedIndices) {
  const std::vector<SensorFrame> parts{
      {1, frame_with(4, 0, 1, 0.0)},
      {2, frame_with(5, 0, 1, 0.0)},
  };
  EXPECT_THROW(lpc::merge(parts), std::invalid_argument);
  EXPECT_THROW(lpc::merge({}), std::invalid_argument);
}

TEST(Merge, RandomPartitionPreservesMultiset) {
  lpc::Rng rng(81);
  std::vector<lpc::Point3> all;
  for (int i = 0; i < 200; ++i) {
    all.push_back(
        {rng.next_in(-1, 1), rng.next_in(-1, 1), rng.next_in(-1, 1)});
  }
  std::vector<SensorFrame> parts(3);
  for (std::size_t s = 0; s < 3; ++s) {
    parts[s].sensor_id = static_cast<std::uint32_t>(10 - s);  // unsorted ids
    parts[s].frame.frame_index = 42;
    parts[s].frame.timestamp_micros = 1000 + s;
  }
  for (const auto& p : all) {
    parts[rng.next_u64() % 3].frame.points.push_back(p);
  }
  auto merged = lpc::merge(parts);
  ASSERT_EQ(merged.points.size(), all.size());

  const auto lt = [](const lpc::Point3& a, const lpc::Point3& b) {
    return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z);
  };
  std::sort(all.begin(), all.end(), lt);
  std::sort(merged.points.begin(), merged.points.end(), lt);
  EXPECT_EQ(merged.points, all);
}

// ---------------------------------------------------------------------------
// Loopback runs.

struct ServerHarness {
  lpc::TcpListener listener;
  lpc::MergePolicy policy;
  std::uint16_t port = 0;
  lpc::EdgeServerResult result;
  std::thread thread;

  explicit ServerHarness(std::set<std::uint32_t> expected, int timeout_ms = 500,
                         double rate_hz = 9.0) {
    listener = lpc::TcpListener::bind("127.0.0.1", 0);
    port = listener.port();
    policy.expected_sensor_ids = std::move(expected);
    policy.frame_timeout_ms = timeout_ms;
    thread = std::thread(
        [this, rate_hz] { result = lpc::edge_server_run(listener, policy, rate_hz); });
  }

  void join() { thread.join(); }
};

lpc::FrameSequence small_scene(std::uint64_t seed, int frames) {
  lpc::SynthConfig cfg;
  cfg.seed = seed;
  cfg.frame_count = frames;
  cfg.hand_points = 30;
  cfg.background_points = 10;
  return lpc::generate_sequence(cfg);
}

TEST(Loopback, SingleSensorPassThrough) {
  const auto source = small_scene(11, 20);
  ServerHarness server({7});

  lpc::SensorConfig cfg;
  cfg.sensor_id = 7;
  cfg.port = server.port;
  const auto stats = lpc::sensor_device_run(source, cfg);
  server.join();

  EXPECT_EQ(stats.frames_sent, 20u);
  EXPECT_EQ(server.result.complete_frames, 20u);
  EXPECT_EQ(server.result.partial_frames, 0u);
  ASSERT_EQ(server.result.merged.frames.size(), 20u);
  // Identity extrinsic and the default all-inclusive crop: payload points
  // equal the source at f32 precision.
  for (std::size_t i = 0; i < 20; ++i) {
    const auto expected = lpc::narrow_frame_to_f32(
        lpc::filter_roi(source.frames[i], cfg.roi));
    EXPECT_EQ(server.result.merged.frames[i], expected);
  }
}

TEST(Loopback, RoiExcludingEverythingSendsHeadersOnly) {
  const auto source = small_scene(12, 10);
  ServerHarness server({1});

  lpc::SensorConfig cfg;
  cfg.sensor_id = 1;
  cfg.port = server.port;
  cfg.roi = {{5.0, 5.0, 5.0}, {6.0, 6.0, 6.0}};  // nothing lives here
  const auto stats = lpc::sensor_device_run(source, cfg);
  server.join();

  EXPECT_EQ(stats.frames_sent, 10u);
  EXPECT_EQ(stats.points_sent, 0u);
  ASSERT_EQ(server.result.merged.frames.size(), 10u);
  for (const auto& frame : server.result.merged.frames) {
    EXPECT_TRUE(frame.points.empty());
  }
}

TEST(Loopback, TwoSensorsMergeConservation) {
  const auto source_a = small_scene(13, 60);
  const auto source_b = small_scene(14, 60);
  ServerHarness server({1, 2});

  auto run = [port = server.port](const lpc::FrameSequence& seq,
                                  std::uint32_t id) {
    lpc::SensorConfig cfg;
    cfg.sensor_id = id;
    cfg.port = port;
    lpc::sensor_device_run(seq, cfg);
  };
  std::thread ta(run, std::cref(source_a), 1);
  std::thread tb(run, std::cref(source_b), 2);
  ta.join();
  tb.join();
  server.join();

  EXPECT_EQ(server.result.complete_frames, 60u);
  EXPECT_EQ(server.result.partial_frames, 0u);
  EXPECT_EQ(server.result.duplicates_discarded, 0u);
  ASSERT_EQ(server.result.merged.frames.size(), 60u);

  const auto roi = lpc::RegionOfInterest::keyboard_default();
  for (std::size_t i = 0; i < 60; ++i) {
    const auto& merged = server.result.merged.frames[i];
    EXPECT_EQ(merged.frame_index, i);
    const std::size_t expected =
        lpc::filter_roi(source_a.frames[i], roi).points.size() +
        lpc::filter_roi(source_b.frames[i], roi).points.size();
    EXPECT_EQ(merged.points.size(), expected);
    if (i > 0) {
      EXPECT_GT(merged.frame_index,
                server.result.merged.frames[i - 1].frame_index);
    }
  }
}

TEST(Loopback, SilentSensorYieldsPartialFrames) {
  const auto source = small_scene(15, 5);
  ServerHarness server({1, 2}, /*timeout_ms=*/100);

  lpc::SensorConfig cfg;
  cfg.sensor_id = 1;
  cfg.port = server.port;
  lpc::sensor_device_run(source, cfg);
  server.join();  // sensor 2 never connects

  EXPECT_EQ(server.result.partial_frames, 5u);
  EXPECT_EQ(server.result.complete_frames, 0u);
  EXPECT_EQ(server.result.omitted_parts, 5u);
  EXPECT_EQ(server.result.merged.frames.size(), 5u);
}

TEST(Loopback, DuplicateFrameDiscarded) {
  ServerHarness server({1, 2}, /*timeout_ms=*/2000);

  auto stream_a = lpc::TcpStream::connect("127.0.0.1", server.port);
  const auto frame = frame_with(0, 10, 3, 0.0);
  lpc::send_frame_message(stream_a, frame, 1);
  lpc::send_frame_message(stream_a, frame, 1);  // duplicate (sensor 1, frame 0)
  // Let the assembler consume both sensor-1 messages before frame 0 can
  // complete, so the copy is counted as a duplicate rather than late.
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  auto stream_b = lpc::TcpStream::connect("127.0.0.1", server.port);
  lpc::send_frame_message(stream_b, frame_with(0, 11, 2, 50.0), 2);
  stream_a.close();
  stream_b.close();
  server.join();

  EXPECT_EQ(server.result.duplicates_discarded, 1u);
  ASSERT_EQ(server.result.merged.frames.size(), 1u);
  EXPECT_EQ(server.result.merged.frames[0].points.size(), 5u);
  EXPECT_EQ(server.result.complete_frames, 1u);
}

TEST(Loopback, LateFrameDiscarded) {
  ServerHarness server({1}, /*timeout_ms=*/200);

  auto stream = lpc::TcpStream::connect("127.0.0.1", server.port);
  lpc::send_frame_message(stream, frame_with(0, 10, 2, 0.0), 1);
  // Single expected sensor: frame 0 merges and is emitted on arrival, so a
  // second copy arrives late.
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  lpc::send_frame_message(stream, frame_with(0, 10, 2, 0.0), 1);
  stream.close();
  server.join();

  EXPECT_EQ(server.result.late_discarded, 1u);
  EXPECT_EQ(server.result.merged.frames.size(), 1u);
}

TEST(Loopback, UnexpectedSensorIgnored) {
  ServerHarness server({1}, /*timeout_ms=*/200);

  auto intruder = lpc::TcpStream::connect("127.0.0.1", server.port);
  lpc::send_frame_message(intruder, frame_with(0, 10, 4, 9.0), 99);
  intruder.close();

  const auto source = small_scene(16, 3);
  lpc::SensorConfig cfg;
  cfg.sensor_id = 1;
  cfg.port = server.port;
  lpc::sensor_device_run(source, cfg);
  server.join();

  EXPECT_EQ(server.result.unexpected_messages, 1u);
  EXPECT_EQ(server.result.merged.frames.size(), 3u);
}

TEST(Loopback, NoSensorEverConnects) {
  auto listener = lpc::TcpListener::bind("127.0.0.1", 0);
  lpc::MergePolicy policy;
  policy.expected_sensor_ids = {1};
  policy.accept_timeout_ms = 200;
  EXPECT_THROW(lpc::edge_server_run(listener, policy), lpc::NetError);
}

TEST(Loopback, SensorFailsWithoutServer) {
  const auto source = small_scene(17, 2);
  lpc::SensorConfig cfg;
  cfg.sensor_id = 1;
  cfg.host = "127.0.0.1";
  cfg.port = 1;  // nothing listens on port 1
  cfg.connect_timeout_ms = 100;
  EXPECT_THROW(lpc::sensor_device_run(source, cfg), lpc::NetError);
}

}  // namespace
