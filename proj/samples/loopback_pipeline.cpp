// Runs the distributed path in-process: two sensor devices stream synthetic
// captures over loopback TCP to the edge server, which merges them; the
// merged sequence is then converted to a motion metric.

#include <cstdio>
#include <thread>

#include "lpc/lpc.hpp"

int main() {
  lpc::SynthConfig scene_a;
  scene_a.seed = 7;
  scene_a.frame_count = 120;
  lpc::SynthConfig scene_b = scene_a;
  scene_b.seed = 8;
  scene_b.amplitude_m = 0.04;

  auto listener = lpc::TcpListener::bind("127.0.0.1", 0);
  const std::uint16_t port = listener.port();

  lpc::MergePolicy policy;
  policy.expected_sensor_ids = {1, 2};

  lpc::EdgeServerResult result;
  std::thread server(
      [&] { result = lpc::edge_server_run(listener, policy, scene_a.rate_hz); });

  auto run_sensor = [port](const lpc::SynthConfig& scene, std::uint32_t id) {
    lpc::SensorConfig cfg;
    cfg.sensor_id = id;
    cfg.port = port;
    lpc::sensor_device_run(lpc::generate_sequence(scene), cfg);
  };
  std::thread sensor_a(run_sensor, scene_a, 1);
  std::thread sensor_b(run_sensor, scene_b, 2);
  sensor_a.join();
  sensor_b.join();
  server.join();

  std::printf("merged %zu frames (%llu complete, %llu partial)\n",
              result.merged.frames.size(),
              static_cast<unsigned long long>(result.complete_frames),
              static_cast<unsigned long long>(result.partial_frames));

  const auto roi = lpc::RegionOfInterest::keyboard_default();
  const auto rc = lpc::RasterConfig::for_roi(roi, lpc::ProjectionPlane::XZ);
  const auto video =
      lpc::sequence_to_video(result.merged, roi, lpc::ProjectionPlane::XZ, rc);
  const lpc::MotionMetric m = lpc::motion_metric(video);
  std::printf("motion metric: %.6f\n", m.value);
  return 0;
}
