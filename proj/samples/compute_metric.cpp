// Generates one synthetic typing sequence and prints its motion metric on
// each projection plane.

#include <cstdio>

#include "lpc/lpc.hpp"

int main() {
  lpc::SynthConfig cfg;
  cfg.seed = 42;
  cfg.frame_count = 540;
  cfg.amplitude_m = 0.03;

  const lpc::FrameSequence seq = lpc::generate_sequence(cfg);
  const auto roi = lpc::RegionOfInterest::keyboard_default();
  std::printf("%zu frames over %.1f s\n", seq.frame_count(),
              seq.duration_seconds());

  for (const auto plane : {lpc::ProjectionPlane::XY, lpc::ProjectionPlane::XZ,
                           lpc::ProjectionPlane::YZ}) {
    const auto rc = lpc::RasterConfig::for_roi(roi, plane);
    const auto video = lpc::sequence_to_video(seq, roi, plane, rc);
    const lpc::MotionMetric m = lpc::motion_metric(video);
    std::printf("plane %s: metric %.6f (%zu/%zu pairs defined)\n",
                std::string(lpc::plane_name(plane)).c_str(), m.value,
                m.defined_count, m.total_count);
  }
  return 0;
}
