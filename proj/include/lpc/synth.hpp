#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpc/geometry.hpp"
#include "lpc/metric.hpp"
#include "lpc/model.hpp"
#include "lpc/raster.hpp"
#include "lpc/rng.hpp"

namespace lpc {

/// Parameters of the synthetic typing scene that stands in for the LIDAR
/// hardware: a jittered hand cluster bobbing vertically over static
/// background clutter, all inside the default keyboard box.
struct SynthConfig {
  std::uint64_t seed = 1;
  std::int32_t frame_count = 540;
  double rate_hz = 9.0;
  std::int32_t hand_points = 200;
  Point3 base_center = {0.0, 0.0, 0.085};
  double amplitude_m = 0.02;
  double strokes_per_second = 2.3;
  double jitter_sigma_m = 0.002;
  std::int32_t background_points = 100;

  bool valid() const {
    return frame_count >= 2 && rate_hz > 0.0 && hand_points >= 1 &&
           base_center.is_finite() && amplitude_m >= 0.0 &&
           strokes_per_second >= 0.0 && jitter_sigma_m >= 0.0 &&
           background_points >= 0;
  }
};

/// Deterministic scene generator. Identical configs (including the seed)
/// produce identical sequences. Draw order is fixed: first 3 uniforms per
/// background point (uniform inside the default keyboard box), then per
/// frame 3 gaussians per hand point, even when jitter is zero.
///
/// Frame i is stamped at round(i * 1e6 / rate_hz) microseconds and holds
/// the hand cluster followed by the shared background points. The cluster
/// center oscillates as base_center.z + amplitude_m * sin(2*pi*
/// strokes_per_second * t).
inline FrameSequence generate_sequence(const SynthConfig& cfg) {
  if (!cfg.valid()) throw std::invalid_argument("invalid synth config");
  Rng rng(cfg.seed);

  const RegionOfInterest box = RegionOfInterest::keyboard_default();
  std::vector<Point3> background;
  background.reserve(cfg.background_points);
  for (std::int32_t i = 0; i < cfg.background_points; ++i) {
    const double x = rng.next_in(box.min.x, box.max.x);
    const double y = rng.next_in(box.min.y, box.max.y);
    const double z = rng.next_in(box.min.z, box.max.z);
    background.push_back({x, y, z});
  }

  FrameSequence seq;
  seq.nominal_rate_hz = cfg.rate_hz;
  seq.frames.reserve(cfg.frame_count);
  for (std::int32_t i = 0; i < cfg.frame_count; ++i) {
    PointCloudFrame frame;
    frame.frame_index = static_cast<std::uint64_t>(i);
    frame.timestamp_micros = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(i) * 1e6 / cfg.rate_hz));
    const double t = static_cast<double>(i) / cfg.rate_hz;
    const double center_z =
        cfg.base_center.z +
        cfg.amplitude_m *
            std::sin(2.0 * std::numbers::pi * cfg.strokes_per_second * t);
    frame.points.reserve(static_cast<std::size_t>(cfg.hand_points) +
                         background.size());
    for (std::int32_t j = 0; j < cfg.hand_points; ++j) {
      const double dx = rng.next_gaussian() * cfg.jitter_sigma_m;
      const double dy = rng.next_gaussian() * cfg.jitter_sigma_m;
      const double dz = rng.next_gaussian() * cfg.jitter_sigma_m;
      frame.points.push_back(
          {cfg.base_center.x + dx, cfg.base_center.y + dy, center_z + dz});
    }
    frame.points.insert(frame.points.end(), background.begin(),
                        background.end());
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

/// Label rule applied to each sequence's motion metric:
/// typed_chars = round(max(0, slope * metric + intercept + eps)),
/// eps ~ Gaussian(0, noise_sigma) drawn from Rng(seed), one per sequence.
struct LabelRule {
  double slope = 150.0;
  double intercept = 30.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
};

struct LabeledDataset {
  std::vector<std::string> sequence_ids;
  std::vector<FrameSequence> sequences;
  std::vector<ActivityRecord> records;
};

/// Runs each config through the standard pipeline (crop, project,
/// rasterize, ZNCC series, 90th percentile) and labels the resulting
/// metric with the rule. Sequence ids are synth-000, synth-001, ...
inline LabeledDataset generate_labeled_dataset(
    std::span<const SynthConfig> cfgs, const LabelRule& rule,
    const RegionOfInterest& roi = RegionOfInterest::keyboard_default(),
    ProjectionPlane plane = ProjectionPlane::XZ, std::int32_t raster_width = 64,
    std::int32_t raster_height = 64) {
  if (cfgs.empty()) {
    throw std::invalid_argument("generate_labeled_dataset: no configs");
  }
  const RasterConfig rc =
      RasterConfig::for_roi(roi, plane, raster_width, raster_height);
  Rng noise(rule.seed);
  LabeledDataset out;
  out.sequence_ids.reserve(cfgs.size());
  out.sequences.reserve(cfgs.size());
  out.records.reserve(cfgs.size());
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    FrameSequence seq = generate_sequence(cfgs[i]);
    const auto video = sequence_to_video(seq, roi, plane, rc);
    const MotionMetric metric = motion_metric(video);
    const double eps = noise.next_gaussian() * rule.noise_sigma;
    const double raw = rule.slope * metric.value + rule.intercept + eps;
    char id[16];
    std::snprintf(id, sizeof(id), "synth-%03zu", i);
    ActivityRecord rec;
    rec.sequence_id = id;
    rec.metric = metric.value;
    rec.typed_chars =
        static_cast<std::uint64_t>(std::llround(std::max(0.0, raw)));
    out.sequence_ids.emplace_back(id);
    out.sequences.push_back(std::move(seq));
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace lpc
