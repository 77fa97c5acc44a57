#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpc/geometry.hpp"

namespace lpc {

enum class IntensityMode { Count, Binary };

inline std::string_view intensity_mode_name(IntensityMode mode) {
  return mode == IntensityMode::Count ? "count" : "binary";
}

inline IntensityMode parse_intensity_mode(std::string_view name) {
  if (name == "count") return IntensityMode::Count;
  if (name == "binary") return IntensityMode::Binary;
  throw std::invalid_argument("bad intensity mode '" + std::string(name) +
                              "' (expected count or binary)");
}

/// Raster area in projected coordinates, meters.
struct Bounds2 {
  Point2 min;
  Point2 max;

  bool valid() const { return max.u > min.u && max.v > min.v; }

  friend bool operator==(const Bounds2&, const Bounds2&) = default;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("to_chars failed");
  return std::string(buf, end);
}

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace detail

/// How projected points become a fixed-size intensity image.
struct RasterConfig {
  ProjectionPlane plane = ProjectionPlane::XZ;
  Bounds2 bounds;
  std::int32_t width = 64;
  std::int32_t height = 64;
  IntensityMode mode = IntensityMode::Count;

  bool valid() const { return width >= 1 && height >= 1 && bounds.valid(); }

  /// Bounds taken from the ROI's two retained axes, so the crop box maps
  /// exactly onto the raster.
  static RasterConfig for_roi(const RegionOfInterest& roi,
                              ProjectionPlane plane, std::int32_t width = 64,
                              std::int32_t height = 64,
                              IntensityMode mode = IntensityMode::Count) {
    RasterConfig cfg;
    cfg.plane = plane;
    cfg.bounds = {project_point(roi.min, plane), project_point(roi.max, plane)};
    cfg.width = width;
    cfg.height = height;
    cfg.mode = mode;
    return cfg;
  }

  /// Stable hash of every field. Models remember the fingerprint of the
  /// raster that produced their training metrics; estimation against a
  /// different configuration is refused.
  std::string fingerprint() const {
    std::string canon;
    canon += "plane=";
    canon += plane_name(plane);
    canon += ";min=";
    canon += detail::format_double(bounds.min.u);
    canon += ',';
    canon += detail::format_double(bounds.min.v);
    canon += ";max=";
    canon += detail::format_double(bounds.max.u);
    canon += ',';
    canon += detail::format_double(bounds.max.v);
    canon += ";size=";
    canon += std::to_string(width);
    canon += 'x';
    canon += std::to_string(height);
    canon += ";mode=";
    canon += intensity_mode_name(mode);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(canon)));
    return std::string(buf, 16);
  }
};

/// Row-major intensity raster; index = iy * width + ix. Intensities are
/// whole counts in Count mode and {0,1} in Binary mode, stored as doubles.
struct PixelImage {
  std::int32_t width = 0;
  std::int32_t height = 0;
  std::vector<double> intensities;

  static PixelImage zeros(std::int32_t width, std::int32_t height) {
    PixelImage img;
    img.width = width;
    img.height = height;
    img.intensities.assign(static_cast<std::size_t>(width) * height, 0.0);
    return img;
  }

  double& at(std::int32_t ix, std::int32_t iy) {
    return intensities[static_cast<std::size_t>(iy) * width + ix];
  }
  double at(std::int32_t ix, std::int32_t iy) const {
    return intensities[static_cast<std::size_t>(iy) * width + ix];
  }

  friend bool operator==(const PixelImage&, const PixelImage&) = default;
};

/// Bins points into cells. Cell index = floor((p - min) / cell_size);
/// points on the max boundary clamp into the last cell, points outside the
/// bounds are dropped silently.
inline PixelImage rasterize(std::span<const Point2> points,
                            const RasterConfig& cfg) {
  if (!cfg.valid()) throw std::invalid_argument("invalid raster config");
  PixelImage img = PixelImage::zeros(cfg.width, cfg.height);
  const double cell_u = (cfg.bounds.max.u - cfg.bounds.min.u) / cfg.width;
  const double cell_v = (cfg.bounds.max.v - cfg.bounds.min.v) / cfg.height;
  for (const Point2& p : points) {
    if (p.u < cfg.bounds.min.u || p.u > cfg.bounds.max.u ||
        p.v < cfg.bounds.min.v || p.v > cfg.bounds.max.v) {
      continue;
    }
    auto ix = static_cast<std::int32_t>(
        std::floor((p.u - cfg.bounds.min.u) / cell_u));
    auto iy = static_cast<std::int32_t>(
        std::floor((p.v - cfg.bounds.min.v) / cell_v));
    if (ix >= cfg.width) ix = cfg.width - 1;
    if (iy >= cfg.height) iy = cfg.height - 1;
    if (cfg.mode == IntensityMode::Count) {
      img.at(ix, iy) += 1.0;
    } else {
      img.at(ix, iy) = 1.0;
    }
  }
  return img;
}

/// Full per-frame conversion: crop, project, rasterize. One image per
/// input frame, in frame order; empty frames yield all-zero images.
inline std::vector<PixelImage> sequence_to_video(const FrameSequence& seq,
                                                 const RegionOfInterest& roi,
                                                 ProjectionPlane plane,
                                                 const RasterConfig& cfg) {
  if (cfg.plane != plane) {
    throw std::invalid_argument("raster config plane does not match requested plane");
  }
  std::vector<PixelImage> video;
  video.reserve(seq.frames.size());
  for (const PointCloudFrame& frame : seq.frames) {
    const auto cropped = filter_roi(frame, roi);
    video.push_back(rasterize(project(cropped, plane), cfg));
  }
  return video;
}

}  // namespace lpc
