#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lpc {

/// One LIDAR return, meters, in the sensor or world frame.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool is_finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }

  friend bool operator==(const Point3&, const Point3&) = default;
};

/// A projected point: the two retained coordinates of a Point3.
struct Point2 {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// One timestamped capture from a sensor (or a merged capture).
struct PointCloudFrame {
  std::uint64_t frame_index = 0;
  std::uint64_t timestamp_micros = 0;
  std::vector<Point3> points;

  friend bool operator==(const PointCloudFrame&, const PointCloudFrame&) = default;
};

/// Time-ordered frames plus the nominal capture rate.
struct FrameSequence {
  std::vector<PointCloudFrame> frames;
  double nominal_rate_hz = 9.0;

  std::size_t frame_count() const { return frames.size(); }

  /// Nominal capture duration: each frame occupies one period.
  double duration_seconds() const {
    return static_cast<double>(frames.size()) / nominal_rate_hz;
  }
};

/// Axis-aligned crop box, closed on every face.
struct RegionOfInterest {
  Point3 min;
  Point3 max;

  bool valid() const {
    return min.is_finite() && max.is_finite() && min.x <= max.x &&
           min.y <= max.y && min.z <= max.z;
  }

  bool contains(const Point3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }

  /// The 430 x 450 x 170 mm box above the keyboard, centered laterally,
  /// resting on z = 0.
  static RegionOfInterest keyboard_default() {
    return {{-0.215, -0.225, 0.0}, {0.215, 0.225, 0.170}};
  }

  /// Config files carry ROI corners in millimeters.
  static RegionOfInterest from_millimeters(const Point3& min_mm,
                                           const Point3& max_mm) {
    return {{min_mm.x / 1000.0, min_mm.y / 1000.0, min_mm.z / 1000.0},
            {max_mm.x / 1000.0, max_mm.y / 1000.0, max_mm.z / 1000.0}};
  }
};

/// Rotation + translation aligning a sensor frame to the world frame.
/// rotation is row-major.
struct RigidTransform {
  std::array<double, 9> rotation = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  Point3 translation;

  static RigidTransform identity() { return {}; }

  Point3 apply(const Point3& p) const {
    const auto& r = rotation;
    return {r[0] * p.x + r[1] * p.y + r[2] * p.z + translation.x,
            r[3] * p.x + r[4] * p.y + r[5] * p.z + translation.y,
            r[6] * p.x + r[7] * p.y + r[8] * p.z + translation.z};
  }

  /// True when rotation is orthonormal with determinant +1 within tol.
  bool is_rigid(double tol = 1e-9) const {
    const auto& r = rotation;
    // R * R^T must be the identity.
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (int k = 0; k < 3; ++k) dot += r[i * 3 + k] * r[j * 3 + k];
        const double want = i == j ? 1.0 : 0.0;
        if (std::abs(dot - want) > tol) return false;
      }
    }
    const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) -
                       r[1] * (r[3] * r[8] - r[5] * r[6]) +
                       r[2] * (r[3] * r[7] - r[4] * r[6]);
    return std::abs(det - 1.0) <= tol;
  }
};

/// The coordinate pair retained after dropping one axis.
enum class ProjectionPlane { XY, XZ, YZ };

inline std::string_view plane_name(ProjectionPlane plane) {
  switch (plane) {
    case ProjectionPlane::XY: return "x-y";
    case ProjectionPlane::XZ: return "x-z";
    case ProjectionPlane::YZ: return "y-z";
  }
  throw std::invalid_argument("unknown projection plane");
}

inline ProjectionPlane parse_plane(std::string_view name) {
  if (name == "x-y") return ProjectionPlane::XY;
  if (name == "x-z") return ProjectionPlane::XZ;
  if (name == "y-z") return ProjectionPlane::YZ;
  throw std::invalid_argument("bad projection plane '" + std::string(name) +
                              "' (expected x-y, x-z or y-z)");
}

inline Point2 project_point(const Point3& p, ProjectionPlane plane) {
  switch (plane) {
    case ProjectionPlane::XY: return {p.x, p.y};
    case ProjectionPlane::XZ: return {p.x, p.z};
    case ProjectionPlane::YZ: return {p.y, p.z};
  }
  throw std::invalid_argument("unknown projection plane");
}

/// Keeps exactly the points inside the closed box. Order and frame
/// metadata are preserved; an empty result is legal.
inline PointCloudFrame filter_roi(const PointCloudFrame& frame,
                                  const RegionOfInterest& roi) {
  PointCloudFrame out;
  out.frame_index = frame.frame_index;
  out.timestamp_micros = frame.timestamp_micros;
  out.points.reserve(frame.points.size());
  for (const Point3& p : frame.points) {
    if (roi.contains(p)) out.points.push_back(p);
  }
  return out;
}

/// Applies rotation then translation to every point. Rejects transforms
/// whose rotation is not orthonormal with determinant +1.
inline PointCloudFrame apply_transform(const PointCloudFrame& frame,
                                       const RigidTransform& t) {
  if (!t.is_rigid()) {
    throw std::invalid_argument("transform rotation is not orthonormal");
  }
  PointCloudFrame out;
  out.frame_index = frame.frame_index;
  out.timestamp_micros = frame.timestamp_micros;
  out.points.reserve(frame.points.size());
  for (const Point3& p : frame.points) out.points.push_back(t.apply(p));
  return out;
}

/// Drops one coordinate of every point; |output| == |input points|.
inline std::vector<Point2> project(const PointCloudFrame& frame,
                                   ProjectionPlane plane) {
  std::vector<Point2> out;
  out.reserve(frame.points.size());
  for (const Point3& p : frame.points) out.push_back(project_point(p, plane));
  return out;
}

}  // namespace lpc
