#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpc/geometry.hpp"

namespace lpc {

/// One labeled session: the motion metric of a sequence and the character
/// count typed during it.
struct ActivityRecord {
  std::string sequence_id;
  double metric = 0.0;
  std::uint64_t typed_chars = 0;
};

/// Linear map from motion metric to typed-character count, bound to the
/// raster configuration that produced its training metrics.
struct LinearEstimationModel {
  double slope = 0.0;
  double intercept = 0.0;
  ProjectionPlane plane = ProjectionPlane::XZ;
  std::string raster_fingerprint;
  std::size_t n = 0;
  double pearson_r = 0.0;
};

struct Estimate {
  double raw = 0.0;      // slope * metric + intercept
  double clamped = 0.0;  // max(0, raw); counts cannot be negative
};

namespace detail {

struct Moments {
  double mean_x = 0.0, mean_y = 0.0;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  double raw_xx = 0.0, raw_yy = 0.0;
};

inline Moments metric_label_moments(std::span<const ActivityRecord> records) {
  Moments m;
  const auto n = static_cast<double>(records.size());
  for (const ActivityRecord& r : records) {
    m.mean_x += r.metric;
    m.mean_y += static_cast<double>(r.typed_chars);
  }
  m.mean_x /= n;
  m.mean_y /= n;
  for (const ActivityRecord& r : records) {
    const double dx = r.metric - m.mean_x;
    const double dy = static_cast<double>(r.typed_chars) - m.mean_y;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
    m.raw_xx += r.metric * r.metric;
    const double y = static_cast<double>(r.typed_chars);
    m.raw_yy += y * y;
  }
  return m;
}

inline bool degenerate(double centered_sq_sum, double raw_sq_sum) {
  return centered_sq_sum <= 1e-24 * std::max(1.0, raw_sq_sum);
}

}  // namespace detail

/// Ordinary least squares of typed_chars on metric. pearson_r is computed
/// alongside; when the labels have no variance it is reported as 0 (no
/// measurable association) rather than left undefined.
inline LinearEstimationModel fit_linear(std::span<const ActivityRecord> records,
                                        ProjectionPlane plane,
                                        std::string raster_fingerprint) {
  if (records.size() < 2) {
    throw std::invalid_argument("fit_linear: need at least 2 records");
  }
  const auto m = detail::metric_label_moments(records);
  if (detail::degenerate(m.sxx, m.raw_xx)) {
    throw std::invalid_argument("fit_linear: metrics have no variance");
  }
  LinearEstimationModel model;
  model.slope = m.sxy / m.sxx;
  model.intercept = m.mean_y - model.slope * m.mean_x;
  model.plane = plane;
  model.raster_fingerprint = std::move(raster_fingerprint);
  model.n = records.size();
  model.pearson_r = detail::degenerate(m.syy, m.raw_yy)
                        ? 0.0
                        : std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
  return model;
}

inline Estimate estimate(const LinearEstimationModel& model, double metric) {
  Estimate e;
  e.raw = model.slope * metric + model.intercept;
  e.clamped = std::max(0.0, e.raw);
  return e;
}

/// Sample Pearson correlation between metric and typed_chars.
inline double pearson(std::span<const ActivityRecord> records) {
  if (records.size() < 2) {
    throw std::invalid_argument("pearson: need at least 2 records");
  }
  const auto m = detail::metric_label_moments(records);
  if (detail::degenerate(m.sxx, m.raw_xx) || detail::degenerate(m.syy, m.raw_yy)) {
    throw std::invalid_argument("pearson: a variable has no variance");
  }
  return std::clamp(m.sxy / std::sqrt(m.sxx * m.syy), -1.0, 1.0);
}

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const LinearEstimationModel& model) {
  return {{"slope", model.slope},
          {"intercept", model.intercept},
          {"plane", std::string(plane_name(model.plane))},
          {"raster_fingerprint", model.raster_fingerprint},
          {"n", model.n},
          {"pearson_r", model.pearson_r},
          {"format_version", kModelFormatVersion}};
}

inline LinearEstimationModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("format_version")) {
    throw std::runtime_error("model json: missing format_version");
  }
  if (j.at("format_version").get<int>() != kModelFormatVersion) {
    throw std::runtime_error("model json: unsupported format_version");
  }
  LinearEstimationModel model;
  model.slope = j.at("slope").get<double>();
  model.intercept = j.at("intercept").get<double>();
  model.plane = parse_plane(j.at("plane").get<std::string>());
  model.raster_fingerprint = j.at("raster_fingerprint").get<std::string>();
  model.n = j.at("n").get<std::size_t>();
  model.pearson_r = j.at("pearson_r").get<double>();
  return model;
}

}  // namespace lpc
