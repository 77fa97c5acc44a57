#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lpc/raster.hpp"

namespace lpc {

/// ZNCC of a frame pair, or nullopt when either image has no variance.
using ZnccValue = std::optional<double>;

/// 90th-percentile ZNCC over a video, plus how many pairs contributed.
struct MotionMetric {
  double value = 0.0;
  std::size_t defined_count = 0;
  std::size_t total_count = 0;
};

namespace detail {

// Treats variance at or below fp noise of a constant image as zero, so a
// flat frame reports undefined instead of correlating rounding error.
inline bool negligible_variance(double centered_sq_sum, double raw_sq_sum) {
  return centered_sq_sum <= 1e-24 * raw_sq_sum;
}

}  // namespace detail

/// Zero-mean normalized cross-correlation over all pixels of two
/// equal-size images, clamped to [-1, 1]. Undefined (nullopt) when either
/// image has zero variance. Two-pass: means first, then moments.
inline ZnccValue zncc(const PixelImage& a, const PixelImage& b) {
  if (a.width != b.width || a.height != b.height) {
    throw std::invalid_argument("zncc: image dimensions differ");
  }
  const std::size_t n = a.intensities.size();
  double sum_a = 0.0, sum_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum_a += a.intensities[i];
    sum_b += b.intensities[i];
  }
  const double mean_a = sum_a / static_cast<double>(n);
  const double mean_b = sum_b / static_cast<double>(n);

  double cross = 0.0, var_a = 0.0, var_b = 0.0;
  double raw_a = 0.0, raw_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.intensities[i] - mean_a;
    const double db = b.intensities[i] - mean_b;
    cross += da * db;
    var_a += da * da;
    var_b += db * db;
    raw_a += a.intensities[i] * a.intensities[i];
    raw_b += b.intensities[i] * b.intensities[i];
  }
  if (detail::negligible_variance(var_a, raw_a) ||
      detail::negligible_variance(var_b, raw_b)) {
    return std::nullopt;
  }
  const double value = cross / std::sqrt(var_a * var_b);
  return std::clamp(value, -1.0, 1.0);
}

/// ZNCC between each consecutive frame pair: element i correlates frames
/// i and i+1, so the series has length I-1.
inline std::vector<ZnccValue> zncc_series(std::span<const PixelImage> video) {
  if (video.size() < 2) {
    throw std::invalid_argument("zncc_series: need at least 2 frames");
  }
  std::vector<ZnccValue> series;
  series.reserve(video.size() - 1);
  for (std::size_t i = 0; i + 1 < video.size(); ++i) {
    series.push_back(zncc(video[i], video[i + 1]));
  }
  return series;
}

/// Percentile by linear interpolation on rank (p/100)*(n-1) over the
/// sorted values.
inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  if (!(p >= 0.0 && p <= 100.0)) {
    throw std::invalid_argument("percentile: p outside [0, 100]");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double rank = (p / 100.0) * static_cast<double>(n - 1);
  auto lo = static_cast<std::size_t>(std::floor(rank));
  auto hi = static_cast<std::size_t>(std::ceil(rank));
  if (hi > n - 1) hi = n - 1;
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

/// The scalar motion metric: the 90th percentile of the defined ZNCC
/// values. Undefined pairs are excluded rather than mapped to a number;
/// their count is reported so callers can see how degenerate the scene was.
inline MotionMetric motion_metric(std::span<const PixelImage> video,
                                  double pct = 90.0) {
  const auto series = zncc_series(video);
  std::vector<double> defined;
  defined.reserve(series.size());
  for (const ZnccValue& v : series) {
    if (v.has_value()) defined.push_back(*v);
  }
  if (defined.empty()) {
    throw std::domain_error("motion metric: every frame pair had zero variance");
  }
  MotionMetric metric;
  metric.defined_count = defined.size();
  metric.total_count = series.size();
  metric.value = percentile(std::move(defined), pct);
  return metric;
}

}  // namespace lpc
