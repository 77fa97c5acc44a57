#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lpc/geometry.hpp"
#include "lpc/raster.hpp"
#include "lpc/synth.hpp"

namespace lpc {

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad json in " + path.string() + ": " + e.what());
  }
}

inline void check_version(const nlohmann::json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("version")) {
    throw ConfigError(what + ": missing version key");
  }
  if (j.at("version").get<int>() != 1) {
    throw ConfigError(what + ": unsupported version");
  }
}

inline Point3 point_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(what + ": expected [x, y, z]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// Sequence ids become file stems and CSV keys, so keep them to a safe set.
inline bool valid_sequence_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

}  // namespace detail

/// Shared ROI / plane / raster configuration. ROI corners are given in
/// millimeters in the file and converted to meters here. When the raster
/// bounds are not given explicitly the ROI's projection is used, so the
/// crop box maps exactly onto the image.
///
/// Schema (all keys except version optional, defaults shown):
///   {
///     "version": 1,
///     "roi_mm": {"min": [-215, -225, 0], "max": [215, 225, 170]},
///     "plane": "x-z",
///     "raster": {"width": 64, "height": 64, "intensity": "count",
///                "bounds_m": {"min": [u, v], "max": [u, v]}}   // optional
///   }
struct PipelineConfig {
  RegionOfInterest roi = RegionOfInterest::keyboard_default();
  ProjectionPlane plane = ProjectionPlane::XZ;
  std::int32_t raster_width = 64;
  std::int32_t raster_height = 64;
  IntensityMode intensity = IntensityMode::Count;
  std::optional<Bounds2> raster_bounds;

  RasterConfig raster() const {
    RasterConfig cfg = RasterConfig::for_roi(roi, plane, raster_width,
                                             raster_height, intensity);
    if (raster_bounds.has_value()) cfg.bounds = *raster_bounds;
    if (!cfg.valid()) throw ConfigError("pipeline config: invalid raster");
    return cfg;
  }
};

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  detail::check_version(j, "pipeline config");
  PipelineConfig cfg;
  try {
    if (j.contains("roi_mm")) {
      const auto& roi = j.at("roi_mm");
      cfg.roi = RegionOfInterest::from_millimeters(
          detail::point_from_json(roi.at("min"), "roi_mm.min"),
          detail::point_from_json(roi.at("max"), "roi_mm.max"));
      if (!cfg.roi.valid()) throw ConfigError("pipeline config: invalid roi");
    }
    if (j.contains("plane")) {
      cfg.plane = parse_plane(j.at("plane").get<std::string>());
    }
    if (j.contains("raster")) {
      const auto& raster = j.at("raster");
      if (raster.contains("width")) {
        cfg.raster_width = raster.at("width").get<std::int32_t>();
      }
      if (raster.contains("height")) {
        cfg.raster_height = raster.at("height").get<std::int32_t>();
      }
      if (raster.contains("intensity")) {
        cfg.intensity =
            parse_intensity_mode(raster.at("intensity").get<std::string>());
      }
      if (raster.contains("bounds_m")) {
        const auto& b = raster.at("bounds_m");
        const auto& lo = b.at("min");
        const auto& hi = b.at("max");
        if (!lo.is_array() || lo.size() != 2 || !hi.is_array() || hi.size() != 2) {
          throw ConfigError("pipeline config: bounds_m expects [u, v] pairs");
        }
        cfg.raster_bounds = Bounds2{{lo[0].get<double>(), lo[1].get<double>()},
                                    {hi[0].get<double>(), hi[1].get<double>()}};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  cfg.raster();  // validates
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return pipeline_config_from_json(detail::load_json_file(path));
}

/// One entry of a simulate config: a sequence id plus scene parameters.
///
/// Schema:
///   {
///     "version": 1,
///     "sequences": [
///       {"id": "a-00", "seed": 1, "frame_count": 540, "rate_hz": 9.0,
///        "hand_points": 200, "base_center_m": [0, 0, 0.085],
///        "amplitude_m": 0.02, "strokes_per_second": 2.3,
///        "jitter_sigma_m": 0.002, "background_points": 100}
///     ]
///   }
/// Only "id" is required per entry; the rest default as in SynthConfig.
struct SimulateEntry {
  std::string id;
  SynthConfig synth;
};

inline std::vector<SimulateEntry> simulate_entries_from_json(
    const nlohmann::json& j) {
  detail::check_version(j, "simulate config");
  if (!j.contains("sequences") || !j.at("sequences").is_array() ||
      j.at("sequences").empty()) {
    throw ConfigError("simulate config: needs a non-empty sequences array");
  }
  std::vector<SimulateEntry> entries;
  try {
    for (const auto& e : j.at("sequences")) {
      SimulateEntry entry;
      entry.id = e.at("id").get<std::string>();
      if (!detail::valid_sequence_id(entry.id)) {
        throw ConfigError("simulate config: bad id '" + entry.id +
                          "' (use [A-Za-z0-9._-])");
      }
      SynthConfig& s = entry.synth;
      if (e.contains("seed")) s.seed = e.at("seed").get<std::uint64_t>();
      if (e.contains("frame_count")) {
        s.frame_count = e.at("frame_count").get<std::int32_t>();
      }
      if (e.contains("rate_hz")) s.rate_hz = e.at("rate_hz").get<double>();
      if (e.contains("hand_points")) {
        s.hand_points = e.at("hand_points").get<std::int32_t>();
      }
      if (e.contains("base_center_m")) {
        s.base_center =
            detail::point_from_json(e.at("base_center_m"), "base_center_m");
      }
      if (e.contains("amplitude_m")) {
        s.amplitude_m = e.at("amplitude_m").get<double>();
      }
      if (e.contains("strokes_per_second")) {
        s.strokes_per_second = e.at("strokes_per_second").get<double>();
      }
      if (e.contains("jitter_sigma_m")) {
        s.jitter_sigma_m = e.at("jitter_sigma_m").get<double>();
      }
      if (e.contains("background_points")) {
        s.background_points = e.at("background_points").get<std::int32_t>();
      }
      if (!s.valid()) {
        throw ConfigError("simulate config: invalid parameters for '" +
                          entry.id + "'");
      }
      entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("simulate config: ") + e.what());
  }
  std::set<std::string> seen;
  for (const SimulateEntry& entry : entries) {
    if (!seen.insert(entry.id).second) {
      throw ConfigError("simulate config: duplicate id '" + entry.id + "'");
    }
  }
  return entries;
}

inline std::vector<SimulateEntry> load_simulate_config(
    const std::filesystem::path& path) {
  return simulate_entries_from_json(detail::load_json_file(path));
}

/// Extrinsic calibration file for one sensor:
///   {"version": 1, "rotation": [r00, r01, r02, r10, ...], "translation_m": [x, y, z]}
inline RigidTransform transform_from_json(const nlohmann::json& j) {
  detail::check_version(j, "extrinsic config");
  RigidTransform t;
  try {
    const auto& rot = j.at("rotation");
    if (!rot.is_array() || rot.size() != 9) {
      throw ConfigError("extrinsic config: rotation expects 9 values, row-major");
    }
    for (std::size_t i = 0; i < 9; ++i) t.rotation[i] = rot[i].get<double>();
    t.translation =
        detail::point_from_json(j.at("translation_m"), "translation_m");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("extrinsic config: ") + e.what());
  }
  if (!t.is_rigid()) {
    throw ConfigError("extrinsic config: rotation is not orthonormal");
  }
  return t;
}

inline RigidTransform load_extrinsic(const std::filesystem::path& path) {
  return transform_from_json(detail::load_json_file(path));
}

}  // namespace lpc
