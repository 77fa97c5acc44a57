#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lpc/geometry.hpp"
#include "lpc/model.hpp"
#include "lpc/raster.hpp"

namespace lpc {

class CsvError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline double parse_csv_double(std::string_view text, const std::string& what) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw CsvError("bad " + what + ": '" + std::string(text) + "'");
  }
  return v;
}

inline std::uint64_t parse_csv_u64(std::string_view text, const std::string& what) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw CsvError("bad " + what + ": '" + std::string(text) + "'");
  }
  return v;
}

/// Reads non-empty lines, stripping a trailing carriage return, and checks
/// the header. Field values must not contain commas; ids are written from
/// a restricted charset so no quoting is needed.
inline std::vector<std::string> read_csv_lines(std::istream& in,
                                               std::string_view header,
                                               const std::string& what) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    lines.push_back(line);
  }
  if (lines.empty()) throw CsvError(what + ": empty file");
  if (lines.front() != header) {
    throw CsvError(what + ": bad header '" + lines.front() + "' (expected '" +
                   std::string(header) + "')");
  }
  lines.erase(lines.begin());
  return lines;
}

inline void check_sequence_id(std::string_view id) {
  if (id.empty()) throw CsvError("empty sequence_id");
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) {
      throw CsvError("sequence_id contains unsupported character: '" +
                     std::string(id) + "'");
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Metrics file: one row per sequence. A row with an empty metric field
// marks a sequence whose ZNCC series had no defined values.

inline constexpr std::string_view kMetricsHeader =
    "sequence_id,plane,metric,defined_count,total_count";

struct MetricsRow {
  std::string sequence_id;
  ProjectionPlane plane = ProjectionPlane::XZ;
  std::optional<double> metric;
  std::uint64_t defined_count = 0;
  std::uint64_t total_count = 0;
};

inline void write_metrics_csv(std::ostream& out,
                              std::span<const MetricsRow> rows) {
  out << kMetricsHeader << '\n';
  for (const MetricsRow& row : rows) {
    detail::check_sequence_id(row.sequence_id);
    out << row.sequence_id << ',' << plane_name(row.plane) << ',';
    if (row.metric.has_value()) out << detail::format_double(*row.metric);
    out << ',' << row.defined_count << ',' << row.total_count << '\n';
  }
  if (!out) throw CsvError("metrics write failed");
}

inline std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::vector<MetricsRow> rows;
  for (const std::string& line :
       detail::read_csv_lines(in, kMetricsHeader, "metrics csv")) {
    const auto f = detail::split_fields(line);
    if (f.size() != 5) throw CsvError("metrics csv: bad row '" + line + "'");
    MetricsRow row;
    row.sequence_id = std::string(f[0]);
    detail::check_sequence_id(row.sequence_id);
    row.plane = parse_plane(f[1]);
    if (!f[2].empty()) {
      const double m = detail::parse_csv_double(f[2], "metric");
      if (m < -1.0 || m > 1.0) {
        throw CsvError("metric outside [-1, 1]: '" + std::string(f[2]) + "'");
      }
      row.metric = m;
    }
    row.defined_count = detail::parse_csv_u64(f[3], "defined_count");
    row.total_count = detail::parse_csv_u64(f[4], "total_count");
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Labels file: one row per session.

inline constexpr std::string_view kLabelsHeader = "sequence_id,typed_chars";

struct LabelRow {
  std::string sequence_id;
  std::uint64_t typed_chars = 0;
};

inline void write_labels_csv(std::ostream& out, std::span<const LabelRow> rows) {
  out << kLabelsHeader << '\n';
  for (const LabelRow& row : rows) {
    detail::check_sequence_id(row.sequence_id);
    out << row.sequence_id << ',' << row.typed_chars << '\n';
  }
  if (!out) throw CsvError("labels write failed");
}

inline std::vector<LabelRow> read_labels_csv(std::istream& in) {
  std::vector<LabelRow> rows;
  for (const std::string& line :
       detail::read_csv_lines(in, kLabelsHeader, "labels csv")) {
    const auto f = detail::split_fields(line);
    if (f.size() != 2) throw CsvError("labels csv: bad row '" + line + "'");
    LabelRow row;
    row.sequence_id = std::string(f[0]);
    detail::check_sequence_id(row.sequence_id);
    row.typed_chars = detail::parse_csv_u64(f[1], "typed_chars");
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Estimates file.

inline constexpr std::string_view kEstimatesHeader =
    "sequence_id,metric,estimate_raw,estimate_clamped";

struct EstimateRow {
  std::string sequence_id;
  double metric = 0.0;
  double raw = 0.0;
  double clamped = 0.0;
};

inline void write_estimates_csv(std::ostream& out,
                                std::span<const EstimateRow> rows) {
  out << kEstimatesHeader << '\n';
  for (const EstimateRow& row : rows) {
    detail::check_sequence_id(row.sequence_id);
    out << row.sequence_id << ',' << detail::format_double(row.metric) << ','
        << detail::format_double(row.raw) << ','
        << detail::format_double(row.clamped) << '\n';
  }
  if (!out) throw CsvError("estimates write failed");
}

// ---------------------------------------------------------------------------

/// Inner join of metrics and labels on sequence_id, in metrics-row order.
/// Rows whose metric is undefined are skipped; they carry no usable signal.
inline std::vector<ActivityRecord> join_records(
    std::span<const MetricsRow> metrics, std::span<const LabelRow> labels) {
  std::unordered_map<std::string_view, std::uint64_t> by_id;
  for (const LabelRow& label : labels) {
    by_id.emplace(label.sequence_id, label.typed_chars);
  }
  std::vector<ActivityRecord> records;
  for (const MetricsRow& row : metrics) {
    if (!row.metric.has_value()) continue;
    const auto it = by_id.find(row.sequence_id);
    if (it == by_id.end()) continue;
    records.push_back({row.sequence_id, *row.metric, it->second});
  }
  return records;
}

}  // namespace lpc
