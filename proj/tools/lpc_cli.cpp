// Command-line front end for the point-cloud activity pipeline.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 network error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lpc/lpc.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNet = 3;

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const lpc::NetError& e) {
    std::cerr << "network error: " << e.what() << '\n';
    return kExitNet;
  } catch (const lpc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}

lpc::PipelineConfig load_or_default_pipeline(const std::string& path) {
  if (path.empty()) return {};
  return lpc::load_pipeline_config(path);
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string out_dir;
};

int cmd_simulate(const SimulateArgs& args) {
  const auto entries = lpc::load_simulate_config(args.config);
  fs::create_directories(args.out_dir);
  for (const lpc::SimulateEntry& entry : entries) {
    const fs::path path = fs::path(args.out_dir) / (entry.id + ".lpcseq");
    lpc::write_sequence_file(path, lpc::generate_sequence(entry.synth));
    std::cout << "wrote " << path.string() << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct MetricArgs {
  std::string config;
  std::string plane;
  std::string out;
  std::vector<std::string> inputs;
};

int cmd_metric(const MetricArgs& args) {
  lpc::PipelineConfig cfg = load_or_default_pipeline(args.config);
  if (!args.plane.empty()) cfg.plane = lpc::parse_plane(args.plane);
  const lpc::RasterConfig rc = cfg.raster();

  std::set<std::string> seen;
  std::vector<lpc::MetricsRow> rows;
  bool undefined_metric = false;
  for (const std::string& input : args.inputs) {
    const std::string id = fs::path(input).stem().string();
    if (!lpc::detail::valid_sequence_id(id)) {
      throw lpc::CsvError("input stem is not a usable sequence_id: " + input);
    }
    if (!seen.insert(id).second) {
      throw lpc::CsvError("duplicate sequence_id from inputs: " + id);
    }
    const lpc::FrameSequence seq = lpc::read_sequence_file(input);
    if (seq.frames.size() < 2) {
      throw std::runtime_error(input + ": need at least 2 frames");
    }
    const auto video = lpc::sequence_to_video(seq, cfg.roi, cfg.plane, rc);
    const auto series = lpc::zncc_series(video);
    std::vector<double> defined;
    defined.reserve(series.size());
    for (const lpc::ZnccValue& v : series) {
      if (v.has_value()) defined.push_back(*v);
    }
    lpc::MetricsRow row;
    row.sequence_id = id;
    row.plane = cfg.plane;
    row.defined_count = defined.size();
    row.total_count = series.size();
    if (defined.empty()) {
      undefined_metric = true;
      std::cerr << "warning: " << id << ": no defined ZNCC values\n";
    } else {
      row.metric = lpc::percentile(std::move(defined), 90.0);
    }
    rows.push_back(std::move(row));
  }

  std::ofstream out(args.out, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + args.out);
  lpc::write_metrics_csv(out, rows);
  return undefined_metric ? kExitData : kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string metrics;
  std::string labels;
  std::string config;
  std::string out;
};

std::vector<lpc::MetricsRow> read_metrics_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return lpc::read_metrics_csv(in);
}

std::vector<lpc::LabelRow> read_labels_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return lpc::read_labels_csv(in);
}

void check_rows_match_plane(const std::vector<lpc::MetricsRow>& rows,
                            lpc::ProjectionPlane plane) {
  for (const lpc::MetricsRow& row : rows) {
    if (row.plane != plane) {
      throw std::runtime_error(
          "metrics row '" + row.sequence_id + "' was computed for plane " +
          std::string(lpc::plane_name(row.plane)) + ", expected " +
          std::string(lpc::plane_name(plane)));
    }
  }
}

int cmd_train(const TrainArgs& args) {
  const lpc::PipelineConfig cfg = load_or_default_pipeline(args.config);
  const auto metrics = read_metrics_file(args.metrics);
  check_rows_match_plane(metrics, cfg.plane);
  const auto records = lpc::join_records(metrics, read_labels_file(args.labels));
  if (records.size() < 2) {
    throw std::runtime_error("join produced fewer than 2 records");
  }
  const lpc::LinearEstimationModel model =
      lpc::fit_linear(records, cfg.plane, cfg.raster().fingerprint());

  std::ofstream out(args.out, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + args.out);
  out << lpc::model_to_json(model).dump(2) << '\n';
  if (!out) throw std::runtime_error("model write failed");

  std::printf("n=%zu slope=%.6g intercept=%.6g pearson_r=%.6g\n", model.n,
              model.slope, model.intercept, model.pearson_r);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string model;
  std::string metrics;
  std::string config;
  std::string out;
};

int cmd_estimate(const EstimateArgs& args) {
  std::ifstream model_in(args.model);
  if (!model_in) throw std::runtime_error("cannot open: " + args.model);
  nlohmann::json model_json;
  try {
    model_json = nlohmann::json::parse(model_in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("bad model json: " + std::string(e.what()));
  }
  const lpc::LinearEstimationModel model = lpc::model_from_json(model_json);

  const lpc::PipelineConfig cfg = load_or_default_pipeline(args.config);
  const std::string fingerprint = cfg.raster().fingerprint();
  if (fingerprint != model.raster_fingerprint) {
    throw std::runtime_error(
        "raster fingerprint mismatch: model was trained with " +
        model.raster_fingerprint + " but config produces " + fingerprint +
        "; refusing to estimate");
  }

  const auto metrics = read_metrics_file(args.metrics);
  check_rows_match_plane(metrics, model.plane);
  std::vector<lpc::EstimateRow> rows;
  rows.reserve(metrics.size());
  for (const lpc::MetricsRow& row : metrics) {
    if (!row.metric.has_value()) {
      throw std::runtime_error("metrics row '" + row.sequence_id +
                               "' has no metric value");
    }
    const lpc::Estimate e = lpc::estimate(model, *row.metric);
    rows.push_back({row.sequence_id, *row.metric, e.raw, e.clamped});
  }

  std::ofstream out(args.out, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + args.out);
  lpc::write_estimates_csv(out, rows);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ExportPlotArgs {
  std::string metrics;
  std::string labels;
  std::string out_csv;
  std::string out_svg;
};

std::string render_scatter_svg(const std::vector<lpc::ActivityRecord>& records,
                               double slope, double intercept) {
  double x_lo = records.front().metric, x_hi = x_lo;
  double y_hi = 1.0;
  for (const lpc::ActivityRecord& r : records) {
    x_lo = std::min(x_lo, r.metric);
    x_hi = std::max(x_hi, r.metric);
    y_hi = std::max(y_hi, static_cast<double>(r.typed_chars));
  }
  if (x_hi - x_lo < 1e-12) {
    x_lo -= 0.05;
    x_hi += 0.05;
  }
  const double fit_lo = slope * x_lo + intercept;
  const double fit_hi = slope * x_hi + intercept;
  double y_lo = std::min({0.0, fit_lo, fit_hi});
  y_hi = std::max({y_hi, fit_lo, fit_hi}) * 1.05;

  const double width = 640, height = 480;
  const double ml = 70, mr = 20, mt = 20, mb = 55;
  const double pw = width - ml - mr, ph = height - mt - mb;
  const auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
  const auto py = [&](double y) {
    return mt + ph - (y - y_lo) / (y_hi - y_lo) * ph;
  };
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
         "viewBox=\"0 0 640 480\">\n";
  svg += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" +
         num(ml + pw) + "\" y2=\"" + num(mt + ph) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) +
         "\" y2=\"" + num(mt + ph) + "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(height - 12) +
         "\" text-anchor=\"middle\" font-size=\"14\">90th percentile ZNCC</text>\n";
  svg += "<text x=\"16\" y=\"" + num(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 " +
         num(mt + ph / 2) + ")\">typed characters</text>\n";
  svg += "<text x=\"" + num(ml) + "\" y=\"" + num(mt + ph + 16) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + num(x_lo) + "</text>\n";
  svg += "<text x=\"" + num(ml + pw) + "\" y=\"" + num(mt + ph + 16) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + num(x_hi) + "</text>\n";
  svg += "<text x=\"" + num(ml - 6) + "\" y=\"" + num(py(y_lo)) +
         "\" text-anchor=\"end\" font-size=\"11\">" + num(y_lo) + "</text>\n";
  svg += "<text x=\"" + num(ml - 6) + "\" y=\"" + num(py(y_hi) + 10) +
         "\" text-anchor=\"end\" font-size=\"11\">" + num(y_hi) + "</text>\n";
  svg += "<line x1=\"" + num(px(x_lo)) + "\" y1=\"" + num(py(fit_lo)) +
         "\" x2=\"" + num(px(x_hi)) + "\" y2=\"" + num(py(fit_hi)) +
         "\" stroke=\"#cc3311\" stroke-width=\"1.5\"/>\n";
  for (const lpc::ActivityRecord& r : records) {
    svg += "<circle cx=\"" + num(px(r.metric)) + "\" cy=\"" +
           num(py(static_cast<double>(r.typed_chars))) +
           "\" r=\"3\" fill=\"#4477aa\"/>\n";
  }
  svg += "</svg>\n";
  return svg;
}

int cmd_export_plot(const ExportPlotArgs& args) {
  const auto metrics = read_metrics_file(args.metrics);
  const auto records = lpc::join_records(metrics, read_labels_file(args.labels));
  if (records.size() < 2) {
    throw std::runtime_error("join produced fewer than 2 records");
  }
  const lpc::LinearEstimationModel fit =
      lpc::fit_linear(records, metrics.front().plane, "");

  double x_lo = records.front().metric, x_hi = x_lo;
  for (const lpc::ActivityRecord& r : records) {
    x_lo = std::min(x_lo, r.metric);
    x_hi = std::max(x_hi, r.metric);
  }

  std::ofstream csv(args.out_csv, std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot open for write: " + args.out_csv);
  csv << "kind,sequence_id,metric,value\n";
  for (const lpc::ActivityRecord& r : records) {
    csv << "point," << r.sequence_id << ','
        << lpc::detail::format_double(r.metric) << ',' << r.typed_chars << '\n';
  }
  for (const double x : {x_lo, x_hi}) {
    csv << "fit_endpoint,," << lpc::detail::format_double(x) << ','
        << lpc::detail::format_double(fit.slope * x + fit.intercept) << '\n';
  }
  if (!csv) throw std::runtime_error("scatter write failed");

  std::ofstream svg(args.out_svg, std::ios::trunc);
  if (!svg) throw std::runtime_error("cannot open for write: " + args.out_svg);
  svg << render_scatter_svg(records, fit.slope, fit.intercept);
  if (!svg) throw std::runtime_error("svg write failed");
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RunSensorArgs {
  std::string input;
  std::uint32_t sensor_id = 1;
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string config;
  std::string extrinsic;
  bool realtime = false;
  int connect_timeout_ms = 5000;
};

int cmd_run_sensor(const RunSensorArgs& args) {
  const lpc::FrameSequence seq = lpc::read_sequence_file(args.input);
  lpc::SensorConfig cfg;
  cfg.sensor_id = args.sensor_id;
  cfg.host = args.host;
  cfg.port = args.port;
  cfg.realtime = args.realtime;
  cfg.connect_timeout_ms = args.connect_timeout_ms;
  cfg.roi = load_or_default_pipeline(args.config).roi;
  if (!args.extrinsic.empty()) cfg.extrinsic = lpc::load_extrinsic(args.extrinsic);

  const lpc::SensorRunStats stats = lpc::sensor_device_run(seq, cfg);
  std::cout << "sensor " << args.sensor_id << ": sent " << stats.frames_sent
            << " frames, " << stats.points_sent << " points\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct RunEdgeArgs {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::vector<std::uint32_t> sensors;
  int timeout_ms = 500;
  int accept_timeout_ms = 60000;
  double rate_hz = 9.0;
  std::string out;
  std::string port_file;
};

int cmd_run_edge(const RunEdgeArgs& args) {
  lpc::TcpListener listener = lpc::TcpListener::bind(args.host, args.port);
  std::cout << "listening on " << args.host << ":" << listener.port()
            << std::endl;
  if (!args.port_file.empty()) {
    std::ofstream pf(args.port_file, std::ios::trunc);
    if (!pf) throw std::runtime_error("cannot open for write: " + args.port_file);
    pf << listener.port() << '\n';
  }

  lpc::MergePolicy policy;
  policy.expected_sensor_ids.insert(args.sensors.begin(), args.sensors.end());
  policy.frame_timeout_ms = args.timeout_ms;
  policy.accept_timeout_ms = args.accept_timeout_ms;
  const lpc::EdgeServerResult result =
      lpc::edge_server_run(listener, policy, args.rate_hz);

  lpc::write_sequence_file(args.out, result.merged);
  std::cout << "merged " << result.merged.frames.size() << " frames ("
            << result.complete_frames << " complete, " << result.partial_frames
            << " partial, " << result.omitted_parts << " omitted parts, "
            << result.duplicates_discarded << " duplicates, "
            << result.late_discarded << " late, " << result.unexpected_messages
            << " unexpected, " << result.stream_errors << " stream errors)\n";
  std::cout << "wrote " << args.out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"typed-character activity estimation from point-cloud motion"};
  app.require_subcommand(1);

  SimulateArgs simulate_args;
  auto* simulate = app.add_subcommand(
      "simulate", "generate synthetic sequence files from a config");
  simulate->add_option("--config", simulate_args.config, "simulate config json")
      ->required();
  simulate->add_option("--out-dir", simulate_args.out_dir, "output directory")
      ->required();

  MetricArgs metric_args;
  auto* metric = app.add_subcommand(
      "metric", "compute the motion metric of sequence files");
  metric->add_option("--config", metric_args.config, "pipeline config json");
  metric->add_option("--plane", metric_args.plane,
                     "projection plane override (x-y, x-z, y-z)");
  metric->add_option("--out", metric_args.out, "output metrics csv")->required();
  metric->add_option("inputs", metric_args.inputs, "sequence files (.lpcseq)")
      ->required()
      ->expected(-1);

  TrainArgs train_args;
  auto* train = app.add_subcommand(
      "train", "fit the linear estimation model from metrics and labels");
  train->add_option("--metrics", train_args.metrics, "metrics csv")->required();
  train->add_option("--labels", train_args.labels, "labels csv")->required();
  train->add_option("--config", train_args.config, "pipeline config json");
  train->add_option("--out", train_args.out, "output model json")->required();

  EstimateArgs estimate_args;
  auto* estimate = app.add_subcommand(
      "estimate", "apply a trained model to a metrics file");
  estimate->add_option("--model", estimate_args.model, "model json")->required();
  estimate->add_option("--metrics", estimate_args.metrics, "metrics csv")
      ->required();
  estimate->add_option("--config", estimate_args.config, "pipeline config json");
  estimate->add_option("--out", estimate_args.out, "output estimates csv")
      ->required();

  ExportPlotArgs plot_args;
  auto* plot = app.add_subcommand(
      "export-plot", "export a metric/label scatter with its fitted line");
  plot->add_option("--metrics", plot_args.metrics, "metrics csv")->required();
  plot->add_option("--labels", plot_args.labels, "labels csv")->required();
  plot->add_option("--out-csv", plot_args.out_csv, "scatter csv")->required();
  plot->add_option("--out-svg", plot_args.out_svg, "scatter svg")->required();

  RunSensorArgs sensor_args;
  auto* sensor = app.add_subcommand(
      "run-sensor", "stream a sequence file to the edge server");
  sensor->add_option("--input", sensor_args.input, "sequence file")->required();
  sensor->add_option("--sensor-id", sensor_args.sensor_id, "sensor id")
      ->required();
  sensor->add_option("--host", sensor_args.host, "server host");
  sensor->add_option("--port", sensor_args.port, "server port")->required();
  sensor->add_option("--config", sensor_args.config,
                     "pipeline config json (for the ROI)");
  sensor->add_option("--extrinsic", sensor_args.extrinsic,
                     "extrinsic calibration json");
  sensor->add_flag("--realtime", sensor_args.realtime,
                   "pace frames at the nominal rate");
  sensor->add_option("--connect-timeout-ms", sensor_args.connect_timeout_ms,
                     "how long to retry the initial connect");

  RunEdgeArgs edge_args;
  auto* edge = app.add_subcommand(
      "run-edge", "receive sensor streams, merge frames, write a sequence file");
  edge->add_option("--host", edge_args.host, "listen host");
  edge->add_option("--port", edge_args.port, "listen port (0 = ephemeral)")
      ->required();
  edge->add_option("--sensors", edge_args.sensors,
                   "expected sensor ids, comma separated")
      ->required()
      ->delimiter(',');
  edge->add_option("--timeout-ms", edge_args.timeout_ms,
                   "per-frame merge timeout");
  edge->add_option("--accept-timeout-ms", edge_args.accept_timeout_ms,
                   "give up if no sensor connects in time");
  edge->add_option("--rate-hz", edge_args.rate_hz,
                   "nominal rate recorded in the output file");
  edge->add_option("--out", edge_args.out, "merged sequence file")->required();
  edge->add_option("--port-file", edge_args.port_file,
                   "write the bound port to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*simulate) return run_guarded([&] { return cmd_simulate(simulate_args); });
  if (*metric) return run_guarded([&] { return cmd_metric(metric_args); });
  if (*train) return run_guarded([&] { return cmd_train(train_args); });
  if (*estimate) return run_guarded([&] { return cmd_estimate(estimate_args); });
  if (*plot) return run_guarded([&] { return cmd_export_plot(plot_args); });
  if (*sensor) return run_guarded([&] { return cmd_run_sensor(sensor_args); });
  if (*edge) return run_guarded([&] { return cmd_run_edge(edge_args); });
  return kExitUsage;
}
