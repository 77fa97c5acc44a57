#include "lpc/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lpc/rng.hpp"

namespace {

using lpc::ActivityRecord;
using lpc::LinearEstimationModel;

std::vector<ActivityRecord> collinear_records() {
  return {{"a", 0.1, 20}, {"b", 0.2, 40}, {"c", 0.3, 60}};
}

TEST(FitLinear, ExactCollinearPoints) {
  const auto model =
      lpc::fit_linear(collinear_records(), lpc::ProjectionPlane::XZ, "fp");
  EXPECT_NEAR(model.slope, 200.0, 1e-9);
  EXPECT_NEAR(model.intercept, 0.0, 1e-9);
  EXPECT_NEAR(model.pearson_r, 1.0, 1e-9);
  EXPECT_EQ(model.n, 3u);
  EXPECT_EQ(model.raster_fingerprint, "fp");
}

TEST(FitLinear, ConstantLabels) {
  const std::vector<ActivityRecord> records{
      {"a", 0.1, 7}, {"b", 0.5, 7}, {"c", 0.9, 7}};
  const auto model = lpc::fit_linear(records, lpc::ProjectionPlane::XY, "");
  EXPECT_NEAR(model.slope, 0.0, 1e-9);
  EXPECT_NEAR(model.intercept, 7.0, 1e-9);
  EXPECT_EQ(model.pearson_r, 0.0);
}

TEST(FitLinear, RecoversNoiselessRule) {
  // metric = i / 150 makes 150 * metric + 30 land on integers, so the
  // integer labels carry no rounding error.
  std::vector<ActivityRecord> records;
  for (int i = 0; i < 100; ++i) {
    const double metric = static_cast<double>(i) / 150.0;
    const auto label =
        static_cast<std::uint64_t>(std::llround(150.0 * metric + 30.0));
    records.push_back({"r", metric, label});
  }
  const auto model = lpc::fit_linear(records, lpc::ProjectionPlane::XZ, "");
  EXPECT_NEAR(model.slope, 150.0, 1e-6);
  EXPECT_NEAR(model.intercept, 30.0, 1e-6);
  EXPECT_NEAR(model.pearson_r, 1.0, 1e-9);
}

TEST(FitLinear, RejectsDegenerateInput) {
  EXPECT_THROW(
      lpc::fit_linear(std::vector<ActivityRecord>{{"a", 0.1, 2}},
                      lpc::ProjectionPlane::XZ, ""),
      std::invalid_argument);
  const std::vector<ActivityRecord> same_metric{
      {"a", 0.4, 10}, {"b", 0.4, 20}, {"c", 0.4, 30}};
  EXPECT_THROW(lpc::fit_linear(same_metric, lpc::ProjectionPlane::XZ, ""),
               std::invalid_argument);
}

TEST(FitLinear, ResidualsSumToZero) {
  lpc::Rng rng(21);
  std::vector<ActivityRecord> records;
  for (int i = 0; i < 50; ++i) {
    const double metric = rng.next_in(-0.5, 0.9);
    const auto label = static_cast<std::uint64_t>(
        std::llround(std::max(0.0, 80.0 * metric + 120.0 + 10.0 * rng.next_gaussian())));
    records.push_back({"r", metric, label});
  }
  const auto model = lpc::fit_linear(records, lpc::ProjectionPlane::XZ, "");
  double residual_sum = 0.0;
  double label_scale = 0.0;
  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& r : records) {
    const double y = static_cast<double>(r.typed_chars);
    residual_sum += y - (model.slope * r.metric + model.intercept);
    label_scale += std::abs(y);
    mean_x += r.metric;
    mean_y += y;
  }
  mean_x /= static_cast<double>(records.size());
  mean_y /= static_cast<double>(records.size());
  EXPECT_NEAR(residual_sum, 0.0, 1e-9 * label_scale);
  // The fitted line passes through the mean point.
  EXPECT_NEAR(model.slope * mean_x + model.intercept, mean_y,
              1e-9 * std::abs(mean_y));
}

TEST(FitLinear, PearsonSquaredMatchesRSquared) {
  lpc::Rng rng(22);
  std::vector<ActivityRecord> records;
  for (int i = 0; i < 40; ++i) {
    const double metric = rng.next_in(-0.2, 0.8);
    const auto label = static_cast<std::uint64_t>(std::llround(
        std::max(0.0, 150.0 * metric + 60.0 + 15.0 * rng.next_gaussian())));
    records.push_back({"r", metric, label});
  }
  const auto model = lpc::fit_linear(records, lpc::ProjectionPlane::XZ, "");
  double mean_y = 0.0;
  for (const auto& r : records) mean_y += static_cast<double>(r.typed_chars);
  mean_y /= static_cast<double>(records.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& r : records) {
    const double y = static_cast<double>(r.typed_chars);
    const double fit = model.slope * r.metric + model.intercept;
    ss_res += (y - fit) * (y - fit);
    ss_tot += (y - mean_y) * (y - mean_y);
  }
  const double r_squared = 1.0 - ss_res / ss_tot;
  EXPECT_NEAR(model.pearson_r * model.pearson_r, r_squared, 1e-9);
}

TEST(FitLinear, InvariantToRecordOrder) {
  lpc::Rng rng(23);
  std::vector<ActivityRecord> records;
  for (int i = 0; i < 30; ++i) {
    records.push_back(
        {"r", rng.next_in(-1.0, 1.0),
         static_cast<std::uint64_t>(rng.next_u64() % 300)});
  }
  auto shuffled = records;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937{99});
  const auto a = lpc::fit_linear(records, lpc::ProjectionPlane::XZ, "");
  const auto b = lpc::fit_linear(shuffled, lpc::ProjectionPlane::XZ, "");
  EXPECT_NEAR(a.slope, b.slope, 1e-12 * std::abs(a.slope));
  EXPECT_NEAR(a.intercept, b.intercept, 1e-12 * std::max(1.0, std::abs(a.intercept)));
}

TEST(Estimate, DirectEvaluation) {
  LinearEstimationModel model;
  model.slope = 200.0;
  model.intercept = 0.0;
  const auto e = lpc::estimate(model, 0.25);
  EXPECT_DOUBLE_EQ(e.raw, 50.0);
  EXPECT_DOUBLE_EQ(e.clamped, 50.0);
}

TEST(Estimate, ClampsNegativePredictions) {
  LinearEstimationModel model;
  model.slope = 200.0;
  model.intercept = -100.0;
  const auto e = lpc::estimate(model, 0.1);
  EXPECT_NEAR(e.raw, -80.0, 1e-12);
  EXPECT_DOUBLE_EQ(e.clamped, 0.0);
}

TEST(Estimate, RoundTripsThroughExactFit) {
  const auto records = collinear_records();
  const auto model = lpc::fit_linear(records, lpc::ProjectionPlane::XZ, "");
  for (const auto& r : records) {
    EXPECT_NEAR(lpc::estimate(model, r.metric).clamped,
                static_cast<double>(r.typed_chars), 1e-9);
  }
}

TEST(Estimate, MonotoneForPositiveSlope) {
  LinearEstimationModel model;
  model.slope = 120.0;
  model.intercept = -40.0;
  double prev = lpc::estimate(model, -1.0).clamped;
  for (double m = -0.9; m <= 1.0; m += 0.1) {
    const double cur = lpc::estimate(model, m).clamped;
    EXPECT_GE(cur, prev);
    prev = cur;
  }
}

TEST(Pearson, CollinearData) {
  EXPECT_NEAR(lpc::pearson(collinear_records()), 1.0, 1e-12);
  const std::vector<ActivityRecord> decreasing{
      {"a", 0.1, 60}, {"b", 0.2, 40}, {"c", 0.3, 20}};
  EXPECT_NEAR(lpc::pearson(decreasing), -1.0, 1e-12);
}

TEST(Pearson, MatchesDirectFormulaOracle) {
  const std::vector<ActivityRecord> records{
      {"a", 0.0, 0}, {"b", 1.0, 1}, {"c", 2.0, 0}, {"d", 3.0, 1}};
  // Direct covariance / variance evaluation.
  double mx = 0.0, my = 0.0;
  for (const auto& r : records) {
    mx += r.metric;
    my += static_cast<double>(r.typed_chars);
  }
  mx /= 4.0;
  my /= 4.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& r : records) {
    const double dx = r.metric - mx;
    const double dy = static_cast<double>(r.typed_chars) - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const double expected = sxy / std::sqrt(sxx * syy);
  EXPECT_NEAR(lpc::pearson(records), expected, 1e-12);
}

TEST(Pearson, RejectsDegenerateVariance) {
  const std::vector<ActivityRecord> flat_labels{
      {"a", 0.1, 5}, {"b", 0.2, 5}, {"c", 0.3, 5}};
  EXPECT_THROW(lpc::pearson(flat_labels), std::invalid_argument);
  const std::vector<ActivityRecord> flat_metrics{
      {"a", 0.1, 5}, {"b", 0.1, 9}, {"c", 0.1, 2}};
  EXPECT_THROW(lpc::pearson(flat_metrics), std::invalid_argument);
}

TEST(ModelJson, RoundTrip) {
  LinearEstimationModel model;
  model.slope = 123.456;
  model.intercept = -7.5;
  model.plane = lpc::ProjectionPlane::XY;
  model.raster_fingerprint = "deadbeefdeadbeef";
  model.n = 42;
  model.pearson_r = 0.875;

  const auto j = lpc::model_to_json(model);
  for (const char* key : {"slope", "intercept", "plane", "raster_fingerprint",
                          "n", "pearson_r", "format_version"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.at("format_version").get<int>(), 1);
  EXPECT_EQ(j.at("plane").get<std::string>(), "x-y");

  const auto back = lpc::model_from_json(j);
  EXPECT_DOUBLE_EQ(back.slope, model.slope);
  EXPECT_DOUBLE_EQ(back.intercept, model.intercept);
  EXPECT_EQ(back.plane, model.plane);
  EXPECT_EQ(back.raster_fingerprint, model.raster_fingerprint);
  EXPECT_EQ(back.n, model.n);
  EXPECT_DOUBLE_EQ(back.pearson_r, model.pearson_r);
}

TEST(ModelJson, RejectsWrongVersion) {
  auto j = lpc::model_to_json(LinearEstimationModel{});
  j["format_version"] = 2;
  EXPECT_THROW(lpc::model_from_json(j), std::runtime_error);
  j.erase("format_version");
  EXPECT_THROW(lpc::model_from_json(j), std::runtime_error);
}

}  // namespace
