#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <numeric>

#include "aedopt/errors.hpp"
#include "aedopt/riskmodel.hpp"
#include "aedopt/rng.hpp"
#include "test_support.hpp"

using namespace aedopt;

namespace {

// Irregular 177-cell region: column q holds count_q cells. East columns
// (q >= 8) hold 83 cells, west columns hold 94.
HexGrid city_blob_177() {
  const int counts[] = {10, 11, 12, 13, 12, 12, 12, 12,   // west: 94
                        12, 12, 12, 12, 12, 12, 11};      // east: 83
  std::vector<AxialCoord> coords;
  for (int q = 0; q < 15; ++q)
    for (int r = 0; r < counts[q]; ++r) coords.push_back({q, r - q / 2});
  return HexGrid::from_axial(1410.0, coords);
}

FeatureMatrix matrix_from(const HexGrid& grid, std::vector<std::vector<double>> x,
                          std::vector<double> y,
                          const std::vector<std::string>& names) {
  FeatureMatrix m;
  m.grid_fingerprint = grid.fingerprint();
  for (const auto& c : grid.cells()) m.cell_ids.push_back(c.id);
  m.x = std::move(x);
  m.y = std::move(y);
  m.feature_names = names;
  return m;
}

TrainedRiskModel constant_model(int in_dim, double bias) {
  TrainedRiskModel m;
  m.in_dim = in_dim;
  m.hidden1 = 4;
  m.hidden2 = 3;
  m.w1.assign(4 * in_dim, 0.0);
  m.b1.assign(4, 0.0);
  m.w2.assign(3 * 4, 0.0);
  m.b2.assign(3, 0.0);
  m.w3.assign(3, 0.0);
  m.b3 = bias;
  m.feat_mean.assign(in_dim, 0.0);
  m.feat_std.assign(in_dim, 1.0);
  return m;
}

}  // namespace

TEST_SUITE("riskmodel") {

TEST_CASE("median split partitions the grid") {
  HexGrid grid = HexGrid::build({{0, 0}, {12000, 9000}}, 1410.0);
  SplitSpec s = split_cells_median(grid);
  CHECK(!s.train_ids.empty());
  CHECK(!s.test_ids.empty());
  CHECK(s.train_ids.size() + s.test_ids.size() == grid.size());
  for (CellId id : s.train_ids) CHECK(grid.at(id).center.x >= s.threshold_x);
  for (CellId id : s.test_ids) CHECK(grid.at(id).center.x < s.threshold_x);
}

TEST_CASE("threshold beyond the region is an invalid split") {
  HexGrid grid = HexGrid::build({{0, 0}, {12000, 9000}}, 1410.0);
  CHECK_THROWS_AS(split_cells(grid, 1e9), InvalidSplitError);
  CHECK_THROWS_AS(split_cells(grid, -1e9), InvalidSplitError);
}

TEST_CASE("city-shaped 177-cell region splits 83/94") {
  HexGrid grid = city_blob_177();
  REQUIRE(grid.size() == 177);
  // Threshold between column 7 and column 8 centers.
  double threshold = 1.5 * 1410.0 * 7.5;
  SplitSpec s = split_cells(grid, threshold);
  CHECK(s.train_ids.size() == 83);
  CHECK(s.test_ids.size() == 94);
}

TEST_CASE("metrics on the worked examples") {
  std::vector<double> y = {1.0, 2.0, 3.0, 4.0};
  Metrics perfect = metrics(y, y);
  CHECK(perfect.r2 == doctest::Approx(1.0));
  CHECK(perfect.mae == doctest::Approx(0.0));

  std::vector<double> mean_pred(4, 2.5);
  Metrics base = metrics(y, mean_pred);
  CHECK(base.r2 == doctest::Approx(0.0));

  // Direct evaluation of both formulas: residuals (-1, 1), SS_res = 2,
  // SS_tot = 2.
  std::vector<double> y2 = {0.0, 2.0};
  std::vector<double> p2 = {1.0, 1.0};
  Metrics m2 = metrics(y2, p2);
  CHECK(m2.mae == doctest::Approx(1.0));
  CHECK(m2.r2 == doctest::Approx(0.0));

  std::vector<double> flat = {5.0, 5.0};
  CHECK_THROWS_AS(metrics(flat, p2), DegenerateTargetError);
  std::vector<double> one = {1.0};
  CHECK_THROWS_AS(metrics(one, one), InvalidInputError);
}

TEST_CASE("noise-free linear target is fit almost exactly") {
  HexGrid grid = HexGrid::build({{0, 0}, {14000, 11000}}, 1410.0);
  Rng rng(3);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (size_t i = 0; i < grid.size(); ++i) {
    double a = static_cast<double>(rng.below(11));
    double b = static_cast<double>(rng.below(7));
    x.push_back({a, b});
    y.push_back(2.0 * a);
  }
  FeatureMatrix m = matrix_from(grid, std::move(x), std::move(y), {"f0", "f1"});
  SplitSpec split = split_cells_median(grid);
  Hyper h;
  h.hidden1 = 24;
  h.hidden2 = 12;
  h.epochs = 1200;
  h.seed = 17;
  auto [model, report] = train(m, split, h);
  CHECK(report.test_r2 >= 0.99);
  CHECK(report.train_r2 >= 0.99);
  CHECK(report.loss_curve.size() == 1200);
  // SGD descends overall.
  CHECK(report.loss_curve.back() < report.loss_curve.front());
}

TEST_CASE("fit beats the mean predictor on a noisy linear city") {
  HexGrid grid = HexGrid::build({{0, 0}, {26000, 22000}}, 1410.0);
  FeatureCatalog cat = FeatureCatalog::from_names({"apartments", "cafe", "school"});
  GenParams p;
  p.intensity = {4.0, 4.0, 4.0};
  p.weights = {60.0, 30.0, 10.0};
  p.bias = 5.0;
  SynthCity city = synth_city(21, grid, cat, p);
  FeatureMatrix m = assemble_matrix(grid, cat, city.counts, city.y);
  SplitSpec split = split_cells_median(grid);
  Hyper h;
  h.hidden1 = 32;
  h.hidden2 = 16;
  h.epochs = 900;
  h.seed = 2;
  auto [model, report] = train(m, split, h);
  // The mean predictor scores R² = 0 by construction.
  CHECK(report.test_r2 >= 0.9);
}

TEST_CASE("constant network predicts its bias") {
  TrainedRiskModel m = constant_model(3, 7.5);
  std::vector<double> x = {1.0, -2.0, 100.0};
  CHECK(m.predict(x) == 7.5);
  std::vector<double> zero = {0.0, 0.0, 0.0};
  CHECK(m.predict(zero) == 7.5);
}

TEST_CASE("prediction is bit-deterministic and checks dimensions") {
  TrainedRiskModel m = constant_model(2, 0.0);
  Rng rng(8);
  for (double& v : m.w1) v = rng.normal();
  for (double& v : m.w2) v = rng.normal();
  for (double& v : m.w3) v = rng.normal();
  std::vector<double> x = {0.3, -1.2};
  double a = m.predict(x);
  double b = m.predict(x);
  CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);

  std::vector<double> bad = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(m.predict(bad), InvalidInputError);
}

TEST_CASE("overfit model reproduces a training row within its train MAE") {
  HexGrid grid = HexGrid::build({{0, 0}, {5000, 2500}}, 1200.0);
  REQUIRE(grid.size() >= 4);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (size_t i = 0; i < grid.size(); ++i) {
    x.push_back({static_cast<double>(i % 3), static_cast<double>(i % 2)});
    y.push_back(3.0 * (i % 3) + 1.0);
  }
  FeatureMatrix m = matrix_from(grid, std::move(x), std::move(y), {"f0", "f1"});
  SplitSpec split;
  split.rule = "explicit";
  split.train_ids = m.cell_ids;  // train on everything
  std::sort(split.train_ids.begin(), split.train_ids.end());
  Hyper h;
  h.hidden1 = 16;
  h.hidden2 = 8;
  h.epochs = 3000;
  h.seed = 5;
  auto [model, report] = train(m, split, h);
  CHECK(report.train_mae < 0.05);
  double pred = model.predict(m.x[0]);
  CHECK(std::fabs(pred - m.y[0]) <= report.train_mae + 1e-3);
}

TEST_CASE("gradient matches central finite differences") {
  // 5 inputs, 8 hidden units per layer.
  Hyper h;
  h.hidden1 = 8;
  h.hidden2 = 8;
  h.seed = 33;
  TrainedRiskModel m = constant_model(5, 0.0);
  m.hidden1 = 8;
  m.hidden2 = 8;
  m.w1.assign(8 * 5, 0.0);
  m.b1.assign(8, 0.0);
  m.w2.assign(8 * 8, 0.0);
  m.b2.assign(8, 0.0);
  m.w3.assign(8, 0.0);
  Rng rng(h.seed);
  for (double& v : m.w1) v = 0.4 * rng.normal();
  for (double& v : m.b1) v = 0.1 * rng.normal();
  for (double& v : m.w2) v = 0.4 * rng.normal();
  for (double& v : m.b2) v = 0.1 * rng.normal();
  for (double& v : m.w3) v = 0.4 * rng.normal();
  m.b3 = 0.1;

  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> row(5);
    for (double& v : row) v = rng.normal();
    rows.push_back(row);
    targets.push_back(rng.normal() * 2.0);
  }

  std::vector<double> grad;
  loss_and_gradient(m, rows, targets, grad);

  std::vector<double> params = get_params(m);
  const double step = 1e-4;
  double max_rel = 0.0;
  std::vector<double> dummy;
  for (size_t p = 0; p < params.size(); ++p) {
    TrainedRiskModel mp = m, mm = m;
    std::vector<double> pp = params, pm = params;
    pp[p] += step;
    pm[p] -= step;
    set_params(mp, pp);
    set_params(mm, pm);
    double lp = loss_and_gradient(mp, rows, targets, dummy);
    double lm = loss_and_gradient(mm, rows, targets, dummy);
    double numeric = (lp - lm) / (2 * step);
    double rel = std::fabs(grad[p] - numeric) /
                 std::max({1.0, std::fabs(grad[p]), std::fabs(numeric)});
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("training is deterministic per seed") {
  HexGrid grid = HexGrid::build({{0, 0}, {9000, 7000}}, 1410.0);
  Rng rng(12);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (size_t i = 0; i < grid.size(); ++i) {
    x.push_back({static_cast<double>(rng.below(9)), static_cast<double>(rng.below(9))});
    y.push_back(x.back()[0] + 2.0 * x.back()[1] + static_cast<double>(rng.below(3)));
  }
  FeatureMatrix m = matrix_from(grid, x, y, {"f0", "f1"});
  SplitSpec split = split_cells_median(grid);
  Hyper h;
  h.hidden1 = 12;
  h.hidden2 = 6;
  h.epochs = 200;
  h.seed = 77;
  auto [m1, r1] = train(m, split, h);
  auto [m2, r2] = train(m, split, h);
  CHECK(get_params(m1) == get_params(m2));
  CHECK(r1.loss_curve == r2.loss_curve);

  h.seed = 78;
  auto [m3, r3] = train(m, split, h);
  CHECK(get_params(m1) != get_params(m3));
}

TEST_CASE("pre-normalization input scaling cancels out") {
  // Scaling raw inputs by a power of two scales the train statistics
  // exactly, so standardized inputs and predictions are bit-identical.
  HexGrid grid = HexGrid::build({{0, 0}, {9000, 7000}}, 1410.0);
  Rng rng(55);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (size_t i = 0; i < grid.size(); ++i) {
    x.push_back({rng.uniform(0.0, 10.0), rng.uniform(0.0, 5.0)});
    y.push_back(x.back()[0] - x.back()[1]);
  }
  FeatureMatrix m = matrix_from(grid, x, y, {"f0", "f1"});

  std::vector<std::vector<double>> x4 = x;
  for (auto& row : x4)
    for (double& v : row) v *= 4.0;
  FeatureMatrix m4 = matrix_from(grid, x4, y, {"f0", "f1"});

  SplitSpec split = split_cells_median(grid);
  Hyper h;
  h.hidden1 = 8;
  h.hidden2 = 4;
  h.epochs = 120;
  h.seed = 3;
  auto [model_a, ra] = train(m, split, h);
  auto [model_b, rb] = train(m4, split, h);
  for (size_t i = 0; i < m.rows(); ++i) {
    double pa = model_a.predict(m.x[i]);
    double pb = model_b.predict(m4.x[i]);
    CHECK(std::memcmp(&pa, &pb, sizeof(double)) == 0);
  }
}

TEST_CASE("degenerate and divergent training raise typed errors") {
  HexGrid grid = HexGrid::build({{0, 0}, {9000, 7000}}, 1410.0);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (size_t i = 0; i < grid.size(); ++i) {
    x.push_back({static_cast<double>(i)});
    y.push_back(5.0);  // constant target
  }
  FeatureMatrix m = matrix_from(grid, x, y, {"f0"});
  SplitSpec split = split_cells_median(grid);
  Hyper h;
  CHECK_THROWS_AS(train(m, split, h), DegenerateTargetError);

  for (size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i % 13);
  FeatureMatrix m2 = matrix_from(grid, x, y, {"f0"});
  Hyper wild;
  wild.learning_rate = 1e9;
  wild.grad_clip_norm = 0.0;  // let it blow up
  wild.epochs = 50;
  wild.hidden1 = 8;
  wild.hidden2 = 4;
  CHECK_THROWS_AS(train(m2, split, wild), DivergenceError);
  try {
    train(m2, split, wild);
  } catch (const DivergenceError& e) {
    CHECK(e.epoch >= 0);
    CHECK(e.epoch < 50);
  }
}

TEST_CASE("model JSON round trip preserves predictions bit-for-bit") {
  HexGrid grid = HexGrid::build({{0, 0}, {9000, 7000}}, 1410.0);
  Rng rng(61);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (size_t i = 0; i < grid.size(); ++i) {
    x.push_back({rng.uniform(0.0, 8.0), rng.uniform(0.0, 8.0)});
    y.push_back(2.0 * x.back()[0] + rng.uniform(0.0, 1.0));
  }
  FeatureMatrix m = matrix_from(grid, x, y, {"f0", "f1"});
  SplitSpec split = split_cells_median(grid);
  Hyper h;
  h.hidden1 = 8;
  h.hidden2 = 4;
  h.epochs = 150;
  auto [model, report] = train(m, split, h);

  auto [loaded, split2] = model_from_json(model_to_json(model, split));
  CHECK(split2.train_ids == split.train_ids);
  CHECK(split2.test_ids == split.test_ids);
  for (size_t i = 0; i < m.rows(); ++i) {
    double a = model.predict(m.x[i]);
    double b = loaded.predict(m.x[i]);
    CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
  }
}

}  // TEST_SUITE
