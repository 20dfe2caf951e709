#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aedopt/datahub.hpp"

namespace aedopt {

// ============================================================================
// Geographic train/test split
// ============================================================================

struct SplitSpec {
  std::string rule;  // "x_threshold" or "explicit"
  double threshold_x = 0.0;
  std::vector<CellId> train_ids;  // eastern side (center.x >= threshold)
  std::vector<CellId> test_ids;

  bool is_train(CellId id) const;
};

// Partition by center longitude (projected x). Either side empty is an
// InvalidSplitError.
SplitSpec split_cells(const HexGrid& grid, double threshold_x);

// Threshold at the median center x.
SplitSpec split_cells_median(const HexGrid& grid);

// ============================================================================
// MLP regressor
// ============================================================================

struct Hyper {
  int hidden1 = 64;
  int hidden2 = 32;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int epochs = 2000;
  int batch_size = 16;
  // Per-batch global gradient-norm cap; raw count targets can reach hundreds
  // per cell and unclipped momentum SGD blows up on them. 0 disables.
  double grad_clip_norm = 50.0;
  uint64_t seed = 1;
};

// Fully connected input -> h1 -> h2 -> 1, rectified-linear hidden layers,
// linear output. Inputs are standardized with train-split statistics;
// targets are fit raw. Prediction is a plain deterministic forward pass.
struct TrainedRiskModel {
  int in_dim = 0;
  int hidden1 = 0;
  int hidden2 = 0;
  std::vector<double> w1, b1;  // [hidden1 x in_dim], [hidden1]
  std::vector<double> w2, b2;  // [hidden2 x hidden1], [hidden2]
  std::vector<double> w3;      // [hidden2]
  double b3 = 0.0;
  std::vector<double> feat_mean, feat_std;
  uint64_t seed = 0;
  std::string split_note;

  double predict(std::span<const double> x) const;
};

// Flat parameter access in a fixed layout (w1,b1,w2,b2,w3,b3); shared by the
// fit loop and by finite-difference gradient checks.
std::vector<double> get_params(const TrainedRiskModel& m);
void set_params(TrainedRiskModel& m, std::span<const double> p);

// Mean-squared-error loss over the batch plus its gradient in the flat
// layout. Rows are raw (unstandardized) feature vectors.
double loss_and_gradient(const TrainedRiskModel& m,
                         std::span<const std::vector<double>> rows,
                         std::span<const double> targets,
                         std::vector<double>& grad);

struct FitReport {
  double train_r2 = 0.0;
  double train_mae = 0.0;
  double test_r2 = 0.0;
  double test_mae = 0.0;
  std::vector<double> loss_curve;  // mean batch MSE per epoch
};

// Seeded mini-batch SGD with momentum. Deterministic per (data, hyper, seed).
// Constant train target -> DegenerateTargetError; NaN loss -> DivergenceError
// carrying the epoch.
std::pair<TrainedRiskModel, FitReport> train(const FeatureMatrix& matrix,
                                             const SplitSpec& split,
                                             const Hyper& hyper);

struct Metrics {
  double r2 = 0.0;
  double mae = 0.0;
};

// R² = 1 - SS_res/SS_tot, MAE = mean |y - ŷ|. Zero target variance ->
// DegenerateTargetError.
Metrics metrics(std::span<const double> y_true, std::span<const double> y_pred);

std::string model_to_json(const TrainedRiskModel& m, const SplitSpec& split,
                          const std::string& meta_json = "");
std::pair<TrainedRiskModel, SplitSpec> model_from_json(const std::string& text);

}  // namespace aedopt
