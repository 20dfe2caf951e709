#include "aedopt/riskmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "aedopt/errors.hpp"
#include "aedopt/rng.hpp"

namespace aedopt {

// ============================================================================
// Split
// ============================================================================

bool SplitSpec::is_train(CellId id) const {
  return std::binary_search(train_ids.begin(), train_ids.end(), id);
}

SplitSpec split_cells(const HexGrid& grid, double threshold_x) {
  SplitSpec s;
  s.rule = "x_threshold";
  s.threshold_x = threshold_x;
  for (const auto& c : grid.cells()) {
    if (c.center.x >= threshold_x)
      s.train_ids.push_back(c.id);
    else
      s.test_ids.push_back(c.id);
  }
  if (s.train_ids.empty() || s.test_ids.empty())
    throw InvalidSplitError("split: one side of the threshold is empty");
  return s;
}

SplitSpec split_cells_median(const HexGrid& grid) {
  std::vector<double> xs;
  xs.reserve(grid.size());
  for (const auto& c : grid.cells()) xs.push_back(c.center.x);
  std::sort(xs.begin(), xs.end());
  return split_cells(grid, xs[xs.size() / 2]);
}

// ============================================================================
// Model
// ============================================================================

namespace {

inline double relu(double v) { return v > 0.0 ? v : 0.0; }

// Forward pass on a standardized row, keeping hidden activations so the
// caller can backpropagate.
double forward_std(const TrainedRiskModel& m, const double* xn, double* a1, double* a2) {
  for (int i = 0; i < m.hidden1; ++i) {
    double z = m.b1[i];
    const double* w = &m.w1[static_cast<size_t>(i) * m.in_dim];
    for (int j = 0; j < m.in_dim; ++j) z += w[j] * xn[j];
    a1[i] = relu(z);
  }
  for (int i = 0; i < m.hidden2; ++i) {
    double z = m.b2[i];
    const double* w = &m.w2[static_cast<size_t>(i) * m.hidden1];
    for (int j = 0; j < m.hidden1; ++j) z += w[j] * a1[j];
    a2[i] = relu(z);
  }
  double out = m.b3;
  for (int i = 0; i < m.hidden2; ++i) out += m.w3[i] * a2[i];
  return out;
}

void standardize(const TrainedRiskModel& m, std::span<const double> x, double* xn) {
  for (int j = 0; j < m.in_dim; ++j) xn[j] = (x[j] - m.feat_mean[j]) / m.feat_std[j];
}

}  // namespace

double TrainedRiskModel::predict(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != in_dim)
    throw InvalidInputError("predict: input dimension mismatch");
  // Reused per-thread scratch: prediction is on the hot path of attribution.
  thread_local std::vector<double> xn, a1, a2;
  xn.resize(in_dim);
  a1.resize(hidden1);
  a2.resize(hidden2);
  standardize(*this, x, xn.data());
  return forward_std(*this, xn.data(), a1.data(), a2.data());
}

std::vector<double> get_params(const TrainedRiskModel& m) {
  std::vector<double> p;
  p.reserve(m.w1.size() + m.b1.size() + m.w2.size() + m.b2.size() + m.w3.size() + 1);
  p.insert(p.end(), m.w1.begin(), m.w1.end());
  p.insert(p.end(), m.b1.begin(), m.b1.end());
  p.insert(p.end(), m.w2.begin(), m.w2.end());
  p.insert(p.end(), m.b2.begin(), m.b2.end());
  p.insert(p.end(), m.w3.begin(), m.w3.end());
  p.push_back(m.b3);
  return p;
}

void set_params(TrainedRiskModel& m, std::span<const double> p) {
  size_t k = 0;
  auto take = [&](std::vector<double>& dst) {
    std::copy(p.begin() + k, p.begin() + k + dst.size(), dst.begin());
    k += dst.size();
  };
  take(m.w1);
  take(m.b1);
  take(m.w2);
  take(m.b2);
  take(m.w3);
  m.b3 = p[k++];
}

double loss_and_gradient(const TrainedRiskModel& m,
                         std::span<const std::vector<double>> rows,
                         std::span<const double> targets,
                         std::vector<double>& grad) {
  size_t n_w1 = m.w1.size(), n_b1 = m.b1.size();
  size_t n_w2 = m.w2.size(), n_b2 = m.b2.size();
  size_t n_w3 = m.w3.size();
  grad.assign(n_w1 + n_b1 + n_w2 + n_b2 + n_w3 + 1, 0.0);
  double* g_w1 = grad.data();
  double* g_b1 = g_w1 + n_w1;
  double* g_w2 = g_b1 + n_b1;
  double* g_b2 = g_w2 + n_w2;
  double* g_w3 = g_b2 + n_b2;
  double* g_b3 = g_w3 + n_w3;

  std::vector<double> xn(m.in_dim), a1(m.hidden1), a2(m.hidden2);
  std::vector<double> d1(m.hidden1), d2(m.hidden2);

  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    standardize(m, rows[r], xn.data());
    double pred = forward_std(m, xn.data(), a1.data(), a2.data());
    double err = pred - targets[r];
    loss += err * err * inv_n;

    double dout = 2.0 * err * inv_n;
    *g_b3 += dout;
    for (int i = 0; i < m.hidden2; ++i) {
      g_w3[i] += dout * a2[i];
      d2[i] = a2[i] > 0.0 ? dout * m.w3[i] : 0.0;
    }
    for (int i = 0; i < m.hidden2; ++i) {
      g_b2[i] += d2[i];
      double* gw = &g_w2[static_cast<size_t>(i) * m.hidden1];
      for (int j = 0; j < m.hidden1; ++j) gw[j] += d2[i] * a1[j];
    }
    std::fill(d1.begin(), d1.end(), 0.0);
    for (int i = 0; i < m.hidden2; ++i) {
      if (d2[i] == 0.0) continue;
      const double* w = &m.w2[static_cast<size_t>(i) * m.hidden1];
      for (int j = 0; j < m.hidden1; ++j) d1[j] += d2[i] * w[j];
    }
    for (int j = 0; j < m.hidden1; ++j)
      if (a1[j] <= 0.0) d1[j] = 0.0;
    for (int i = 0; i < m.hidden1; ++i) {
      g_b1[i] += d1[i];
      double* gw = &g_w1[static_cast<size_t>(i) * m.in_dim];
      for (int j = 0; j < m.in_dim; ++j) gw[j] += d1[i] * xn[j];
    }
  }
  return loss;
}

// ============================================================================
// Training
// ============================================================================

namespace {

TrainedRiskModel init_model(int in_dim, const Hyper& hyper) {
  TrainedRiskModel m;
  m.in_dim = in_dim;
  m.hidden1 = hyper.hidden1;
  m.hidden2 = hyper.hidden2;
  m.seed = hyper.seed;
  m.w1.resize(static_cast<size_t>(m.hidden1) * in_dim);
  m.b1.assign(m.hidden1, 0.0);
  m.w2.resize(static_cast<size_t>(m.hidden2) * m.hidden1);
  m.b2.assign(m.hidden2, 0.0);
  m.w3.resize(m.hidden2);
  m.b3 = 0.0;
  m.feat_mean.assign(in_dim, 0.0);
  m.feat_std.assign(in_dim, 1.0);

  Rng rng(seed_for(hyper.seed, "init"));
  auto he_uniform = [&](std::vector<double>& w, int fan_in) {
    double limit = std::sqrt(6.0 / fan_in);
    for (double& v : w) v = rng.uniform(-limit, limit);
  };
  he_uniform(m.w1, in_dim);
  he_uniform(m.w2, m.hidden1);
  he_uniform(m.w3, m.hidden2);
  return m;
}

}  // namespace

Metrics metrics(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() < 2)
    throw InvalidInputError("metrics: need two equal-length vectors of size >= 2");
  double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / y_true.size();
  double ss_tot = 0.0, ss_res = 0.0, abs_sum = 0.0;
  for (size_t i = 0; i < y_true.size(); ++i) {
    double d = y_true[i] - mean;
    ss_tot += d * d;
    double e = y_true[i] - y_pred[i];
    ss_res += e * e;
    abs_sum += std::fabs(e);
  }
  if (ss_tot == 0.0) throw DegenerateTargetError("metrics: zero target variance");
  return {1.0 - ss_res / ss_tot, abs_sum / y_true.size()};
}

std::pair<TrainedRiskModel, FitReport> train(const FeatureMatrix& matrix,
                                             const SplitSpec& split,
                                             const Hyper& hyper) {
  std::vector<std::vector<double>> train_x, test_x;
  std::vector<double> train_y, test_y;
  for (size_t i = 0; i < matrix.rows(); ++i) {
    if (split.is_train(matrix.cell_ids[i])) {
      train_x.push_back(matrix.x[i]);
      train_y.push_back(matrix.y[i]);
    } else {
      test_x.push_back(matrix.x[i]);
      test_y.push_back(matrix.y[i]);
    }
  }
  if (train_x.size() < 2)
    throw InvalidInputError("train: need at least two training cells");
  if (std::adjacent_find(train_y.begin(), train_y.end(),
                         std::not_equal_to<>()) == train_y.end())
    throw DegenerateTargetError("train: constant training target");

  const int in_dim = static_cast<int>(matrix.cols());
  TrainedRiskModel m = init_model(in_dim, hyper);
  m.split_note = split.rule;
  // Start the output at the mean target so the first batches fit structure,
  // not the offset.
  m.b3 = std::accumulate(train_y.begin(), train_y.end(), 0.0) / train_y.size();

  // Standardization statistics from the training split only.
  for (int j = 0; j < in_dim; ++j) {
    double s = 0.0;
    for (const auto& row : train_x) s += row[j];
    m.feat_mean[j] = s / train_x.size();
    double v = 0.0;
    for (const auto& row : train_x) {
      double d = row[j] - m.feat_mean[j];
      v += d * d;
    }
    double sd = std::sqrt(v / train_x.size());
    m.feat_std[j] = sd > 0.0 ? sd : 1.0;
  }

  std::vector<double> params = get_params(m);
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad;

  FitReport report;
  report.loss_curve.reserve(hyper.epochs);

  Rng shuffle_rng(seed_for(hyper.seed, "shuffle"));
  std::vector<size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<std::vector<double>> batch_x;
  std::vector<double> batch_y;
  const size_t bsz = std::max(1, hyper.batch_size);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += bsz) {
      size_t end = std::min(order.size(), start + bsz);
      batch_x.clear();
      batch_y.clear();
      for (size_t k = start; k < end; ++k) {
        batch_x.push_back(train_x[order[k]]);
        batch_y.push_back(train_y[order[k]]);
      }
      double loss = loss_and_gradient(m, batch_x, batch_y, grad);
      epoch_loss += loss;
      ++batches;
      if (hyper.grad_clip_norm > 0.0) {
        double norm2 = 0.0;
        for (double g : grad) norm2 += g * g;
        if (norm2 > hyper.grad_clip_norm * hyper.grad_clip_norm) {
          double scale = hyper.grad_clip_norm / std::sqrt(norm2);
          for (double& g : grad) g *= scale;
        }
      }
      for (size_t p = 0; p < params.size(); ++p) {
        velocity[p] = hyper.momentum * velocity[p] - hyper.learning_rate * grad[p];
        params[p] += velocity[p];
      }
      set_params(m, params);
    }
    epoch_loss /= static_cast<double>(batches);
    if (!std::isfinite(epoch_loss))
      throw DivergenceError("train: loss diverged at epoch " + std::to_string(epoch),
                            epoch);
    report.loss_curve.push_back(epoch_loss);
  }

  auto eval = [&](const std::vector<std::vector<double>>& xs,
                  const std::vector<double>& ys) {
    std::vector<double> preds(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) preds[i] = m.predict(xs[i]);
    return metrics(ys, preds);
  };
  Metrics tr = eval(train_x, train_y);
  report.train_r2 = tr.r2;
  report.train_mae = tr.mae;
  if (test_x.size() >= 2) {
    Metrics te = eval(test_x, test_y);
    report.test_r2 = te.r2;
    report.test_mae = te.mae;
  }
  return {std::move(m), std::move(report)};
}

// ============================================================================
// Persistence
// ============================================================================

std::string model_to_json(const TrainedRiskModel& m, const SplitSpec& split,
                          const std::string& meta_json) {
  nlohmann::json j;
  if (!meta_json.empty()) j["meta"] = nlohmann::json::parse(meta_json);
  j["layers"] = {m.in_dim, m.hidden1, m.hidden2, 1};
  j["w1"] = m.w1;
  j["b1"] = m.b1;
  j["w2"] = m.w2;
  j["b2"] = m.b2;
  j["w3"] = m.w3;
  j["b3"] = m.b3;
  j["feat_mean"] = m.feat_mean;
  j["feat_std"] = m.feat_std;
  j["seed"] = m.seed;
  j["split"] = {{"rule", split.rule},
                {"threshold_x", split.threshold_x},
                {"train_ids", split.train_ids},
                {"test_ids", split.test_ids}};
  return j.dump(1);
}

std::pair<TrainedRiskModel, SplitSpec> model_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TrainedRiskModel m;
  auto layers = j.at("layers");
  m.in_dim = layers.at(0).get<int>();
  m.hidden1 = layers.at(1).get<int>();
  m.hidden2 = layers.at(2).get<int>();
  m.w1 = j.at("w1").get<std::vector<double>>();
  m.b1 = j.at("b1").get<std::vector<double>>();
  m.w2 = j.at("w2").get<std::vector<double>>();
  m.b2 = j.at("b2").get<std::vector<double>>();
  m.w3 = j.at("w3").get<std::vector<double>>();
  m.b3 = j.at("b3").get<double>();
  m.feat_mean = j.at("feat_mean").get<std::vector<double>>();
  m.feat_std = j.at("feat_std").get<std::vector<double>>();
  m.seed = j.at("seed").get<uint64_t>();

  SplitSpec s;
  s.rule = j.at("split").at("rule").get<std::string>();
  s.threshold_x = j.at("split").at("threshold_x").get<double>();
  s.train_ids = j.at("split").at("train_ids").get<std::vector<CellId>>();
  s.test_ids = j.at("split").at("test_ids").get<std::vector<CellId>>();
  m.split_note = s.rule;
  return {std::move(m), std::move(s)};
}

}  // namespace aedopt
