#include "aedopt/explain.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <numeric>
#include <thread>

#include "aedopt/errors.hpp"
#include "aedopt/rng.hpp"

namespace aedopt {

// ============================================================================
// Background set
// ============================================================================

BackgroundSet BackgroundSet::all_rows(const FeatureMatrix& m,
                                      std::span<const CellId> ids) {
  BackgroundSet b;
  for (CellId id : ids) {
    auto it = std::lower_bound(m.cell_ids.begin(), m.cell_ids.end(), id);
    if (it == m.cell_ids.end() || *it != id)
      throw ConsistencyError("background: cell id not in matrix");
    b.rows.push_back(m.x[static_cast<size_t>(it - m.cell_ids.begin())]);
  }
  if (b.rows.empty()) throw InvalidInputError("background: empty row set");
  return b;
}

BackgroundSet BackgroundSet::sampled(const FeatureMatrix& m,
                                     std::span<const CellId> ids, size_t cap,
                                     uint64_t seed) {
  if (cap == 0 || cap >= ids.size()) return all_rows(m, ids);
  std::vector<CellId> pool(ids.begin(), ids.end());
  Rng rng(seed);
  for (size_t i = 0; i < cap; ++i) {
    size_t j = i + static_cast<size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(cap);
  std::sort(pool.begin(), pool.end());
  BackgroundSet b = all_rows(m, pool);
  b.seed = seed;
  return b;
}

double BackgroundSet::column_mean(size_t j) const {
  double s = 0.0;
  for (const auto& r : rows) s += r[j];
  return s / rows.size();
}

// ============================================================================
// Value function and exact enumeration
// ============================================================================

namespace {

// Mean model output with `keep` features from x and the rest from each
// background row in turn. `blend` is caller-provided scratch.
double value_of_mask(const PredictFn& model, std::span<const double> x,
                     uint32_t mask, const BackgroundSet& bg,
                     std::vector<double>& blend) {
  const size_t m = x.size();
  double acc = 0.0;
  for (const auto& row : bg.rows) {
    for (size_t j = 0; j < m; ++j)
      blend[j] = (mask >> j) & 1u ? x[j] : row[j];
    acc += model(blend);
  }
  return acc / bg.rows.size();
}

}  // namespace

double value_fn(const PredictFn& model, std::span<const double> x,
                const std::vector<bool>& keep, const BackgroundSet& background) {
  if (background.rows.empty()) throw InvalidInputError("value_fn: empty background");
  if (keep.size() != x.size()) throw InvalidInputError("value_fn: mask size mismatch");
  if (x.size() > 32) {
    // Masks wider than 32 features only arise through the sampling path,
    // which blends incrementally; evaluate directly here.
    std::vector<double> blend(x.size());
    double acc = 0.0;
    for (const auto& row : background.rows) {
      for (size_t j = 0; j < x.size(); ++j) blend[j] = keep[j] ? x[j] : row[j];
      acc += model(blend);
    }
    return acc / background.rows.size();
  }
  uint32_t mask = 0;
  for (size_t j = 0; j < keep.size(); ++j)
    if (keep[j]) mask |= 1u << j;
  std::vector<double> blend(x.size());
  return value_of_mask(model, x, mask, background, blend);
}

std::vector<double> exact_shapley(const PredictFn& model, std::span<const double> x,
                                  const BackgroundSet& background) {
  const int m = static_cast<int>(x.size());
  if (m < 1) throw InvalidInputError("exact_shapley: empty input");
  if (m > 15)
    throw SizeLimitError(
        "exact_shapley: enumeration limited to 15 features; use sampled_shapley");
  if (background.rows.empty())
    throw InvalidInputError("exact_shapley: empty background");

  const uint32_t n_masks = 1u << m;
  std::vector<double> v(n_masks);
  std::vector<double> blend(x.size());
  for (uint32_t mask = 0; mask < n_masks; ++mask)
    v[mask] = value_of_mask(model, x, mask, background, blend);

  // coef[s] = s! (m-1-s)! / m!
  std::vector<double> coef(m);
  std::vector<double> fact(m + 1, 1.0);
  for (int i = 1; i <= m; ++i) fact[i] = fact[i - 1] * i;
  for (int s = 0; s < m; ++s) coef[s] = fact[s] * fact[m - 1 - s] / fact[m];

  std::vector<double> phi(m, 0.0);
  for (uint32_t mask = 0; mask < n_masks; ++mask) {
    int size = std::popcount(mask);
    for (int j = 0; j < m; ++j) {
      if ((mask >> j) & 1u) continue;
      phi[j] += coef[size] * (v[mask | (1u << j)] - v[mask]);
    }
  }
  return phi;
}

// ============================================================================
// Permutation sampling
// ============================================================================

SampledShap sampled_shapley(const PredictFn& model, std::span<const double> x,
                            const BackgroundSet& background, int n_perm,
                            uint64_t seed) {
  const size_t m = x.size();
  if (m == 0) throw InvalidInputError("sampled_shapley: empty input");
  if (n_perm <= 0) throw InvalidInputError("sampled_shapley: n_perm must be >= 1");
  if (background.rows.empty())
    throw InvalidInputError("sampled_shapley: empty background");

  // v(empty set) is shared by every permutation walk.
  std::vector<double> blend(m);
  double v_empty = 0.0;
  for (const auto& row : background.rows) {
    std::copy(row.begin(), row.end(), blend.begin());
    v_empty += model(blend);
  }
  v_empty /= background.rows.size();
  const double f_full = model(x);

  std::vector<double> sum(m, 0.0), sumsq(m, 0.0);
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<char> keep(m);

  Rng rng(seed);
  for (int p = 0; p < n_perm; ++p) {
    rng.shuffle(order);
    std::fill(keep.begin(), keep.end(), 0);
    double v_prev = v_empty;
    for (size_t step = 0; step < m; ++step) {
      int j = order[step];
      keep[j] = 1;
      double v_cur;
      if (step + 1 == m) {
        v_cur = f_full;
      } else {
        v_cur = 0.0;
        for (const auto& row : background.rows) {
          for (size_t t = 0; t < m; ++t) blend[t] = keep[t] ? x[t] : row[t];
          v_cur += model(blend);
        }
        v_cur /= background.rows.size();
      }
      double delta = v_cur - v_prev;
      sum[j] += delta;
      sumsq[j] += delta * delta;
      v_prev = v_cur;
    }
  }

  SampledShap out;
  out.phi.resize(m);
  out.se.assign(m, 0.0);
  for (size_t j = 0; j < m; ++j) {
    double mean = sum[j] / n_perm;
    out.phi[j] = mean;
    if (n_perm > 1) {
      double var = (sumsq[j] - n_perm * mean * mean) / (n_perm - 1);
      out.se[j] = var > 0.0 ? std::sqrt(var / n_perm) : 0.0;
    }
  }

  // Spread the reconstruction residual proportionally to |phi| so the
  // additive identity holds exactly before the values are shared to sites.
  double phi_sum = std::accumulate(out.phi.begin(), out.phi.end(), 0.0);
  out.residual = f_full - v_empty - phi_sum;
  double abs_sum = 0.0;
  for (double v : out.phi) abs_sum += std::fabs(v);
  if (abs_sum > 0.0) {
    for (size_t j = 0; j < m; ++j) out.phi[j] += out.residual * std::fabs(out.phi[j]) / abs_sum;
  } else if (m > 0) {
    for (size_t j = 0; j < m; ++j) out.phi[j] += out.residual / static_cast<double>(m);
  }
  return out;
}

// ============================================================================
// Whole-matrix attribution
// ============================================================================

ShapAttribution attribute_cells(const TrainedRiskModel& model, const FeatureMatrix& m,
                                const BackgroundSet& background,
                                const AttributionOptions& opts) {
  PredictFn fn = [&model](std::span<const double> row) { return model.predict(row); };

  ShapAttribution attr;
  attr.cell_ids = m.cell_ids;
  attr.phi.assign(m.rows(), {});
  attr.residuals.assign(m.rows(), 0.0);
  attr.method = opts.exact ? "exact" : "sampled(" + std::to_string(opts.n_perm) + ")";

  double v_empty = 0.0;
  for (const auto& row : background.rows) v_empty += model.predict(row);
  attr.phi0 = v_empty / background.rows.size();

  auto work = [&](size_t i) {
    if (opts.exact) {
      attr.phi[i] = exact_shapley(fn, m.x[i], background);
      double f = model.predict(m.x[i]);
      attr.residuals[i] =
          f - attr.phi0 - std::accumulate(attr.phi[i].begin(), attr.phi[i].end(), 0.0);
    } else {
      uint64_t cell_seed = seed_for(opts.seed, "cell", static_cast<uint64_t>(m.cell_ids[i]));
      SampledShap s = sampled_shapley(fn, m.x[i], background, opts.n_perm, cell_seed);
      attr.phi[i] = std::move(s.phi);
      attr.residuals[i] = s.residual;
    }
  };

  size_t n_threads = opts.threads > 0 ? opts.threads : std::thread::hardware_concurrency();
  if (n_threads <= 1 || m.rows() < 2) {
    for (size_t i = 0; i < m.rows(); ++i) work(i);
  } else {
    n_threads = std::min(n_threads, m.rows());
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < m.rows(); i = next.fetch_add(1)) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  return attr;
}

// ============================================================================
// Site sharing and ranking
// ============================================================================

SiteShareMap share_to_sites(const ShapAttribution& attr, const FeatureMatrix& m,
                            std::span<const SiteRecord> sites, const HexGrid& grid) {
  if (attr.cell_ids != m.cell_ids)
    throw ConsistencyError("share: attribution and matrix cover different cells");

  // Per (cell, feature) site counts must agree with the matrix.
  std::vector<std::vector<double>> found(m.rows(), std::vector<double>(m.cols(), 0.0));
  for (const auto& s : sites) {
    auto idx = grid.index_of(s.cell);
    if (!idx || m.cell_ids[*idx] != s.cell)
      throw ConsistencyError("share: site binned to a cell outside the grid");
    if (s.feature < 0 || static_cast<size_t>(s.feature) >= m.cols())
      throw ConsistencyError("share: site feature outside the catalog");
    found[*idx][s.feature] += 1.0;
  }
  for (size_t i = 0; i < m.rows(); ++i)
    for (size_t j = 0; j < m.cols(); ++j)
      if (found[i][j] != m.x[i][j])
        throw ConsistencyError("share: site registry disagrees with matrix counts");

  SiteShareMap map;
  map.grid_fingerprint = grid.fingerprint();
  map.shares.reserve(sites.size());
  for (const auto& s : sites) {
    size_t i = *grid.index_of(s.cell);
    double count = m.x[i][s.feature];
    SiteShare share;
    share.site_id = s.id;
    share.feature = s.feature;
    share.location = s.location;
    share.cell = s.cell;
    share.phi_p = count > 0.0 ? attr.phi[i][s.feature] / count : 0.0;
    map.by_cell[s.cell].push_back(static_cast<int>(map.shares.size()));
    map.shares.push_back(share);
  }
  return map;
}

std::vector<std::pair<std::string, double>> rank_features(
    const ShapAttribution& attr, const FeatureCatalog& catalog) {
  if (attr.phi.empty()) throw EmptyInputError("rank: attribution covers no cells");
  size_t m = catalog.size();
  std::vector<std::pair<std::string, double>> out;
  out.reserve(m);
  for (size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (const auto& row : attr.phi) s += std::fabs(row[j]);
    out.emplace_back(catalog.name(j), s / attr.phi.size());
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

}  // namespace aedopt
