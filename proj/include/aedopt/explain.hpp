#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "aedopt/datahub.hpp"
#include "aedopt/riskmodel.hpp"

namespace aedopt {

// Shapley attribution of model predictions to features, and the sharing of
// feature-level attributions down to individual sites.

using PredictFn = std::function<double(std::span<const double>)>;

// Rows drawn from the dataset used as the substitution distribution for
// features outside the retained subset; the interventional expectation this
// induces keeps the additive reconstruction exact with phi0 = mean
// background prediction.
struct BackgroundSet {
  std::vector<std::vector<double>> rows;
  uint64_t seed = 0;

  static BackgroundSet all_rows(const FeatureMatrix& m, std::span<const CellId> ids);
  // Seeded subsample without replacement (cap >= rows -> all rows).
  static BackgroundSet sampled(const FeatureMatrix& m, std::span<const CellId> ids,
                               size_t cap, uint64_t seed);
  double column_mean(size_t j) const;
};

// Mean model output over background rows with features in `keep` taken from
// x and the rest substituted from the background row.
double value_fn(const PredictFn& model, std::span<const double> x,
                const std::vector<bool>& keep, const BackgroundSet& background);

// Exact enumeration over all feature subsets. Refuses M > 15 with a
// SizeLimitError pointing at sampled_shapley.
std::vector<double> exact_shapley(const PredictFn& model, std::span<const double> x,
                                  const BackgroundSet& background);

struct SampledShap {
  std::vector<double> phi;  // residual-normalized: phi0 + sum(phi) == f(x)
  std::vector<double> se;   // standard errors of the raw estimates
  double residual = 0.0;    // reconstruction residual before normalization
};

// Permutation-sampling estimator: average marginal contribution over n_perm
// seeded random feature orderings. Unbiased for the exact values;
// deterministic per seed.
SampledShap sampled_shapley(const PredictFn& model, std::span<const double> x,
                            const BackgroundSet& background, int n_perm,
                            uint64_t seed);

struct ShapAttribution {
  double phi0 = 0.0;
  std::vector<CellId> cell_ids;
  std::vector<std::vector<double>> phi;  // per cell, per feature
  std::string method;                    // "exact" or "sampled(n)"
  std::vector<double> residuals;         // per cell, before normalization
};

struct AttributionOptions {
  bool exact = false;
  int n_perm = 128;
  uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
};

// Attribution for every cell of the matrix. Cells are independent; each owns
// a permutation stream seeded by its cell id, so results do not depend on
// thread count or execution order.
ShapAttribution attribute_cells(const TrainedRiskModel& model, const FeatureMatrix& m,
                                const BackgroundSet& background,
                                const AttributionOptions& opts);

struct SiteShare {
  int64_t site_id = 0;
  int feature = 0;
  Vec2 location;
  CellId cell = 0;
  double phi_p = 0.0;
};

struct SiteShareMap {
  uint64_t grid_fingerprint = 0;
  std::vector<SiteShare> shares;                       // site order
  std::unordered_map<CellId, std::vector<int>> by_cell;  // indices into shares
};

// phi_p = phi_ij / X_ij, equally across the X_ij sites of type j in cell i.
// Site counts inconsistent with the matrix -> ConsistencyError.
SiteShareMap share_to_sites(const ShapAttribution& attr, const FeatureMatrix& m,
                            std::span<const SiteRecord> sites, const HexGrid& grid);

// Features ordered by mean |phi| over cells, ties broken by catalog order.
std::vector<std::pair<std::string, double>> rank_features(
    const ShapAttribution& attr, const FeatureCatalog& catalog);

}  // namespace aedopt
