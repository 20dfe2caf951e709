#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aedopt/datahub.hpp"
#include "aedopt/density.hpp"
#include "aedopt/explain.hpp"
#include "aedopt/optimizer.hpp"

namespace aedopt {

// Historical scoring of deployment plans: coverage within a radius and a
// logistic survival model of AED delivery time, plus the sensitivity sweep
// over deployment scale and minimum spacing.

struct SurvivalParams {
  double intercept = -0.26;
  double aed_coef = 0.106;   // per minute of AED delivery time
  double cpr_coef = 0.139;   // per minute of CPR initiation time
  double cutoff_min = 4.0;   // survival is exactly 0 at or beyond this
  double speed_mps = 4.0;    // responder running speed
  bool cpr_equal_to_aed = true;
  double cpr_fixed_min = 0.0;  // used when cpr_equal_to_aed is false
};

// Survival for one incident given times in minutes; t_min is the AED time.
double survival_value(double t_aed_min, double t_cpr_min, const SurvivalParams& p);

struct CoverageResult {
  size_t covered = 0;
  std::vector<int64_t> covered_ids;
};

// Incidents whose nearest selected AED lies within c_r (closed inequality).
// An empty plan yields zero coverage with a warning, not an error.
CoverageResult coverage(const DeploymentPlan& plan,
                        std::span<const IncidentRecord> incidents, double c_r);

struct SurvivalResult {
  double mean = 0.0;                  // over all incidents; uncovered are 0
  std::vector<double> per_incident;
  std::vector<double> t_aed_min;
  std::vector<double> nearest_m;
};

SurvivalResult survival(const DeploymentPlan& plan,
                        std::span<const IncidentRecord> incidents,
                        const SurvivalParams& params);

// ============================================================================
// Sensitivity sweep
// ============================================================================

struct SweepInputs {
  const HexGrid* grid = nullptr;
  const SiteShareMap* shares = nullptr;
  std::span<const SiteRecord> sites;
  std::span<const IncidentRecord> incidents;
  size_t candidate_count = 5000;
  std::vector<uint64_t> set_seeds;   // one candidate set per seed
  std::vector<size_t> n_list;
  std::vector<double> d_min_list;
  std::vector<std::string> solvers;  // subset of exact/greedy/random
  double coverage_radius = 960.0;
  double site_radius = 960.0;
  SurvivalParams survival;
  ExactOptions exact;
  uint64_t master_seed = 1;
};

struct SweepCell {
  size_t set = 0;
  std::string solver;
  size_t n = 0;
  double d_min = 0.0;
  double coverage = 0.0;
  double surv = 0.0;
  double objective = 0.0;
  std::string error;  // non-empty when this cell failed
  DeploymentPlan plan;
};

struct SweepRow {
  std::string solver;
  size_t n = 0;
  double d_min = 0.0;
  double cov_mean = 0.0, cov_std = 0.0;
  double sur_mean = 0.0, sur_std = 0.0;
  double cov_pct_inc = 0.0;  // vs the random baseline at the same N
  double sur_pct_inc = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // per (set, solver, n, d_min)
  std::vector<SweepRow> rows;    // aggregated over sets
};

// For every candidate set: sample, score once, then solve and evaluate each
// (N, D_min, solver) combination. Failures abort only their own cell.
// Deterministic given the seeds. Statistics use the sample standard
// deviation (0 for a single set).
SweepResult sweep(const SweepInputs& in);

void save_sweep_csv(std::ostream& out, const SweepResult& r,
                    const std::string& meta_line = "");
void save_sweep_long_csv(std::ostream& out, const SweepResult& r,
                         const std::string& meta_line = "");

}  // namespace aedopt
