#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aedopt/density.hpp"

namespace aedopt {

// Cardinality-constrained maximum-weight selection with pairwise spacing
// conflicts: max sum(S_k z_k) s.t. |selected| <= N and no selected pair
// closer than D_min. Pairs at exactly D_min are feasible (conflicts use a
// strict inequality).

struct ConflictGraph {
  std::vector<int64_t> ids;
  std::vector<Vec2> pos;
  double d_min = 0.0;
  std::vector<std::vector<int>> adj;  // sorted neighbor indices
  size_t edge_count = 0;

  size_t size() const { return ids.size(); }
  bool conflicts(int a, int b) const {
    return dist2(pos[a], pos[b]) < d_min * d_min;
  }
};

// O(K^2) pairwise build. D_min < 0 is an InvalidInputError; D_min = 0 yields
// no edges.
ConflictGraph build_conflicts(std::span<const CandidateSite> candidates, double d_min);

struct SelectedSite {
  int64_t id = 0;
  Vec2 location;
  double score = 0.0;
};

struct DeploymentPlan {
  std::string solver;  // "exact", "greedy", "random"
  size_t n_max = 0;
  double d_min = 0.0;
  std::vector<SelectedSite> selected;  // sorted by id
  double objective = 0.0;
  bool spacing_enforced = false;
  bool spacing_ok = false;  // min selected pairwise distance >= d_min

  std::vector<int64_t> selected_ids() const;
};

struct ExactOptions {
  size_t max_candidates = 200;       // guaranteed-budget instance size
  uint64_t node_budget = 50000000;  // branch-and-bound node limit
};

// Global optimum by branch and bound: branch on the highest-score undecided
// candidate (ties toward lower id), include-branch first, upper bound =
// current value + sum of the top remaining non-negative scores up to the
// remaining cardinality budget. Candidates with non-positive scores are
// never selected. K > max_candidates -> SizeLimitError; node budget
// exhausted -> ResourceBudgetError with incumbent and gap.
DeploymentPlan solve_exact(const ConflictGraph& graph, std::span<const double> scores,
                           size_t n, const ExactOptions& opts = {});

// Highest-score feasible candidate first until N placed or none feasible;
// always spacing-feasible.
DeploymentPlan solve_greedy(const ConflictGraph& graph, std::span<const double> scores,
                            size_t n);

// Uniform N-subset baseline; spacing deliberately not enforced.
DeploymentPlan solve_random(std::span<const CandidateSite> candidates, size_t n,
                            uint64_t seed);

std::string plan_to_json(const DeploymentPlan& plan, const Projection& proj,
                         const std::string& meta_json = "");
DeploymentPlan plan_from_json(const std::string& text);

}  // namespace aedopt
