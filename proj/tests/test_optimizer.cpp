#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "aedopt/errors.hpp"
#include "aedopt/optimizer.hpp"
#include "aedopt/rng.hpp"

using namespace aedopt;

namespace {

std::vector<CandidateSite> candidates_at(const std::vector<Vec2>& pos) {
  std::vector<CandidateSite> out;
  for (size_t i = 0; i < pos.size(); ++i)
    out.push_back({static_cast<int64_t>(i + 1), pos[i], 960.0, 0.0});
  return out;
}

struct Instance {
  std::vector<CandidateSite> cands;
  std::vector<double> scores;
  double d_min;
};

Instance random_instance(uint64_t seed, int k_max, bool allow_negative = true) {
  Rng rng(seed);
  Instance inst;
  int k = 4 + static_cast<int>(rng.below(k_max - 3));
  std::vector<Vec2> pos;
  for (int i = 0; i < k; ++i)
    pos.push_back({rng.uniform(0.0, 3000.0), rng.uniform(0.0, 3000.0)});
  inst.cands = candidates_at(pos);
  for (int i = 0; i < k; ++i)
    inst.scores.push_back(allow_negative ? rng.normal() + 0.5
                                         : rng.uniform(0.1, 5.0));
  const double choices[3] = {0.0, 400.0, 1500.0};
  inst.d_min = choices[rng.below(3)];
  return inst;
}

// Exhaustive subset search; the reference for the exact solver.
double brute_force_best(const ConflictGraph& g, const std::vector<double>& scores,
                        size_t n) {
  size_t k = g.size();
  std::vector<uint32_t> conflict(k, 0);
  for (size_t a = 0; a < k; ++a)
    for (int b : g.adj[a]) conflict[a] |= 1u << b;
  double best = 0.0;
  for (uint32_t mask = 0; mask < (1u << k); ++mask) {
    if (static_cast<size_t>(std::popcount(mask)) > n) continue;
    bool ok = true;
    double val = 0.0;
    for (size_t a = 0; a < k && ok; ++a) {
      if (!((mask >> a) & 1u)) continue;
      if (conflict[a] & mask) ok = false;
      val += scores[a];
    }
    if (ok) best = std::max(best, val);
  }
  return best;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("conflict edges use a strict distance inequality") {
  auto cands = candidates_at({{0, 0}, {1000, 0}});
  ConflictGraph close = build_conflicts(cands, 1200.0);
  CHECK(close.edge_count == 1);
  CHECK(close.conflicts(0, 1));

  // A pair exactly at the minimum spacing is feasible.
  ConflictGraph at = build_conflicts(cands, 1000.0);
  CHECK(at.edge_count == 0);
  CHECK_FALSE(at.conflicts(0, 1));

  ConflictGraph zero = build_conflicts(cands, 0.0);
  CHECK(zero.edge_count == 0);

  CHECK_THROWS_AS(build_conflicts(cands, -1.0), InvalidInputError);
}

TEST_CASE("edge set equals a brute-force distance check") {
  Rng rng(8080);
  std::vector<Vec2> pos;
  for (int i = 0; i < 100; ++i)
    pos.push_back({rng.uniform(0.0, 5000.0), rng.uniform(0.0, 5000.0)});
  auto cands = candidates_at(pos);
  double d_min = 700.0;
  ConflictGraph g = build_conflicts(cands, d_min);
  for (size_t a = 0; a < g.size(); ++a)
    for (size_t b = 0; b < g.size(); ++b) {
      if (a == b) continue;
      bool listed = std::binary_search(g.adj[a].begin(), g.adj[a].end(),
                                       static_cast<int>(b));
      bool expected = dist(pos[a], pos[b]) < d_min;
      CHECK(listed == expected);
    }
}

TEST_CASE("worked example: chain conflicts") {
  // Scores 5, 4, 3 with conflicts 1-2 and 2-3; two to place.
  auto cands = candidates_at({{0, 0}, {500, 0}, {1000, 0}});
  ConflictGraph g = build_conflicts(cands, 600.0);
  REQUIRE(g.edge_count == 2);
  std::vector<double> scores = {5.0, 4.0, 3.0};

  DeploymentPlan exact = solve_exact(g, scores, 2);
  CHECK(exact.selected_ids() == std::vector<int64_t>{1, 3});
  CHECK(exact.objective == doctest::Approx(8.0));
  CHECK(brute_force_best(g, scores, 2) == doctest::Approx(8.0));

  DeploymentPlan greedy = solve_greedy(g, scores, 2);
  CHECK(greedy.selected_ids() == std::vector<int64_t>{1, 3});
  CHECK(greedy.objective == doctest::Approx(8.0));
}

TEST_CASE("unconstrained instance selects everything positive") {
  auto cands = candidates_at({{0, 0}, {5000, 0}, {0, 5000}, {5000, 5000}});
  ConflictGraph g = build_conflicts(cands, 100.0);
  std::vector<double> scores = {1.0, 2.0, 3.0, 4.0};
  DeploymentPlan plan = solve_exact(g, scores, 10);
  CHECK(plan.selected.size() == 4);
  CHECK(plan.objective == doctest::Approx(10.0));

  // Non-positive scores are left on the table even with budget to spare.
  scores = {1.0, -2.0, 3.0, 0.0};
  plan = solve_exact(g, scores, 10);
  CHECK(plan.selected_ids() == std::vector<int64_t>{1, 3});
  DeploymentPlan greedy = solve_greedy(g, scores, 10);
  CHECK(greedy.selected_ids() == std::vector<int64_t>{1, 3});
}

TEST_CASE("exact solver equals exhaustive enumeration on random instances") {
  for (uint64_t seed = 0; seed < 60; ++seed) {
    Instance inst = random_instance(1000 + seed, 12);
    ConflictGraph g = build_conflicts(inst.cands, inst.d_min);
    size_t n = 1 + static_cast<size_t>(seed % 6);
    DeploymentPlan plan = solve_exact(g, inst.scores, n);
    double best = brute_force_best(g, inst.scores, n);
    CHECK(std::fabs(plan.objective - best) <= 1e-9);
    CHECK(plan.selected.size() <= n);
    CHECK(plan.spacing_ok);
  }
}

TEST_CASE("greedy is feasible and never beats exact") {
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Instance inst = random_instance(2000 + seed, 12);
    ConflictGraph g = build_conflicts(inst.cands, inst.d_min);
    size_t n = 1 + static_cast<size_t>(seed % 5);
    DeploymentPlan greedy = solve_greedy(g, inst.scores, n);
    DeploymentPlan exact = solve_exact(g, inst.scores, n);
    CHECK(greedy.objective <= exact.objective + 1e-9);
    CHECK(greedy.selected.size() <= n);
    CHECK(greedy.spacing_ok);
    // Feasibility double-check against raw distances.
    for (size_t a = 0; a < greedy.selected.size(); ++a)
      for (size_t b = a + 1; b < greedy.selected.size(); ++b)
        CHECK(dist(greedy.selected[a].location, greedy.selected[b].location) >=
              inst.d_min);
  }
}

TEST_CASE("random baseline: exhaustive take, determinism, inferior mean") {
  Instance inst;
  Rng rng(31);
  std::vector<Vec2> pos;
  for (int i = 0; i < 30; ++i)
    pos.push_back({rng.uniform(0.0, 3000.0), rng.uniform(0.0, 3000.0)});
  inst.cands = candidates_at(pos);
  for (int i = 0; i < 30; ++i) inst.scores.push_back(rng.uniform(0.1, 5.0));
  inst.d_min = 0.0;

  auto all = solve_random(inst.cands, inst.cands.size(), 4);
  CHECK(all.selected.size() == inst.cands.size());

  auto a = solve_random(inst.cands, 5, 42);
  auto b = solve_random(inst.cands, 5, 42);
  CHECK(a.selected_ids() == b.selected_ids());
  CHECK_FALSE(a.spacing_enforced);

  CHECK_THROWS_AS(solve_random(inst.cands, inst.cands.size() + 1, 1), InvalidInputError);

  // Stash scores on the candidates so the random objective is meaningful.
  for (size_t i = 0; i < inst.cands.size(); ++i) inst.cands[i].score = inst.scores[i];
  ConflictGraph g = build_conflicts(inst.cands, 0.0);
  DeploymentPlan exact = solve_exact(g, inst.scores, 5);
  double sum = 0.0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) sum += solve_random(inst.cands, 5, 5000 + t).objective;
  CHECK(sum / trials < exact.objective);
}

TEST_CASE("objective is monotone in N and antitone in D_min") {
  Instance inst = random_instance(777, 16, false);
  // Monotone in N.
  ConflictGraph g = build_conflicts(inst.cands, 400.0);
  double prev = -1.0;
  for (size_t n = 1; n <= inst.cands.size(); ++n) {
    double obj = solve_exact(g, inst.scores, n).objective;
    CHECK(obj >= prev - 1e-12);
    prev = obj;
  }
  // Antitone in D_min.
  prev = std::numeric_limits<double>::infinity();
  for (double d : {0.0, 200.0, 500.0, 900.0, 1500.0, 3000.0}) {
    ConflictGraph gd = build_conflicts(inst.cands, d);
    double obj = solve_exact(gd, inst.scores, 4).objective;
    CHECK(obj <= prev + 1e-12);
    prev = obj;
  }
}

TEST_CASE("selection is invariant to positive scaling of scores") {
  Instance inst = random_instance(555, 14);
  ConflictGraph g = build_conflicts(inst.cands, 400.0);
  DeploymentPlan base = solve_exact(g, inst.scores, 4);
  for (double c : {2.0, 0.25, 16.0}) {
    std::vector<double> scaled = inst.scores;
    for (double& v : scaled) v *= c;
    DeploymentPlan plan = solve_exact(g, scaled, 4);
    CHECK(plan.selected_ids() == base.selected_ids());
  }
}

TEST_CASE("instance and budget limits raise typed errors") {
  Instance inst = random_instance(9, 14, false);
  ConflictGraph g = build_conflicts(inst.cands, 400.0);
  ExactOptions tiny;
  tiny.max_candidates = 3;
  CHECK_THROWS_AS(solve_exact(g, inst.scores, 2, tiny), SizeLimitError);

  ExactOptions starved;
  starved.node_budget = 2;
  CHECK_THROWS_AS(solve_exact(g, inst.scores, 3, starved), ResourceBudgetError);
  try {
    solve_exact(g, inst.scores, 3, starved);
  } catch (const ResourceBudgetError& e) {
    CHECK(e.incumbent >= 0.0);
    CHECK(e.gap >= 0.0);
  }
}

TEST_CASE("plan JSON round trip") {
  Instance inst = random_instance(88, 10, false);
  ConflictGraph g = build_conflicts(inst.cands, 300.0);
  DeploymentPlan plan = solve_exact(g, inst.scores, 3);
  Projection proj{36.75, -76.05};
  DeploymentPlan loaded = plan_from_json(plan_to_json(plan, proj, "{\"seed\":3}"));
  CHECK(loaded.solver == plan.solver);
  CHECK(loaded.selected_ids() == plan.selected_ids());
  CHECK(loaded.objective == plan.objective);
  CHECK(loaded.d_min == plan.d_min);
}

}  // TEST_SUITE
