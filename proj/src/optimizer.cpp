#include "aedopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "aedopt/errors.hpp"
#include "aedopt/rng.hpp"

namespace aedopt {

ConflictGraph build_conflicts(std::span<const CandidateSite> candidates, double d_min) {
  if (d_min < 0.0) throw InvalidInputError("conflicts: negative minimum spacing");
  ConflictGraph g;
  g.d_min = d_min;
  g.ids.reserve(candidates.size());
  g.pos.reserve(candidates.size());
  for (const auto& c : candidates) {
    g.ids.push_back(c.id);
    g.pos.push_back(c.location);
  }
  g.adj.assign(candidates.size(), {});
  if (d_min > 0.0) {
    const double d2 = d_min * d_min;
    for (size_t k = 0; k < candidates.size(); ++k) {
      for (size_t l = k + 1; l < candidates.size(); ++l) {
        if (dist2(g.pos[k], g.pos[l]) < d2) {
          g.adj[k].push_back(static_cast<int>(l));
          g.adj[l].push_back(static_cast<int>(k));
          ++g.edge_count;
        }
      }
    }
  }
  return g;
}

std::vector<int64_t> DeploymentPlan::selected_ids() const {
  std::vector<int64_t> ids;
  ids.reserve(selected.size());
  for (const auto& s : selected) ids.push_back(s.id);
  return ids;
}

namespace {

// Ordering used by both solvers: score descending, candidate id ascending.
std::vector<int> solver_order(const ConflictGraph& g, std::span<const double> scores) {
  std::vector<int> order(g.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return g.ids[a] < g.ids[b];
  });
  return order;
}

DeploymentPlan finish_plan(const ConflictGraph& g, std::span<const double> scores,
                           std::vector<int> picked, std::string solver, size_t n,
                           bool enforced) {
  std::sort(picked.begin(), picked.end(),
            [&](int a, int b) { return g.ids[a] < g.ids[b]; });
  DeploymentPlan plan;
  plan.solver = std::move(solver);
  plan.n_max = n;
  plan.d_min = g.d_min;
  plan.spacing_enforced = enforced;
  plan.objective = 0.0;
  for (int k : picked) {
    plan.selected.push_back({g.ids[k], g.pos[k], scores[k]});
    plan.objective += scores[k];
  }
  plan.spacing_ok = true;
  for (size_t a = 0; a < picked.size() && plan.spacing_ok; ++a)
    for (size_t b = a + 1; b < picked.size(); ++b)
      if (g.conflicts(picked[a], picked[b])) {
        plan.spacing_ok = false;
        break;
      }
  return plan;
}

struct BranchState {
  const ConflictGraph* g;
  std::span<const double> scores;
  std::vector<int> order;                  // score-desc, id-asc
  std::vector<std::vector<uint64_t>> adj;  // conflict bitsets in order space
  size_t n_positive = 0;
  uint64_t nodes = 0;
  uint64_t budget = 0;
  double best = 0.0;
  std::vector<int> best_set;   // order indices
  std::vector<int> cur_set;
  std::vector<uint64_t> cur_mask;

  // Admissible upper bound on what the remaining candidates can add: the top
  // remaining positive scores, truncated to the cardinality budget, skipping
  // candidates that already conflict with the current selection (any feasible
  // completion must skip them too).
  double bound_from(size_t i, size_t budget_left) const {
    double sum = 0.0;
    size_t taken = 0;
    for (size_t j = i; j < n_positive && taken < budget_left; ++j) {
      const auto& row = adj[j];
      bool blocked = false;
      for (size_t w = 0; w < row.size(); ++w)
        if (row[w] & cur_mask[w]) {
          blocked = true;
          break;
        }
      if (blocked) continue;
      sum += scores[order[j]];
      ++taken;
    }
    return sum;
  }

  void dfs(size_t i, size_t budget_left, double cur) {
    if (++nodes > budget)
      throw ResourceBudgetError(
          "exact solver: node budget exhausted (incumbent " + std::to_string(best) +
              ", gap <= " + std::to_string(bound_from(i, budget_left)) + ")",
          best, bound_from(i, budget_left));
    if (cur > best) {
      best = cur;
      best_set = cur_set;
    }
    if (i >= order.size() || budget_left == 0) return;
    if (i >= n_positive) return;  // only non-positive scores remain
    if (cur + bound_from(i, budget_left) <= best) return;

    int k = order[i];
    bool feasible = true;
    const auto& row = adj[i];
    for (size_t w = 0; w < row.size(); ++w)
      if (row[w] & cur_mask[w]) {
        feasible = false;
        break;
      }
    if (feasible) {
      cur_set.push_back(k);
      cur_mask[i >> 6] |= 1ull << (i & 63);
      dfs(i + 1, budget_left - 1, cur + scores[k]);
      cur_mask[i >> 6] &= ~(1ull << (i & 63));
      cur_set.pop_back();
    }
    dfs(i + 1, budget_left, cur);
  }
};

}  // namespace

DeploymentPlan solve_exact(const ConflictGraph& graph, std::span<const double> scores,
                           size_t n, const ExactOptions& opts) {
  if (scores.size() != graph.size())
    throw InvalidInputError("exact solver: score count != candidate count");
  if (graph.size() > opts.max_candidates)
    throw SizeLimitError("exact solver: instance exceeds " +
                         std::to_string(opts.max_candidates) +
                         " candidates; use the greedy solver");

  BranchState st;
  st.g = &graph;
  st.scores = scores;
  st.order = solver_order(graph, scores);
  st.budget = opts.node_budget;

  const size_t k = graph.size();
  while (st.n_positive < k && scores[st.order[st.n_positive]] > 0.0) ++st.n_positive;

  // Conflict bitsets in order space.
  const size_t words = (k + 63) / 64;
  std::vector<int> where(k);
  for (size_t i = 0; i < k; ++i) where[st.order[i]] = static_cast<int>(i);
  st.adj.assign(k, std::vector<uint64_t>(words, 0));
  for (size_t a = 0; a < k; ++a)
    for (int b : graph.adj[a]) {
      size_t ia = where[a], ib = where[b];
      st.adj[ia][ib >> 6] |= 1ull << (ib & 63);
    }

  st.cur_mask.assign(words, 0);
  st.dfs(0, n, 0.0);

  return finish_plan(graph, scores, st.best_set, "exact", n, true);
}

DeploymentPlan solve_greedy(const ConflictGraph& graph, std::span<const double> scores,
                            size_t n) {
  if (scores.size() != graph.size())
    throw InvalidInputError("greedy solver: score count != candidate count");
  std::vector<int> order = solver_order(graph, scores);
  std::vector<int> picked;
  for (int k : order) {
    if (picked.size() >= n) break;
    if (!(scores[k] > 0.0)) break;  // order is score-descending
    bool ok = true;
    for (int s : picked)
      if (graph.conflicts(k, s)) {
        ok = false;
        break;
      }
    if (ok) picked.push_back(k);
  }
  return finish_plan(graph, scores, std::move(picked), "greedy", n, true);
}

DeploymentPlan solve_random(std::span<const CandidateSite> candidates, size_t n,
                            uint64_t seed) {
  if (n > candidates.size())
    throw InvalidInputError("random solver: N exceeds candidate count");
  std::vector<size_t> idx(candidates.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (size_t i = 0; i < n; ++i) {
    size_t j = i + static_cast<size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<size_t> picked(idx.begin(), idx.begin() + n);
  std::sort(picked.begin(), picked.end(), [&](size_t a, size_t b) {
    return candidates[a].id < candidates[b].id;
  });

  DeploymentPlan plan;
  plan.solver = "random";
  plan.n_max = n;
  plan.d_min = 0.0;
  plan.spacing_enforced = false;
  plan.spacing_ok = true;  // no spacing constraint was applied
  for (size_t k : picked) {
    plan.selected.push_back({candidates[k].id, candidates[k].location,
                             candidates[k].score});
    plan.objective += candidates[k].score;
  }
  return plan;
}

std::string plan_to_json(const DeploymentPlan& plan, const Projection& proj,
                         const std::string& meta_json) {
  nlohmann::json j;
  if (!meta_json.empty()) j["meta"] = nlohmann::json::parse(meta_json);
  j["solver"] = plan.solver;
  j["n_max"] = plan.n_max;
  j["d_min_m"] = plan.d_min;
  j["objective"] = plan.objective;
  j["spacing_enforced"] = plan.spacing_enforced;
  j["spacing_ok"] = plan.spacing_ok;
  j["selected"] = nlohmann::json::array();
  for (const auto& s : plan.selected) {
    auto [lat, lon] = proj.to_latlon(s.location);
    j["selected"].push_back({{"id", s.id},
                             {"x", s.location.x},
                             {"y", s.location.y},
                             {"lat", lat},
                             {"lon", lon},
                             {"score", s.score}});
  }
  return j.dump(1);
}

DeploymentPlan plan_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  DeploymentPlan plan;
  plan.solver = j.at("solver").get<std::string>();
  plan.n_max = j.at("n_max").get<size_t>();
  plan.d_min = j.at("d_min_m").get<double>();
  plan.objective = j.at("objective").get<double>();
  plan.spacing_enforced = j.at("spacing_enforced").get<bool>();
  plan.spacing_ok = j.at("spacing_ok").get<bool>();
  for (const auto& s : j.at("selected")) {
    plan.selected.push_back({s.at("id").get<int64_t>(),
                             {s.at("x").get<double>(), s.at("y").get<double>()},
                             s.at("score").get<double>()});
  }
  return plan;
}

}  // namespace aedopt
