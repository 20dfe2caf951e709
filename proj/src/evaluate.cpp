#include "aedopt/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>

#include "aedopt/csvio.hpp"
#include "aedopt/errors.hpp"
#include "aedopt/rng.hpp"

namespace aedopt {

double survival_value(double t_aed_min, double t_cpr_min, const SurvivalParams& p) {
  double t_min = t_aed_min;
  if (t_min >= p.cutoff_min) return 0.0;
  double z = p.intercept + p.aed_coef * t_aed_min + p.cpr_coef * t_cpr_min;
  return 1.0 / (1.0 + std::exp(z));
}

namespace {

double nearest_selected_m(const DeploymentPlan& plan, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : plan.selected) best = std::min(best, dist2(s.location, p));
  return std::sqrt(best);
}

}  // namespace

CoverageResult coverage(const DeploymentPlan& plan,
                        std::span<const IncidentRecord> incidents, double c_r) {
  if (!(c_r > 0.0)) throw InvalidInputError("coverage: radius must be > 0");
  CoverageResult out;
  if (plan.selected.empty()) {
    std::cerr << "warning: coverage of an empty plan is zero\n";
    return out;
  }
  for (const auto& h : incidents) {
    if (nearest_selected_m(plan, h.location) <= c_r) {
      ++out.covered;
      out.covered_ids.push_back(h.id);
    }
  }
  return out;
}

SurvivalResult survival(const DeploymentPlan& plan,
                        std::span<const IncidentRecord> incidents,
                        const SurvivalParams& params) {
  if (!(params.speed_mps > 0.0) || !(params.cutoff_min > 0.0))
    throw InvalidInputError("survival: speed and cutoff must be > 0");
  SurvivalResult out;
  out.per_incident.reserve(incidents.size());
  out.t_aed_min.reserve(incidents.size());
  out.nearest_m.reserve(incidents.size());
  if (plan.selected.empty())
    std::cerr << "warning: survival of an empty plan is zero\n";

  double sum = 0.0;
  for (const auto& h : incidents) {
    double d = plan.selected.empty() ? std::numeric_limits<double>::infinity()
                                     : nearest_selected_m(plan, h.location);
    double t_aed = d / (params.speed_mps * 60.0);
    double t_cpr = params.cpr_equal_to_aed ? t_aed : params.cpr_fixed_min;
    double s = std::isfinite(t_aed) ? survival_value(t_aed, t_cpr, params) : 0.0;
    out.nearest_m.push_back(d);
    out.t_aed_min.push_back(t_aed);
    out.per_incident.push_back(s);
    sum += s;
  }
  out.mean = incidents.empty() ? 0.0 : sum / incidents.size();
  return out;
}

// ============================================================================
// Sweep
// ============================================================================

SweepResult sweep(const SweepInputs& in) {
  if (!in.grid || !in.shares) throw InvalidInputError("sweep: missing grid or shares");
  if (in.set_seeds.empty() || in.n_list.empty() || in.d_min_list.empty() ||
      in.solvers.empty())
    throw InvalidInputError("sweep: empty sweep lists");

  SweepResult result;
  for (size_t set = 0; set < in.set_seeds.size(); ++set) {
    std::vector<CandidateSite> scored;
    try {
      auto cand =
          sample_candidates(in.sites, in.candidate_count, in.set_seeds[set], in.site_radius);
      scored = score_all(std::move(cand), *in.grid, *in.shares);
    } catch (const Error& e) {
      // The whole set is unusable; record one error cell per combination.
      for (const auto& solver : in.solvers)
        for (size_t n : in.n_list)
          for (double d : in.d_min_list) {
            SweepCell cell;
            cell.set = set;
            cell.solver = solver;
            cell.n = n;
            cell.d_min = d;
            cell.error = e.what();
            result.cells.push_back(std::move(cell));
          }
      continue;
    }
    std::vector<double> scores(scored.size());
    for (size_t i = 0; i < scored.size(); ++i) scores[i] = scored[i].score;

    // Random baseline is independent of spacing: solve once per N.
    std::map<size_t, DeploymentPlan> random_plans;
    for (size_t n : in.n_list)
      random_plans.emplace(
          n, solve_random(scored, n, seed_for(in.master_seed, "random-plan",
                                              set * 1000003ull + n)));

    for (double d : in.d_min_list) {
      ConflictGraph graph = build_conflicts(scored, d);
      for (size_t n : in.n_list) {
        for (const auto& solver : in.solvers) {
          SweepCell cell;
          cell.set = set;
          cell.solver = solver;
          cell.n = n;
          cell.d_min = d;
          try {
            if (solver == "exact")
              cell.plan = solve_exact(graph, scores, n, in.exact);
            else if (solver == "greedy")
              cell.plan = solve_greedy(graph, scores, n);
            else if (solver == "random")
              cell.plan = random_plans.at(n);
            else
              throw InvalidInputError("sweep: unknown solver '" + solver + "'");
            cell.objective = cell.plan.objective;
            cell.coverage = static_cast<double>(
                coverage(cell.plan, in.incidents, in.coverage_radius).covered);
            cell.surv = survival(cell.plan, in.incidents, in.survival).mean;
          } catch (const Error& e) {
            cell.error = e.what();
          }
          result.cells.push_back(std::move(cell));
        }
      }
    }
  }

  // Aggregate over sets.
  struct Key {
    std::string solver;
    size_t n;
    double d_min;
    bool operator<(const Key& o) const {
      if (solver != o.solver) return solver < o.solver;
      if (n != o.n) return n < o.n;
      return d_min < o.d_min;
    }
  };
  std::map<Key, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& c : result.cells) {
    if (!c.error.empty()) continue;
    auto& g = groups[{c.solver, c.n, c.d_min}];
    g.first.push_back(c.coverage);
    g.second.push_back(c.surv);
  }
  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    if (v.size() > 1) {
      for (double x : v) var += (x - mean) * (x - mean);
      var /= (v.size() - 1);
    }
    return std::pair{mean, std::sqrt(var)};
  };
  for (const auto& [key, g] : groups) {
    SweepRow row;
    row.solver = key.solver;
    row.n = key.n;
    row.d_min = key.d_min;
    std::tie(row.cov_mean, row.cov_std) = mean_std(g.first);
    std::tie(row.sur_mean, row.sur_std) = mean_std(g.second);
    result.rows.push_back(std::move(row));
  }
  // Percent increase vs the random baseline at the same N.
  for (auto& row : result.rows) {
    if (row.solver == "random") continue;
    auto it = groups.find({"random", row.n, row.d_min});
    if (it == groups.end()) continue;
    auto [rc, rs] = std::pair{mean_std(it->second.first), mean_std(it->second.second)};
    if (rc.first > 0.0) row.cov_pct_inc = 100.0 * (row.cov_mean - rc.first) / rc.first;
    if (rs.first > 0.0) row.sur_pct_inc = 100.0 * (row.sur_mean - rs.first) / rs.first;
  }
  return result;
}

void save_sweep_csv(std::ostream& out, const SweepResult& r,
                    const std::string& meta_line) {
  if (!meta_line.empty()) out << meta_line << "\n";
  out << "solver,n,d_min_m,coverage_mean,coverage_std,survival_mean,survival_std,"
         "pct_increase_vs_random\n";
  for (const auto& row : r.rows) {
    out << row.solver << "," << row.n << "," << fmt_double(row.d_min) << ","
        << fmt_double(row.cov_mean) << "," << fmt_double(row.cov_std) << ","
        << fmt_double(row.sur_mean) << "," << fmt_double(row.sur_std) << ","
        << fmt_double(row.cov_pct_inc) << "\n";
  }
}

void save_sweep_long_csv(std::ostream& out, const SweepResult& r,
                         const std::string& meta_line) {
  if (!meta_line.empty()) out << meta_line << "\n";
  out << "set,solver,n,d_min_m,coverage,survival,objective,error\n";
  for (const auto& c : r.cells) {
    out << c.set << "," << c.solver << "," << c.n << "," << fmt_double(c.d_min) << ","
        << fmt_double(c.coverage) << "," << fmt_double(c.surv) << ","
        << fmt_double(c.objective) << "," << c.error << "\n";
  }
}

}  // namespace aedopt
