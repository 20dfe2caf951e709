#include "aedopt/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "aedopt/csvio.hpp"
#include "aedopt/datahub.hpp"
#include "aedopt/density.hpp"
#include "aedopt/evaluate.hpp"
#include "aedopt/explain.hpp"
#include "aedopt/hexgrid.hpp"
#include "aedopt/optimizer.hpp"
#include "aedopt/riskmodel.hpp"
#include "aedopt/rng.hpp"

namespace fs = std::filesystem;

namespace aedopt {

namespace {

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

std::string out_dir(const RunConfig& cfg) { return cfg.str("out_dir", "out"); }

std::string out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(out_dir(cfg));
  return (fs::path(out_dir(cfg)) / name).string();
}

std::string hex16(uint64_t v) {
  char buf[17];
  snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string meta_line(const RunConfig& cfg) {
  return "# config_hash=" + hex16(cfg.hash()) +
         " seed=" + std::to_string(cfg.master_seed());
}

std::string meta_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["config_hash"] = hex16(cfg.hash());
  j["seed"] = cfg.master_seed();
  return j.dump();
}

Projection projection_from(const RunConfig& cfg) {
  Projection p;
  p.origin_lat = cfg.num("origin_lat", 36.75);
  p.origin_lon = cfg.num("origin_lon", -76.05);
  return p;
}

HexGrid grid_from(const RunConfig& cfg) {
  BoundingBox bbox;
  bbox.min = {cfg.num("bbox_min_x", 0.0), cfg.num("bbox_min_y", 0.0)};
  bbox.max = {cfg.num("bbox_max_x", 42000.0), cfg.num("bbox_max_y", 40000.0)};
  return HexGrid::build(bbox, cfg.num("grid_edge_m", kDefaultEdgeLen));
}

FeatureCatalog catalog_from(const RunConfig& cfg) {
  if (cfg.has("features")) return FeatureCatalog::from_names(cfg.str_list("features", {}));
  return FeatureCatalog::default_catalog();
}

Hyper hyper_from(const RunConfig& cfg) {
  Hyper h;
  h.hidden1 = static_cast<int>(cfg.integer("hidden1", 64));
  h.hidden2 = static_cast<int>(cfg.integer("hidden2", 32));
  h.learning_rate = cfg.num("learning_rate", 1e-3);
  h.momentum = cfg.num("momentum", 0.9);
  h.epochs = static_cast<int>(cfg.integer("epochs", 2000));
  h.batch_size = static_cast<int>(cfg.integer("batch_size", 16));
  h.seed = seed_for(cfg.master_seed(), "train");
  return h;
}

SurvivalParams survival_from(const RunConfig& cfg) {
  SurvivalParams p;
  p.speed_mps = cfg.num("responder_speed_mps", 4.0);
  p.cutoff_min = cfg.num("time_cutoff_min", 4.0);
  std::string rule = cfg.str("cpr_rule", "equal");
  if (rule == "equal") {
    p.cpr_equal_to_aed = true;
  } else if (rule == "fixed") {
    p.cpr_equal_to_aed = false;
    p.cpr_fixed_min = cfg.num("cpr_fixed_min", 0.0);
  } else {
    throw ConfigError("config: cpr_rule must be 'equal' or 'fixed'");
  }
  return p;
}

double coverage_radius(const RunConfig& cfg) { return cfg.num("coverage_radius_m", 960.0); }
double site_radius(const RunConfig& cfg) {
  return cfg.num("site_radius_m", coverage_radius(cfg));
}

// ---------------------------------------------------------------------------
// Artifact IO
// ---------------------------------------------------------------------------

void write_file(const std::string& path, const std::string& content) {
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  return in;
}

std::string sites_path(const RunConfig& cfg) { return cfg.require_str("sites_path"); }

std::string incidents_path(const RunConfig& cfg) {
  return cfg.require_str("incidents_path");
}

GenParams gen_params_from(const RunConfig& cfg, const FeatureCatalog& catalog) {
  GenParams p;
  size_t m = catalog.size();
  auto intensity = cfg.num_list("synth_intensity", {4.0});
  auto weights = cfg.num_list("synth_weights", {1.0});
  p.intensity = intensity.size() == 1 ? std::vector<double>(m, intensity[0]) : intensity;
  p.weights = weights.size() == 1 ? std::vector<double>(m, weights[0]) : weights;
  p.bias = cfg.num("synth_bias", 0.0);
  p.saturation_cap = cfg.num("synth_saturation", 0.0);
  if (p.intensity.size() != m || p.weights.size() != m)
    throw ConfigError("config: synth_intensity/synth_weights must match feature count");
  return p;
}

FeatureMatrix load_matrix(const RunConfig& cfg, const HexGrid& grid) {
  auto in = open_input(out_path(cfg, "matrix.csv"));
  return load_matrix_csv(in, grid);
}

// Share rows persist everything needed to rebuild both the share map and the
// site registry used for candidate sampling.
struct LoadedShares {
  SiteShareMap map;
  std::vector<SiteRecord> sites;
};

LoadedShares load_shares(const RunConfig& cfg, const HexGrid& grid,
                         const FeatureCatalog& catalog, const Projection& proj) {
  auto in = open_input(out_path(cfg, "site_shares.csv"));
  LoadedShares out;
  out.map.grid_fingerprint = grid.fingerprint();
  std::string line;
  if (!next_data_line(in, line)) throw EmptyInputError("shares: empty file");
  auto header = split_csv(line);
  if (header.size() != 5 || header[0] != "site_id")
    throw InvalidInputError("shares: bad header");
  while (next_data_line(in, line)) {
    auto f = split_csv(line);
    long long id;
    double lat, lon, phi;
    if (f.size() != 5 || !parse_long(f[0], id) || !parse_double(f[2], lat) ||
        !parse_double(f[3], lon) || !parse_double(f[4], phi))
      throw InvalidInputError("shares: unparsable row");
    int feature = catalog.find(f[1]);
    if (feature < 0) throw ConsistencyError("shares: unknown feature '" + f[1] + "'");
    Vec2 p = proj.to_xy(lat, lon);
    CellId cell = grid.locate(p);

    SiteShare share{id, feature, p, cell, phi};
    out.map.by_cell[cell].push_back(static_cast<int>(out.map.shares.size()));
    out.map.shares.push_back(share);
    out.sites.push_back({id, feature, p, cell});
  }
  if (out.sites.empty()) throw EmptyInputError("shares: no rows");
  return out;
}

std::vector<CandidateSite> load_scored(const RunConfig& cfg, const Projection& proj) {
  auto in = open_input(out_path(cfg, "candidates_scored.csv"));
  std::vector<CandidateSite> out;
  std::string line;
  if (!next_data_line(in, line)) throw EmptyInputError("candidates: empty file");
  auto header = split_csv(line);
  if (header.size() != 4 || header[0] != "candidate_id")
    throw InvalidInputError("candidates: bad header");
  double radius = site_radius(cfg);
  while (next_data_line(in, line)) {
    auto f = split_csv(line);
    long long id;
    double lat, lon, s;
    if (f.size() != 4 || !parse_long(f[0], id) || !parse_double(f[1], lat) ||
        !parse_double(f[2], lon) || !parse_double(f[3], s))
      throw InvalidInputError("candidates: unparsable row");
    out.push_back({id, proj.to_xy(lat, lon), radius, s});
  }
  if (out.empty()) throw EmptyInputError("candidates: no rows");
  return out;
}

ExactOptions exact_from(const RunConfig& cfg) {
  ExactOptions o;
  o.max_candidates = static_cast<size_t>(cfg.integer("exact_max_candidates", 200));
  o.node_budget = static_cast<uint64_t>(cfg.integer("exact_node_budget", 50000000));
  return o;
}

}  // namespace

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

void run_grid(const RunConfig& cfg) {
  HexGrid grid = grid_from(cfg);
  write_file(out_path(cfg, "grid.geojson"),
             grid_to_geojson(grid, projection_from(cfg), meta_json(cfg)));
}

void run_synth(const RunConfig& cfg) {
  HexGrid grid = grid_from(cfg);
  FeatureCatalog catalog = catalog_from(cfg);
  Projection proj = projection_from(cfg);
  GenParams params = gen_params_from(cfg, catalog);

  SynthCity city = synth_city(seed_for(cfg.master_seed(), "synth"), grid, catalog, params);

  {
    std::ostringstream ss;
    save_sites_csv(ss, city.sites, catalog, proj, meta_line(cfg));
    write_file(sites_path(cfg), ss.str());
  }
  {
    std::ostringstream ss;
    save_incidents_csv(ss, city.incidents, proj, meta_line(cfg));
    write_file(incidents_path(cfg), ss.str());
  }
  nlohmann::json truth;
  truth["meta"] = nlohmann::json::parse(meta_json(cfg));
  truth["features"] = nlohmann::json::array();
  for (const auto& e : catalog.entries()) truth["features"].push_back(e.name);
  truth["weights"] = params.weights;
  truth["intensity"] = params.intensity;
  truth["bias"] = params.bias;
  truth["saturation_cap"] = params.saturation_cap;
  truth["emitted_incidents"] = city.emitted_incidents;
  truth["emitted_sites"] = city.sites.size();
  write_file(out_path(cfg, "ground_truth.json"), truth.dump(1));
}

void run_ingest(const RunConfig& cfg) {
  HexGrid grid = grid_from(cfg);
  FeatureCatalog catalog = catalog_from(cfg);
  Projection proj = projection_from(cfg);

  auto sin = open_input(sites_path(cfg));
  SiteIngest sites = ingest_sites(sin, catalog, grid, proj);
  auto iin = open_input(incidents_path(cfg));
  IncidentIngest incidents = ingest_incidents(iin, grid, proj);

  FeatureMatrix m =
      assemble_matrix(grid, catalog, std::move(sites.counts), std::move(incidents.y));
  std::ostringstream ss;
  save_matrix_csv(ss, m, meta_line(cfg));
  write_file(out_path(cfg, "matrix.csv"), ss.str());

  nlohmann::json rep;
  rep["meta"] = nlohmann::json::parse(meta_json(cfg));
  rep["sites"] = {{"accepted", sites.stats.accepted},
                  {"unknown_feature", sites.stats.unknown_feature},
                  {"unparsable", sites.stats.unparsable},
                  {"out_of_grid", sites.stats.out_of_grid}};
  rep["incidents"] = {{"accepted", incidents.stats.accepted},
                      {"unparsable", incidents.stats.unparsable},
                      {"out_of_grid", incidents.stats.out_of_grid}};
  write_file(out_path(cfg, "ingest_report.json"), rep.dump(1));
}

void run_train(const RunConfig& cfg) {
  HexGrid grid = grid_from(cfg);
  FeatureMatrix m = load_matrix(cfg, grid);

  SplitSpec split;
  std::string rule = cfg.str("split_rule", "median");
  if (rule == "median")
    split = split_cells_median(grid);
  else if (rule == "x_threshold")
    split = split_cells(grid, cfg.num("split_threshold_x", 0.0));
  else
    throw ConfigError("config: split_rule must be 'median' or 'x_threshold'");

  auto [model, report] = train(m, split, hyper_from(cfg));

  write_file(out_path(cfg, "model.json"), model_to_json(model, split, meta_json(cfg)));

  nlohmann::json rep;
  rep["meta"] = nlohmann::json::parse(meta_json(cfg));
  rep["train_r2"] = report.train_r2;
  rep["train_mae"] = report.train_mae;
  rep["test_r2"] = report.test_r2;
  rep["test_mae"] = report.test_mae;
  rep["epochs"] = report.loss_curve.size();
  rep["loss_curve"] = report.loss_curve;
  write_file(out_path(cfg, "fit_report.json"), rep.dump(1));

  // Per-cell predictions, clamped at zero for reporting.
  std::ostringstream ss;
  ss << meta_line(cfg) << "\n";
  ss << "cell_id,y,y_pred\n";
  for (size_t i = 0; i < m.rows(); ++i) {
    double pred = std::max(0.0, model.predict(m.x[i]));
    ss << m.cell_ids[i] << "," << fmt_double(m.y[i]) << "," << fmt_double(pred) << "\n";
  }
  write_file(out_path(cfg, "predictions.csv"), ss.str());
}

void run_explain(const RunConfig& cfg) {
  HexGrid grid = grid_from(cfg);
  Projection proj = projection_from(cfg);
  FeatureMatrix m = load_matrix(cfg, grid);
  FeatureCatalog catalog = FeatureCatalog::from_names(m.feature_names);

  auto [model, split] = model_from_json(read_file(out_path(cfg, "model.json")));

  auto sin = open_input(sites_path(cfg));
  SiteIngest sites = ingest_sites(sin, catalog, grid, proj);

  size_t bg_cap = static_cast<size_t>(cfg.integer("background_size", 0));
  BackgroundSet background = BackgroundSet::sampled(
      m, split.train_ids, bg_cap, seed_for(cfg.master_seed(), "background"));

  AttributionOptions opts;
  opts.exact = cfg.str("attr_method", "sampled") == "exact";
  opts.n_perm = static_cast<int>(cfg.integer("n_perm", 128));
  opts.seed = seed_for(cfg.master_seed(), "shap");
  opts.threads = static_cast<int>(cfg.integer("threads", 0));
  ShapAttribution attr = attribute_cells(model, m, background, opts);

  {
    std::ostringstream ss;
    ss << meta_line(cfg) << "\n";
    ss << "# phi0=" << fmt_double(attr.phi0) << " method=" << attr.method << "\n";
    ss << "cell_id,feature,phi\n";
    for (size_t i = 0; i < m.rows(); ++i)
      for (size_t j = 0; j < m.cols(); ++j)
        ss << m.cell_ids[i] << "," << m.feature_names[j] << ","
           << fmt_double(attr.phi[i][j]) << "\n";
    write_file(out_path(cfg, "attribution.csv"), ss.str());
  }

  SiteShareMap shares = share_to_sites(attr, m, sites.sites, grid);
  {
    std::ostringstream ss;
    ss << meta_line(cfg) << "\n";
    ss << "site_id,feature,lat,lon,phi_p\n";
    for (const auto& s : shares.shares) {
      auto [lat, lon] = proj.to_latlon(s.location);
      ss << s.site_id << "," << m.feature_names[s.feature] << "," << fmt_double(lat)
         << "," << fmt_double(lon) << "," << fmt_double(s.phi_p) << "\n";
    }
    write_file(out_path(cfg, "site_shares.csv"), ss.str());
  }

  {
    auto ranking = rank_features(attr, catalog);
    std::ostringstream ss;
    ss << meta_line(cfg) << "\n";
    ss << "feature,mean_abs_phi\n";
    for (const auto& [name, value] : ranking)
      ss << name << "," << fmt_double(value) << "\n";
    write_file(out_path(cfg, "feature_ranking.csv"), ss.str());
  }
}

void run_score(const RunConfig& cfg) {
  HexGrid grid = grid_from(cfg);
  Projection proj = projection_from(cfg);
  FeatureMatrix m = load_matrix(cfg, grid);
  FeatureCatalog catalog = FeatureCatalog::from_names(m.feature_names);

  LoadedShares shares = load_shares(cfg, grid, catalog, proj);

  size_t count = static_cast<size_t>(cfg.integer("candidate_count", 1000));
  auto candidates = sample_candidates(shares.sites, count,
                                      seed_for(cfg.master_seed(), "candidates", 0),
                                      site_radius(cfg));
  candidates = score_all(std::move(candidates), grid, shares.map);

  std::ostringstream ss;
  ss << meta_line(cfg) << "\n";
  ss << "candidate_id,lat,lon,s_k\n";
  for (const auto& k : candidates) {
    auto [lat, lon] = proj.to_latlon(k.location);
    ss << k.id << "," << fmt_double(lat) << "," << fmt_double(lon) << ","
       << fmt_double(k.score) << "\n";
  }
  write_file(out_path(cfg, "candidates_scored.csv"), ss.str());
}

void run_optimize(const RunConfig& cfg) {
  Projection proj = projection_from(cfg);
  auto candidates = load_scored(cfg, proj);
  std::vector<double> scores(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) scores[i] = candidates[i].score;

  double d_min = cfg.num("d_min_m", 1200.0);
  size_t n = static_cast<size_t>(cfg.integer("n_aeds", 20));
  std::string solver = cfg.str("solver", "greedy");

  DeploymentPlan plan;
  if (solver == "exact") {
    ConflictGraph graph = build_conflicts(candidates, d_min);
    plan = solve_exact(graph, scores, n, exact_from(cfg));
  } else if (solver == "greedy") {
    ConflictGraph graph = build_conflicts(candidates, d_min);
    plan = solve_greedy(graph, scores, n);
  } else if (solver == "random") {
    plan = solve_random(candidates, n, seed_for(cfg.master_seed(), "random-plan", n));
  } else {
    throw ConfigError("config: solver must be exact, greedy, or random");
  }
  write_file(out_path(cfg, "plan.json"), plan_to_json(plan, proj, meta_json(cfg)));
}

void run_evaluate(const RunConfig& cfg) {
  HexGrid grid = grid_from(cfg);
  Projection proj = projection_from(cfg);
  DeploymentPlan plan = plan_from_json(read_file(out_path(cfg, "plan.json")));

  auto iin = open_input(incidents_path(cfg));
  IncidentIngest incidents = ingest_incidents(iin, grid, proj);

  double c_r = coverage_radius(cfg);
  CoverageResult cov = coverage(plan, incidents.incidents, c_r);
  SurvivalResult sur = survival(plan, incidents.incidents, survival_from(cfg));

  nlohmann::json rep;
  rep["meta"] = nlohmann::json::parse(meta_json(cfg));
  rep["incidents"] = incidents.incidents.size();
  rep["coverage"] = {{"radius_m", c_r},
                     {"count", cov.covered},
                     {"fraction", incidents.incidents.empty()
                                      ? 0.0
                                      : static_cast<double>(cov.covered) /
                                            incidents.incidents.size()}};
  rep["survival_mean"] = sur.mean;
  rep["plan"] = {{"solver", plan.solver},
                 {"n_max", plan.n_max},
                 {"d_min_m", plan.d_min},
                 {"selected", plan.selected.size()},
                 {"objective", plan.objective},
                 {"spacing_enforced", plan.spacing_enforced},
                 {"spacing_ok", plan.spacing_ok}};
  write_file(out_path(cfg, "evaluation.json"), rep.dump(1));

  std::ostringstream ss;
  ss << meta_line(cfg) << "\n";
  ss << "incident_id,nearest_m,t_aed_min,survival\n";
  for (size_t i = 0; i < incidents.incidents.size(); ++i) {
    ss << incidents.incidents[i].id << "," << fmt_double(sur.nearest_m[i]) << ","
       << fmt_double(sur.t_aed_min[i]) << "," << fmt_double(sur.per_incident[i])
       << "\n";
  }
  write_file(out_path(cfg, "evaluation_incidents.csv"), ss.str());
}

void run_sweep(const RunConfig& cfg) {
  HexGrid grid = grid_from(cfg);
  Projection proj = projection_from(cfg);
  FeatureMatrix m = load_matrix(cfg, grid);
  FeatureCatalog catalog = FeatureCatalog::from_names(m.feature_names);
  LoadedShares shares = load_shares(cfg, grid, catalog, proj);

  auto iin = open_input(incidents_path(cfg));
  IncidentIngest incidents = ingest_incidents(iin, grid, proj);

  SweepInputs in;
  in.grid = &grid;
  in.shares = &shares.map;
  in.sites = shares.sites;
  in.incidents = incidents.incidents;
  in.candidate_count = static_cast<size_t>(cfg.integer("candidate_count", 5000));
  size_t sets = static_cast<size_t>(cfg.integer("candidate_sets", 10));
  for (size_t s = 0; s < sets; ++s)
    in.set_seeds.push_back(seed_for(cfg.master_seed(), "candidates", s));
  for (double n : cfg.num_list("n_list", {5, 10, 20, 40, 60, 80, 100}))
    in.n_list.push_back(static_cast<size_t>(n));
  in.d_min_list = cfg.num_list("d_min_list_m", {0, 600, 800, 960, 1000, 1200, 1400, 1600});
  in.solvers = cfg.str_list("solvers", {"greedy", "random"});
  in.coverage_radius = coverage_radius(cfg);
  in.site_radius = site_radius(cfg);
  in.survival = survival_from(cfg);
  in.exact = exact_from(cfg);
  in.master_seed = cfg.master_seed();

  SweepResult result = sweep(in);

  {
    std::ostringstream ss;
    save_sweep_csv(ss, result, meta_line(cfg));
    write_file(out_path(cfg, "sweep.csv"), ss.str());
  }
  {
    std::ostringstream ss;
    save_sweep_long_csv(ss, result, meta_line(cfg));
    write_file(out_path(cfg, "sweep_long.csv"), ss.str());
  }

  // Human-oriented summary: percent increase vs random per (N, D_min).
  auto signed_pct = [](double v) {
    return (v >= 0.0 ? "+" : "") + fmt_double(v) + "%";
  };
  std::ostringstream ss;
  ss << meta_line(cfg) << "\n";
  for (const auto& row : result.rows) {
    if (row.solver == "random") continue;
    ss << row.solver << " n=" << row.n << " d_min=" << fmt_double(row.d_min)
       << "m: coverage " << fmt_double(row.cov_mean) << " ("
       << signed_pct(row.cov_pct_inc) << " vs random), survival "
       << fmt_double(row.sur_mean) << " (" << signed_pct(row.sur_pct_inc)
       << " vs random)\n";
  }
  write_file(out_path(cfg, "sweep_summary.txt"), ss.str());
  std::cout << ss.str();
}

void run_pipeline(const RunConfig& cfg) {
  struct Stage {
    const char* name;
    void (*fn)(const RunConfig&);
  };
  const Stage stages[] = {
      {"grid", run_grid},       {"ingest", run_ingest},   {"train", run_train},
      {"explain", run_explain}, {"score", run_score},     {"optimize", run_optimize},
      {"evaluate", run_evaluate},
  };
  for (const auto& stage : stages) {
    try {
      stage.fn(cfg);
    } catch (const std::exception& e) {
      throw StageError(stage.name, e.what());
    }
  }
}

}  // namespace aedopt
