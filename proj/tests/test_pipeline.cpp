#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "aedopt/config.hpp"
#include "aedopt/csvio.hpp"
#include "aedopt/errors.hpp"
#include "aedopt/pipeline.hpp"
#include "aedopt/rng.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace aedopt;

namespace {

// Roughly 20 cells, three features, fast training settings.
std::string small_city_config(const testutil::TmpDir& dir) {
  return "origin_lat = 36.75\n"
         "origin_lon = -76.05\n"
         "grid_edge_m = 1410\n"
         "bbox_min_x = 0\nbbox_min_y = 0\nbbox_max_x = 11000\nbbox_max_y = 9000\n"
         "features = apartments,cafe,school\n"
         "synth_intensity = 4,4,4\n"
         "synth_weights = 60,24,6\n"
         "synth_bias = 2\n"
         "seed = 7\n"
         "epochs = 150\nhidden1 = 16\nhidden2 = 8\n"
         "n_perm = 16\nbackground_size = 16\n"
         "candidate_count = 50\ncandidate_sets = 2\n"
         "n_list = 4,8\nd_min_list_m = 0,1200\nsolvers = greedy,random\n"
         "n_aeds = 6\nd_min_m = 1152\nsolver = greedy\n"
         "sites_path = " + dir.file("sites.csv") + "\n" +
         "incidents_path = " + dir.file("incidents.csv") + "\n";
}

std::map<std::string, std::string> dir_contents(const std::string& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      out[fs::relative(entry.path(), root).string()] = testutil::slurp(entry.path());
  return out;
}

size_t data_rows(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  size_t rows = 0;
  bool header_seen = false;
  while (next_data_line(in, line)) {
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config parsing, accessors, and overrides") {
  RunConfig cfg = RunConfig::from_text(
      "a = 1\n"
      "# a comment\n"
      "name = hello world\n"
      "lst = 1, 2, 3\n"
      "flagged = true\n");
  CHECK(cfg.integer("a", 0) == 1);
  CHECK(cfg.str("name", "") == "hello world");
  CHECK(cfg.num_list("lst", {}) == std::vector<double>{1, 2, 3});
  CHECK(cfg.flag("flagged", false));
  CHECK(cfg.num("missing", 2.5) == 2.5);

  cfg.set("a", "9");
  CHECK(cfg.integer("a", 0) == 9);

  CHECK_THROWS_AS(RunConfig::from_text("not a pair\n"), ConfigError);
  CHECK_THROWS_AS(cfg.num("name", 0.0), ConfigError);

  try {
    cfg.require_str("sites_path");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sites_path") != std::string::npos);
  }
}

TEST_CASE("config hash ignores the output directory only") {
  RunConfig a = RunConfig::from_text("x = 1\nout_dir = here\n");
  RunConfig b = RunConfig::from_text("x = 1\nout_dir = there\n");
  RunConfig c = RunConfig::from_text("x = 2\nout_dir = here\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
}

TEST_CASE("seed derivation is stable and label-separated") {
  CHECK(seed_for(7, "train") == seed_for(7, "train"));
  CHECK(seed_for(7, "train") != seed_for(7, "shap"));
  CHECK(seed_for(7, "candidates", 0) != seed_for(7, "candidates", 1));
  CHECK(seed_for(7, "train") != seed_for(8, "train"));
}

TEST_CASE("synth then ingest round trips with zero skips") {
  testutil::TmpDir dir("roundtrip");
  RunConfig cfg = RunConfig::from_text(small_city_config(dir));
  cfg.set("out_dir", dir.file("out"));
  run_synth(cfg);
  run_grid(cfg);
  run_ingest(cfg);

  auto rep = nlohmann::json::parse(testutil::slurp(dir.file("out/ingest_report.json")));
  CHECK(rep["sites"]["unknown_feature"] == 0);
  CHECK(rep["sites"]["unparsable"] == 0);
  CHECK(rep["sites"]["out_of_grid"] == 0);
  CHECK(rep["incidents"]["out_of_grid"] == 0);
  CHECK(rep["sites"]["accepted"].get<size_t>() > 0);

  // Ground truth is recoverable from the ingested matrix.
  auto truth = nlohmann::json::parse(testutil::slurp(dir.file("out/ground_truth.json")));
  auto weights = truth["weights"].get<std::vector<double>>();
  double bias = truth["bias"].get<double>();

  std::ifstream min(dir.file("out/matrix.csv"));
  std::string line;
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  bool header = true;
  while (next_data_line(min, line)) {
    if (header) {
      header = false;
      continue;
    }
    auto f = split_csv(line);
    double yv;
    parse_double(f[1], yv);
    y.push_back(yv);
    std::vector<double> row;
    for (size_t j = 2; j < f.size(); ++j) {
      double v;
      parse_double(f[j], v);
      row.push_back(v);
    }
    x.push_back(row);
  }
  std::vector<double> pred;
  for (const auto& row : x) {
    double v = bias;
    for (size_t j = 0; j < row.size(); ++j) v += weights[j] * row[j];
    pred.push_back(std::max(0.0, v));
  }
  CHECK(testutil::r2_of(y, pred) >= 0.95);
}

TEST_CASE("changing the seed changes the city but keeps the schema") {
  testutil::TmpDir dir("seeds");
  RunConfig cfg = RunConfig::from_text(small_city_config(dir));
  cfg.set("out_dir", dir.file("out"));
  run_synth(cfg);
  std::string first = testutil::slurp(dir.file("sites.csv"));

  cfg.set("seed", "8");
  run_synth(cfg);
  std::string second = testutil::slurp(dir.file("sites.csv"));
  CHECK(first != second);
  std::istringstream a(first), b(second);
  std::string ha, hb;
  next_data_line(a, ha);  // header after the meta comment is skipped
  next_data_line(b, hb);
  CHECK(ha == hb);
}

TEST_CASE("full pipeline is deterministic and fits the time budget") {
  testutil::TmpDir dir("pipe");
  RunConfig cfg = RunConfig::from_text(small_city_config(dir));
  cfg.set("out_dir", dir.file("out0"));
  run_synth(cfg);

  auto started = std::chrono::steady_clock::now();
  cfg.set("out_dir", dir.file("out1"));
  run_pipeline(cfg);
  double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  CHECK(elapsed < 60.0);

  cfg.set("out_dir", dir.file("out2"));
  run_pipeline(cfg);

  auto t1 = dir_contents(dir.file("out1"));
  auto t2 = dir_contents(dir.file("out2"));
  REQUIRE(!t1.empty());
  REQUIRE(t1.size() == t2.size());
  for (const auto& [name, content] : t1) {
    REQUIRE(t2.count(name) == 1);
    CHECK_MESSAGE(content == t2[name], "artifact differs: ", name);
  }

  // Every artifact carries the config hash header or meta object.
  std::string hash_token = "config_hash";
  for (const auto& [name, content] : t1)
    CHECK_MESSAGE(content.find(hash_token) != std::string::npos, "no meta in ", name);

  // The plan respects its constraints.
  auto plan = nlohmann::json::parse(testutil::slurp(dir.file("out1/plan.json")));
  CHECK(plan["spacing_enforced"] == true);
  CHECK(plan["spacing_ok"] == true);
  CHECK(plan["selected"].size() <= 6);
}

TEST_CASE("missing inputs fail with the field named") {
  testutil::TmpDir dir("missing");
  RunConfig cfg = RunConfig::from_text("bbox_max_x = 9000\nbbox_max_y = 7000\n");
  cfg.set("out_dir", dir.file("out"));
  try {
    run_ingest(cfg);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sites_path") != std::string::npos);
  }

  // The pipeline wraps the failure with the stage name.
  try {
    run_pipeline(cfg);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage == "ingest");
    CHECK(std::string(e.what()).find("sites_path") != std::string::npos);
  }
}

TEST_CASE("sweep artifacts have the expected shape") {
  testutil::TmpDir dir("sweep");
  RunConfig cfg = RunConfig::from_text(small_city_config(dir));
  cfg.set("out_dir", dir.file("out"));
  run_synth(cfg);
  run_ingest(cfg);
  run_train(cfg);
  run_explain(cfg);
  run_sweep(cfg);

  // 2 sets x 2 N x 2 D_min x 2 solvers.
  std::string long_csv = testutil::slurp(dir.file("out/sweep_long.csv"));
  CHECK(data_rows(long_csv) == 16);
  // Aggregated: N x D_min x solvers.
  std::string agg_csv = testutil::slurp(dir.file("out/sweep.csv"));
  CHECK(data_rows(agg_csv) == 8);

  // Removing one D_min value yields strictly fewer rows, others unchanged.
  cfg.set("d_min_list_m", "1200");
  cfg.set("out_dir", dir.file("out_narrow"));
  fs::create_directories(dir.file("out_narrow"));
  for (const char* name : {"matrix.csv", "site_shares.csv"})
    fs::copy_file(dir.file("out/") + std::string(name),
                  dir.file("out_narrow/") + std::string(name));
  run_sweep(cfg);
  std::string narrow_long = testutil::slurp(dir.file("out_narrow/sweep_long.csv"));
  CHECK(data_rows(narrow_long) == 8);

  std::istringstream wide_in(testutil::slurp(dir.file("out/sweep_long.csv")));
  std::istringstream narrow_in(narrow_long);
  std::vector<std::string> wide_rows, narrow_rows;
  std::string line;
  next_data_line(wide_in, line);
  while (next_data_line(wide_in, line))
    if (split_csv(line)[3] == "1200") wide_rows.push_back(line);
  next_data_line(narrow_in, line);
  while (next_data_line(narrow_in, line)) narrow_rows.push_back(line);
  CHECK(wide_rows == narrow_rows);
}

TEST_CASE("sweep runs twice to identical bytes") {
  testutil::TmpDir dir("sweepdet");
  RunConfig cfg = RunConfig::from_text(small_city_config(dir));
  cfg.set("out_dir", dir.file("out"));
  run_synth(cfg);
  run_ingest(cfg);
  run_train(cfg);
  run_explain(cfg);

  cfg.set("out_dir", dir.file("s1"));
  // The sweep reads shares/matrix from its own out_dir; copy them over.
  for (const char* name : {"matrix.csv", "site_shares.csv"}) {
    fs::create_directories(dir.file("s1"));
    fs::create_directories(dir.file("s2"));
    fs::copy_file(dir.file("out/") + name, dir.file("s1/") + name);
    fs::copy_file(dir.file("out/") + name, dir.file("s2/") + name);
  }
  run_sweep(cfg);
  cfg.set("out_dir", dir.file("s2"));
  run_sweep(cfg);
  CHECK(testutil::slurp(dir.file("s1/sweep.csv")) ==
        testutil::slurp(dir.file("s2/sweep.csv")));
  CHECK(testutil::slurp(dir.file("s1/sweep_long.csv")) ==
        testutil::slurp(dir.file("s2/sweep_long.csv")));
  CHECK(testutil::slurp(dir.file("s1/sweep_summary.txt")) ==
        testutil::slurp(dir.file("s2/sweep_summary.txt")));
}

}  // TEST_SUITE
