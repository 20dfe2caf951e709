#pragma once

#include <string>

#include "aedopt/config.hpp"
#include "aedopt/errors.hpp"

namespace aedopt {

// Pipeline stages. Each stage reads its inputs from the paths in the config,
// writes its artifacts under out_dir, and is individually re-runnable; the
// full pipeline just chains them. Every artifact carries the config hash and
// the stage seed in a metadata header.

class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& msg)
      : Error("stage '" + stage + "' failed: " + msg), stage(stage) {}
  std::string stage;
};

void run_grid(const RunConfig& cfg);      // grid.geojson
void run_synth(const RunConfig& cfg);     // sites.csv, incidents.csv, ground_truth.json
void run_ingest(const RunConfig& cfg);    // matrix.csv, ingest_report.json
void run_train(const RunConfig& cfg);     // model.json, fit_report.json, predictions.csv
void run_explain(const RunConfig& cfg);   // attribution.csv, site_shares.csv, feature_ranking.csv
void run_score(const RunConfig& cfg);     // candidates_scored.csv
void run_optimize(const RunConfig& cfg);  // plan.json
void run_evaluate(const RunConfig& cfg);  // evaluation.json, evaluation_incidents.csv
void run_sweep(const RunConfig& cfg);     // sweep.csv, sweep_long.csv, sweep_summary.txt

// grid -> ingest -> train -> explain -> score -> optimize -> evaluate.
// A failing stage raises StageError; earlier artifacts are left in place.
void run_pipeline(const RunConfig& cfg);

}  // namespace aedopt
