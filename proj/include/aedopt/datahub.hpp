#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "aedopt/geometry.hpp"
#include "aedopt/hexgrid.hpp"
#include "aedopt/rng.hpp"

namespace aedopt {

// ============================================================================
// Feature catalog
// ============================================================================

class FeatureCatalog {
 public:
  enum class Kind { Poi, Building };
  struct Entry {
    std::string name;
    Kind kind;
  };

  // The built-in registry of OpenStreetMap POI and building types. The raw
  // upstream building list repeats "commercial"; duplicates are dropped, so
  // the registry holds 114 unique names.
  static const FeatureCatalog& default_catalog();

  // Catalog restricted to the given names, in the given order. Names not in
  // the default registry are accepted and tagged as POIs.
  static FeatureCatalog from_names(const std::vector<std::string>& names);

  size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  const std::string& name(size_t j) const { return entries_[j].name; }

  // Column index of a feature name, or -1 if unknown.
  int find(const std::string& name) const;

 private:
  std::vector<Entry> entries_;
  void add(std::string name, Kind kind);
};

// ============================================================================
// Records and the per-cell feature matrix
// ============================================================================

struct SiteRecord {
  int64_t id = 0;
  int feature = 0;  // catalog column
  Vec2 location;
  CellId cell = 0;
};

struct IncidentRecord {
  int64_t id = 0;
  Vec2 location;
  std::string timestamp;  // optional, informational
};

struct FeatureMatrix {
  uint64_t grid_fingerprint = 0;
  std::vector<CellId> cell_ids;        // grid order
  std::vector<std::vector<double>> x;  // per-cell feature counts
  std::vector<double> y;               // per-cell incident counts
  std::vector<std::string> feature_names;

  size_t rows() const { return cell_ids.size(); }
  size_t cols() const { return feature_names.size(); }
};

struct IngestStats {
  size_t accepted = 0;
  size_t unknown_feature = 0;
  size_t unparsable = 0;
  size_t out_of_grid = 0;
};

struct SiteIngest {
  std::vector<SiteRecord> sites;
  std::vector<std::vector<double>> counts;  // per-cell, catalog order
  IngestStats stats;
};

struct IncidentIngest {
  std::vector<IncidentRecord> incidents;
  std::vector<double> y;
  IngestStats stats;
};

// Site rows as CSV `feature,lat,lon` or a GeoJSON FeatureCollection of points
// with a `feature` property (auto-detected). Unknown feature names and rows
// outside the grid are counted and skipped; unparsable rows warn and skip.
// Zero accepted rows is an EmptyInputError.
SiteIngest ingest_sites(std::istream& in, const FeatureCatalog& catalog,
                        const HexGrid& grid, const Projection& proj);

// Incident rows as CSV `lat,lon[,timestamp]`.
IncidentIngest ingest_incidents(std::istream& in, const HexGrid& grid,
                                const Projection& proj);

FeatureMatrix assemble_matrix(const HexGrid& grid, const FeatureCatalog& catalog,
                              std::vector<std::vector<double>> counts,
                              std::vector<double> y);

void save_matrix_csv(std::ostream& out, const FeatureMatrix& m,
                     const std::string& meta_line = "");
FeatureMatrix load_matrix_csv(std::istream& in, const HexGrid& grid);

// ============================================================================
// Synthetic city generator
// ============================================================================
//
// Stand-in for a real incident registry: sites fall per cell with Poisson
// counts and uniform in-cell positions, and per-cell incident counts are
// Poisson with mean max(0, w·x + bias). The generating weights are returned
// so attribution and recovery tests have ground truth to compare against.

struct GenParams {
  std::vector<double> intensity;  // expected sites per cell, per feature
  std::vector<double> weights;    // ground-truth linear weights
  double bias = 0.0;
  // Optional saturation of the linear mean: mean = cap * tanh(u / cap).
  double saturation_cap = 0.0;  // 0 = linear
};

struct SynthCity {
  std::vector<SiteRecord> sites;
  std::vector<IncidentRecord> incidents;
  std::vector<std::vector<double>> counts;  // per-cell ground-truth X
  std::vector<double> y;                    // per-cell incident counts
  GenParams truth;
  size_t emitted_incidents = 0;
};

SynthCity synth_city(uint64_t seed, const HexGrid& grid,
                     const FeatureCatalog& catalog, const GenParams& params);

void save_sites_csv(std::ostream& out, std::span<const SiteRecord> sites,
                    const FeatureCatalog& catalog, const Projection& proj,
                    const std::string& meta_line = "");
void save_incidents_csv(std::ostream& out, std::span<const IncidentRecord> incidents,
                        const Projection& proj, const std::string& meta_line = "");

}  // namespace aedopt
