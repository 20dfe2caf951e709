#include "aedopt/datahub.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "aedopt/csvio.hpp"
#include "aedopt/errors.hpp"

namespace aedopt {

// ============================================================================
// FeatureCatalog
// ============================================================================

namespace {

const char* kPoiNames[] = {
    "place of worship", "grave yard", "post office", "childcare", "courthouse",
    "fire station", "library", "police", "public building", "cinema", "bar",
    "restaurant", "fountain", "fast food", "cafe", "ice cream", "dentist",
    "recycling", "dojo", "pharmacy", "atm", "clock", "parking entrance",
    "bicycle parking", "car rental", "pub", "veterinary", "post box", "fuel",
    "clinic", "bench", "bank", "parking", "social facility", "marketplace",
    "sanitary dump station", "telephone", "nightclub", "drinking water",
    "shower", "bicycle rental", "charging station", "loading dock", "theatre",
    "community centre", "car wash", "bicycle repair station", "compressed air",
    "letter box", "bbq", "doctors", "planetarium", "training",
    "animal boarding", "internet cafe", "prep school", "gambling",
    "driving school", "events venue", "waste basket", "parking space",
    "waste disposal", "weighbridge", "public bookcase", "vending machine",
    "stage", "ranger station", "animal shelter", "exhibition centre",
    "arts centre", "kindergarten", "bus station", "townhall", "prison",
    "studio", "payment centre"};

const char* kBuildingNames[] = {
    "house", "bunker", "office", "commercial", "shelter", "residential",
    "public", "roof", "university", "dormitory", "chapel", "greenhouse",
    "apartments", "garage", "shed", "retail", "static caravan", "church",
    "terrace", "service", "school", "hospital", "industrial", "pavilion",
    "stadium", "hotel", "cabin", "toilets", "college", "warehouse",
    "sports centre", "detached", "boathouse", "barn", "riding hall",
    "construction", "ship", "ruins"};

}  // namespace

void FeatureCatalog::add(std::string name, Kind kind) {
  for (const auto& e : entries_)
    if (e.name == name) throw InvalidInputError("catalog: duplicate feature '" + name + "'");
  entries_.push_back({std::move(name), kind});
}

const FeatureCatalog& FeatureCatalog::default_catalog() {
  static const FeatureCatalog cat = [] {
    FeatureCatalog c;
    for (const char* n : kPoiNames) c.add(n, Kind::Poi);
    for (const char* n : kBuildingNames) c.add(n, Kind::Building);
    return c;
  }();
  return cat;
}

FeatureCatalog FeatureCatalog::from_names(const std::vector<std::string>& names) {
  if (names.empty()) throw InvalidInputError("catalog: empty feature list");
  const FeatureCatalog& reg = default_catalog();
  FeatureCatalog c;
  for (const auto& n : names) {
    int j = reg.find(n);
    c.add(n, j >= 0 ? reg.entries()[j].kind : Kind::Poi);
  }
  return c;
}

int FeatureCatalog::find(const std::string& name) const {
  for (size_t j = 0; j < entries_.size(); ++j)
    if (entries_[j].name == name) return static_cast<int>(j);
  return -1;
}

// ============================================================================
// Ingestion
// ============================================================================

namespace {

// Walk the raw site rows (from either format) through binning and counting.
struct SiteAccumulator {
  const FeatureCatalog& catalog;
  const HexGrid& grid;
  SiteIngest out;

  SiteAccumulator(const FeatureCatalog& c, const HexGrid& g) : catalog(c), grid(g) {
    out.counts.assign(g.size(), std::vector<double>(c.size(), 0.0));
  }

  void row(const std::string& feature, double lat, double lon, const Projection& proj) {
    int j = catalog.find(feature);
    if (j < 0) {
      ++out.stats.unknown_feature;
      return;
    }
    Vec2 p = proj.to_xy(lat, lon);
    auto cell = grid.try_locate(p);
    if (!cell) {
      ++out.stats.out_of_grid;
      return;
    }
    SiteRecord rec;
    rec.id = static_cast<int64_t>(out.sites.size());
    rec.feature = j;
    rec.location = p;
    rec.cell = *cell;
    out.sites.push_back(rec);
    out.counts[*grid.index_of(*cell)][j] += 1.0;
    ++out.stats.accepted;
  }
};

bool looks_like_geojson(std::istream& in) {
  int c;
  while ((c = in.peek()) != EOF) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
      continue;
    }
    return c == '{';
  }
  return false;
}

}  // namespace

SiteIngest ingest_sites(std::istream& in, const FeatureCatalog& catalog,
                        const HexGrid& grid, const Projection& proj) {
  if (catalog.size() == 0) throw InvalidInputError("ingest: empty catalog");
  SiteAccumulator acc(catalog, grid);

  if (looks_like_geojson(in)) {
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const std::exception& e) {
      throw InvalidInputError(std::string("ingest: bad GeoJSON: ") + e.what());
    }
    for (const auto& f : doc.value("features", nlohmann::json::array())) {
      try {
        const auto& geom = f.at("geometry");
        if (geom.at("type") != "Point") {
          ++acc.out.stats.unparsable;
          continue;
        }
        double lon = geom.at("coordinates").at(0).get<double>();
        double lat = geom.at("coordinates").at(1).get<double>();
        std::string feature = f.at("properties").at("feature").get<std::string>();
        acc.row(feature, lat, lon, proj);
      } catch (const std::exception&) {
        ++acc.out.stats.unparsable;
      }
    }
  } else {
    std::string line;
    bool first = true;
    while (next_data_line(in, line)) {
      auto fields = split_csv(line);
      if (first) {
        first = false;
        if (!fields.empty() && fields[0] == "feature") continue;  // header
      }
      double lat, lon;
      if (fields.size() < 3 || !parse_double(fields[1], lat) ||
          !parse_double(fields[2], lon)) {
        std::cerr << "warning: skipping unparsable site row: " << line << "\n";
        ++acc.out.stats.unparsable;
        continue;
      }
      acc.row(fields[0], lat, lon, proj);
    }
  }

  if (acc.out.stats.accepted == 0) throw EmptyInputError("ingest: zero valid site rows");
  return std::move(acc.out);
}

IncidentIngest ingest_incidents(std::istream& in, const HexGrid& grid,
                                const Projection& proj) {
  IncidentIngest out;
  out.y.assign(grid.size(), 0.0);

  std::string line;
  bool first = true;
  while (next_data_line(in, line)) {
    auto fields = split_csv(line);
    if (first) {
      first = false;
      if (!fields.empty() && fields[0] == "lat") continue;  // header
    }
    double lat, lon;
    if (fields.size() < 2 || !parse_double(fields[0], lat) ||
        !parse_double(fields[1], lon)) {
      std::cerr << "warning: skipping unparsable incident row: " << line << "\n";
      ++out.stats.unparsable;
      continue;
    }
    Vec2 p = proj.to_xy(lat, lon);
    auto cell = grid.try_locate(p);
    if (!cell) {
      ++out.stats.out_of_grid;
      continue;
    }
    IncidentRecord rec;
    rec.id = static_cast<int64_t>(out.incidents.size());
    rec.location = p;
    if (fields.size() >= 3) rec.timestamp = fields[2];
    out.incidents.push_back(rec);
    out.y[*grid.index_of(*cell)] += 1.0;
    ++out.stats.accepted;
  }

  if (out.stats.accepted == 0) throw EmptyInputError("ingest: zero valid incident rows");
  return out;
}

FeatureMatrix assemble_matrix(const HexGrid& grid, const FeatureCatalog& catalog,
                              std::vector<std::vector<double>> counts,
                              std::vector<double> y) {
  if (counts.size() != grid.size() || y.size() != grid.size())
    throw ConsistencyError("matrix: row count does not match grid");
  FeatureMatrix m;
  m.grid_fingerprint = grid.fingerprint();
  m.cell_ids.reserve(grid.size());
  for (const auto& c : grid.cells()) m.cell_ids.push_back(c.id);
  m.x = std::move(counts);
  m.y = std::move(y);
  for (const auto& e : catalog.entries()) m.feature_names.push_back(e.name);
  return m;
}

void save_matrix_csv(std::ostream& out, const FeatureMatrix& m,
                     const std::string& meta_line) {
  if (!meta_line.empty()) out << meta_line << "\n";
  out << "cell_id,y";
  for (const auto& n : m.feature_names) out << "," << n;
  out << "\n";
  for (size_t i = 0; i < m.rows(); ++i) {
    out << m.cell_ids[i] << "," << fmt_double(m.y[i]);
    for (double v : m.x[i]) out << "," << fmt_double(v);
    out << "\n";
  }
}

FeatureMatrix load_matrix_csv(std::istream& in, const HexGrid& grid) {
  std::string line;
  if (!next_data_line(in, line)) throw EmptyInputError("matrix: empty file");
  auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "cell_id" || header[1] != "y")
    throw InvalidInputError("matrix: bad header");

  FeatureMatrix m;
  m.grid_fingerprint = grid.fingerprint();
  m.feature_names.assign(header.begin() + 2, header.end());

  while (next_data_line(in, line)) {
    auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw InvalidInputError("matrix: row width does not match header");
    long long id;
    double yv;
    if (!parse_long(fields[0], id) || !parse_double(fields[1], yv))
      throw InvalidInputError("matrix: unparsable row");
    m.cell_ids.push_back(id);
    m.y.push_back(yv);
    std::vector<double> row(m.feature_names.size());
    for (size_t j = 0; j < row.size(); ++j)
      if (!parse_double(fields[2 + j], row[j]))
        throw InvalidInputError("matrix: unparsable count");
    m.x.push_back(std::move(row));
  }

  if (m.rows() != grid.size()) throw ConsistencyError("matrix: row count != grid size");
  for (size_t i = 0; i < m.rows(); ++i)
    if (m.cell_ids[i] != grid.cells()[i].id)
      throw ConsistencyError("matrix: cell ids do not match grid");
  return m;
}

// ============================================================================
// Synthetic city
// ============================================================================

namespace {

Vec2 random_point_in_cell(Rng& rng, const HexCell& cell, double edge) {
  // Rejection from the hexagon's bounding box; acceptance rate ~0.75.
  constexpr double kSqrt3 = 1.7320508075688772935;
  double hw = edge, hh = 0.5 * kSqrt3 * edge;
  for (;;) {
    Vec2 p{cell.center.x + rng.uniform(-hw, hw), cell.center.y + rng.uniform(-hh, hh)};
    if (polygon_contains(cell.polygon, p, 0.0)) return p;
  }
}

}  // namespace

SynthCity synth_city(uint64_t seed, const HexGrid& grid,
                     const FeatureCatalog& catalog, const GenParams& params) {
  size_t m = catalog.size();
  if (params.intensity.size() != m)
    throw InvalidInputError("synth: intensity size must match catalog");
  if (params.weights.size() != m)
    throw InvalidInputError("synth: weight size must match catalog");
  for (double v : params.intensity)
    if (v < 0.0) throw InvalidInputError("synth: negative feature intensity");

  SynthCity city;
  city.truth = params;
  city.counts.assign(grid.size(), std::vector<double>(m, 0.0));
  city.y.assign(grid.size(), 0.0);

  Rng rng(seed);
  // Sites: per-cell Poisson counts, uniform in-cell positions.
  for (size_t i = 0; i < grid.size(); ++i) {
    const HexCell& cell = grid.cells()[i];
    for (size_t j = 0; j < m; ++j) {
      int64_t n = rng.poisson(params.intensity[j]);
      city.counts[i][j] = static_cast<double>(n);
      for (int64_t k = 0; k < n; ++k) {
        SiteRecord rec;
        rec.id = static_cast<int64_t>(city.sites.size());
        rec.feature = static_cast<int>(j);
        rec.location = random_point_in_cell(rng, cell, grid.edge_len());
        rec.cell = cell.id;
        city.sites.push_back(rec);
      }
    }
  }
  // Incidents: per-cell Poisson with mean max(0, w.x + bias), optionally
  // saturated.
  for (size_t i = 0; i < grid.size(); ++i) {
    const HexCell& cell = grid.cells()[i];
    double u = params.bias;
    for (size_t j = 0; j < m; ++j) u += params.weights[j] * city.counts[i][j];
    if (params.saturation_cap > 0.0)
      u = params.saturation_cap * std::tanh(u / params.saturation_cap);
    double mean = std::max(0.0, u);
    int64_t n = rng.poisson(mean);
    city.y[i] = static_cast<double>(n);
    for (int64_t k = 0; k < n; ++k) {
      IncidentRecord rec;
      rec.id = static_cast<int64_t>(city.incidents.size());
      rec.location = random_point_in_cell(rng, cell, grid.edge_len());
      city.incidents.push_back(rec);
    }
  }
  city.emitted_incidents = city.incidents.size();
  return city;
}

void save_sites_csv(std::ostream& out, std::span<const SiteRecord> sites,
                    const FeatureCatalog& catalog, const Projection& proj,
                    const std::string& meta_line) {
  if (!meta_line.empty()) out << meta_line << "\n";
  out << "feature,lat,lon\n";
  for (const auto& s : sites) {
    auto [lat, lon] = proj.to_latlon(s.location);
    out << catalog.name(s.feature) << "," << fmt_double(lat) << "," << fmt_double(lon)
        << "\n";
  }
}

void save_incidents_csv(std::ostream& out, std::span<const IncidentRecord> incidents,
                        const Projection& proj, const std::string& meta_line) {
  if (!meta_line.empty()) out << meta_line << "\n";
  out << "lat,lon\n";
  for (const auto& h : incidents) {
    auto [lat, lon] = proj.to_latlon(h.location);
    out << fmt_double(lat) << "," << fmt_double(lon) << "\n";
  }
}

}  // namespace aedopt
