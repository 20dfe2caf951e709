#include "aedopt/hexgrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "aedopt/csvio.hpp"
#include "aedopt/errors.hpp"

namespace aedopt {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;
constexpr double kContainEps = 1e-6;  // meters of signed edge distance
constexpr double kAreaEps = 1e-9;     // m^2; below this an overlap counts as empty

Vec2 axial_center(Vec2 origin, double a, int q, int r) {
  return {origin.x + 1.5 * a * q, origin.y + kSqrt3 * a * (r + 0.5 * q)};
}

// Fractional axial coordinates of a point, then cube rounding to the nearest
// cell center.
AxialCoord round_axial(Vec2 origin, double a, Vec2 p) {
  double px = (p.x - origin.x) / a;
  double py = (p.y - origin.y) / a;
  double qf = (2.0 / 3.0) * px;
  double rf = (-1.0 / 3.0) * px + (kSqrt3 / 3.0) * py;

  double xf = qf, zf = rf, yf = -xf - zf;
  double xr = std::round(xf), yr = std::round(yf), zr = std::round(zf);
  double dx = std::fabs(xr - xf), dy = std::fabs(yr - yf), dz = std::fabs(zr - zf);
  if (dx > dy && dx > dz) {
    xr = -yr - zr;
  } else if (dy > dz) {
    yr = -xr - zr;
  } else {
    zr = -xr - yr;
  }
  return {static_cast<int>(xr), static_cast<int>(zr)};
}

constexpr int kNeighborQ[6] = {1, 1, 0, -1, -1, 0};
constexpr int kNeighborR[6] = {0, -1, -1, 0, 1, 1};

}  // namespace

void HexGrid::add_cell(int q, int r) {
  HexCell c;
  c.id = encode_axial(q, r);
  c.axial = {q, r};
  c.center = axial_center(origin_, edge_len_, q, r);
  for (int k = 0; k < 6; ++k) {
    double ang = M_PI / 3.0 * k;
    c.polygon[k] = {c.center.x + edge_len_ * std::cos(ang),
                    c.center.y + edge_len_ * std::sin(ang)};
  }
  c.area = polygon_area(c.polygon);
  cells_.push_back(c);
}

void HexGrid::finalize() {
  std::sort(cells_.begin(), cells_.end(),
            [](const HexCell& a, const HexCell& b) { return a.id < b.id; });
  index_.clear();
  index_.reserve(cells_.size());
  for (size_t i = 0; i < cells_.size(); ++i) index_.emplace(cells_[i].id, i);
}

HexGrid HexGrid::build(const BoundingBox& bbox, double edge_len, Vec2 origin) {
  if (!(edge_len > 0.0)) throw InvalidInputError("hex grid: edge length must be > 0");
  if (!(bbox.width() > 0.0) || !(bbox.height() > 0.0))
    throw InvalidInputError("hex grid: degenerate bounding box");

  HexGrid g;
  g.edge_len_ = edge_len;
  g.origin_ = origin;

  const double a = edge_len;
  const std::vector<Vec2> rect = {
      bbox.min, {bbox.max.x, bbox.min.y}, bbox.max, {bbox.min.x, bbox.max.y}};

  int q_lo = static_cast<int>(std::floor((bbox.min.x - origin.x - 2 * a) / (1.5 * a))) - 1;
  int q_hi = static_cast<int>(std::ceil((bbox.max.x - origin.x + 2 * a) / (1.5 * a))) + 1;
  for (int q = q_lo; q <= q_hi; ++q) {
    double cy_off = 0.5 * q;
    int r_lo = static_cast<int>(
                   std::floor((bbox.min.y - origin.y - 2 * a) / (kSqrt3 * a) - cy_off)) - 1;
    int r_hi = static_cast<int>(
                   std::ceil((bbox.max.y - origin.y + 2 * a) / (kSqrt3 * a) - cy_off)) + 1;
    for (int r = r_lo; r <= r_hi; ++r) {
      Vec2 c = axial_center(origin, a, q, r);
      std::vector<Vec2> hex;
      hex.reserve(6);
      for (int k = 0; k < 6; ++k) {
        double ang = M_PI / 3.0 * k;
        hex.push_back({c.x + a * std::cos(ang), c.y + a * std::sin(ang)});
      }
      auto clipped = clip_convex(hex, rect);
      if (polygon_area(clipped) > kAreaEps) g.add_cell(q, r);
    }
  }
  g.finalize();
  return g;
}

HexGrid HexGrid::from_axial(double edge_len, std::span<const AxialCoord> coords,
                            Vec2 origin) {
  if (!(edge_len > 0.0)) throw InvalidInputError("hex grid: edge length must be > 0");
  if (coords.empty()) throw InvalidInputError("hex grid: empty cell list");
  HexGrid g;
  g.edge_len_ = edge_len;
  g.origin_ = origin;
  for (const auto& c : coords) g.add_cell(c.q, c.r);
  g.finalize();
  if (g.index_.size() != g.cells_.size())
    throw InvalidInputError("hex grid: duplicate cells in list");
  return g;
}

const HexCell* HexGrid::find(CellId id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &cells_[it->second];
}

const HexCell& HexGrid::at(CellId id) const {
  const HexCell* c = find(id);
  if (!c) throw ConsistencyError("hex grid: unknown cell id");
  return *c;
}

std::optional<size_t> HexGrid::index_of(CellId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<CellId> HexGrid::try_locate(Vec2 p) const {
  AxialCoord n = round_axial(origin_, edge_len_, p);
  std::optional<CellId> best;
  auto consider = [&](int q, int r) {
    const HexCell* c = find(encode_axial(q, r));
    if (!c) return;
    if (!polygon_contains(c->polygon, p, kContainEps)) return;
    if (!best || c->id < *best) best = c->id;
  };
  consider(n.q, n.r);
  for (int k = 0; k < 6; ++k) consider(n.q + kNeighborQ[k], n.r + kNeighborR[k]);
  return best;
}

CellId HexGrid::locate(Vec2 p) const {
  auto id = try_locate(p);
  if (!id) throw OutOfBoundsError("locate: point outside the grid");
  return *id;
}

std::vector<CellId> HexGrid::cells_overlapping_disk(Vec2 center, double radius) const {
  if (!(radius > 0.0)) throw InvalidInputError("overlap: radius must be > 0");
  const double a = edge_len_;
  std::vector<CellId> out;
  int q_lo = static_cast<int>(std::floor((center.x - radius - origin_.x - 2 * a) / (1.5 * a))) - 1;
  int q_hi = static_cast<int>(std::ceil((center.x + radius - origin_.x + 2 * a) / (1.5 * a))) + 1;
  for (int q = q_lo; q <= q_hi; ++q) {
    double cy_off = 0.5 * q;
    int r_lo = static_cast<int>(std::floor(
                   (center.y - radius - origin_.y - 2 * a) / (kSqrt3 * a) - cy_off)) - 1;
    int r_hi = static_cast<int>(std::ceil(
                   (center.y + radius - origin_.y + 2 * a) / (kSqrt3 * a) - cy_off)) + 1;
    for (int r = r_lo; r <= r_hi; ++r) {
      const HexCell* c = find(encode_axial(q, r));
      if (!c) continue;
      if (overlap_area(*c, center, radius) > kAreaEps) out.push_back(c->id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

uint64_t HexGrid::fingerprint() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  uint64_t e;
  static_assert(sizeof(double) == sizeof(uint64_t));
  std::memcpy(&e, &edge_len_, 8);
  mix(e);
  std::memcpy(&e, &origin_.x, 8);
  mix(e);
  std::memcpy(&e, &origin_.y, 8);
  mix(e);
  for (const auto& c : cells_) mix(static_cast<uint64_t>(c.id));
  return h;
}

double disk_polygon_area(double radius) {
  if (!(radius > 0.0)) throw InvalidInputError("overlap: radius must be > 0");
  // 0.5 * n * R^2 * sin(2*pi/n); about 0.16% under the true circle.
  return 0.5 * kDiskVertices * radius * radius * std::sin(2.0 * M_PI / kDiskVertices);
}

double overlap_area(const HexCell& cell, Vec2 center, double radius) {
  if (!(radius > 0.0)) throw InvalidInputError("overlap: radius must be > 0");
  // Quick reject: centers farther apart than circumradius + disk radius.
  double circum = std::hypot(cell.polygon[0].x - cell.center.x,
                             cell.polygon[0].y - cell.center.y);
  if (dist(cell.center, center) > circum + radius) return 0.0;
  auto disk = regular_polygon(center, radius, kDiskVertices);
  auto clipped = clip_convex(disk, cell.polygon);
  double a = polygon_area(clipped);
  return a < 0.0 ? 0.0 : a;
}

std::string grid_to_geojson(const HexGrid& grid, const Projection& proj,
                            const std::string& meta_json) {
  std::ostringstream out;
  out << "{\"type\":\"FeatureCollection\",";
  if (!meta_json.empty()) out << "\"meta\":" << meta_json << ",";
  out << "\"features\":[";
  bool first = true;
  for (const auto& c : grid.cells()) {
    if (!first) out << ",";
    first = false;
    out << "{\"type\":\"Feature\",\"properties\":{\"cell_id\":" << c.id
        << ",\"q\":" << c.axial.q << ",\"r\":" << c.axial.r
        << "},\"geometry\":{\"type\":\"Polygon\",\"coordinates\":[[";
    for (int k = 0; k <= 6; ++k) {
      auto [lat, lon] = proj.to_latlon(c.polygon[k % 6]);
      if (k) out << ",";
      out << "[" << fmt_double(lon) << "," << fmt_double(lat) << "]";
    }
    out << "]]}}";
  }
  out << "]}";
  return out.str();
}

}  // namespace aedopt
