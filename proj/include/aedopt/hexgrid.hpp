#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "aedopt/geometry.hpp"

namespace aedopt {

// Flat-topped hexagonal tessellation on axial coordinates (q, r). Cell ids
// encode (q, r) with a fixed bias so that id order equals lexicographic
// (q, r) order; that order is the canonical tie-breaking order everywhere.

using CellId = int64_t;

struct AxialCoord {
  int q = 0;
  int r = 0;
};

inline constexpr int kAxialBias = 1 << 30;

inline CellId encode_axial(int q, int r) {
  return (static_cast<int64_t>(q + kAxialBias) << 32) |
         static_cast<int64_t>(static_cast<uint32_t>(r + kAxialBias));
}

inline AxialCoord decode_axial(CellId id) {
  int q = static_cast<int>((id >> 32) - kAxialBias);
  int r = static_cast<int>((id & 0xffffffffLL) - kAxialBias);
  return {q, r};
}

struct HexCell {
  CellId id = 0;
  AxialCoord axial;
  Vec2 center;
  std::array<Vec2, 6> polygon;  // CCW, vertex 0 due east of the center
  double area = 0.0;
};

// Default edge length in meters (grid sized so a responder can run from a
// cell center to its edge in about four minutes).
inline constexpr double kDefaultEdgeLen = 1410.0;

// Number of vertices used to polygonize a disk for clipping.
inline constexpr int kDiskVertices = 64;

class HexGrid {
 public:
  // Cells with positive overlap against the box; covers every point in it.
  static HexGrid build(const BoundingBox& bbox, double edge_len, Vec2 origin = {0.0, 0.0});

  // Arbitrary cell subsets, for irregular study regions.
  static HexGrid from_axial(double edge_len, std::span<const AxialCoord> coords,
                            Vec2 origin = {0.0, 0.0});

  const std::vector<HexCell>& cells() const { return cells_; }
  size_t size() const { return cells_.size(); }
  double edge_len() const { return edge_len_; }
  Vec2 origin() const { return origin_; }

  const HexCell* find(CellId id) const;
  const HexCell& at(CellId id) const;  // throws ConsistencyError if absent
  std::optional<size_t> index_of(CellId id) const;

  // Point binning. Ties on shared edges/vertices resolve to the smallest
  // cell id among the touching cells present in this grid.
  std::optional<CellId> try_locate(Vec2 p) const;
  CellId locate(Vec2 p) const;  // throws OutOfBoundsError when outside

  // Ids of grid cells whose polygon has positive overlap with the disk.
  std::vector<CellId> cells_overlapping_disk(Vec2 center, double radius) const;

  // Stable identity over (edge length, origin, cell set); used to detect
  // structures built against a different grid.
  uint64_t fingerprint() const;

 private:
  HexGrid() = default;
  void add_cell(int q, int r);
  void finalize();

  double edge_len_ = kDefaultEdgeLen;
  Vec2 origin_;
  std::vector<HexCell> cells_;  // sorted by id
  std::unordered_map<CellId, size_t> index_;
};

// Area of hexagon ∩ disk, with the disk polygonized as a regular 64-gon.
// Throws InvalidInputError for radius <= 0.
double overlap_area(const HexCell& cell, Vec2 center, double radius);

// Area of the polygonized disk itself (the denominator paired with
// overlap_area so per-cell fractions sum to one inside the grid).
double disk_polygon_area(double radius);

// GeoJSON FeatureCollection of cell polygons (ids in properties).
std::string grid_to_geojson(const HexGrid& grid, const Projection& proj,
                            const std::string& meta_json = "");

}  // namespace aedopt
