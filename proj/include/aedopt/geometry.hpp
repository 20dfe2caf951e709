#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace aedopt {

// Planar coordinates in meters east/north of the declared region origin.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

using ProjectedPoint = Vec2;

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }

inline double dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline double dist2(Vec2 a, Vec2 b) {
  double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct BoundingBox {
  Vec2 min;
  Vec2 max;
  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
};

// Shoelace area; positive for counter-clockwise rings.
double polygon_area(std::span<const Vec2> poly);

// Closed containment for a convex CCW polygon: the point counts as inside
// when its signed distance to every edge is >= -eps_m (meters).
bool polygon_contains(std::span<const Vec2> poly, Vec2 p, double eps_m = 1e-6);

// Sutherland-Hodgman clip of a polygon against a convex CCW clip polygon.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

// Regular n-gon inscribed in the circle (vertex 0 on the +x axis, CCW).
std::vector<Vec2> regular_polygon(Vec2 center, double radius, int n);

// Equirectangular projection about a declared region centroid. Good to
// sub-meter accuracy at city scale, exactly invertible, and keeps all grid
// math in a flat frame.
struct Projection {
  double origin_lat = 0.0;
  double origin_lon = 0.0;
  static constexpr double kEarthRadius = 6371000.0;

  Vec2 to_xy(double lat, double lon) const {
    double k = M_PI / 180.0 * kEarthRadius;
    return {(lon - origin_lon) * k * std::cos(origin_lat * M_PI / 180.0),
            (lat - origin_lat) * k};
  }
  // Returns {lat, lon}.
  std::pair<double, double> to_latlon(Vec2 p) const {
    double k = M_PI / 180.0 * kEarthRadius;
    return {origin_lat + p.y / k,
            origin_lon + p.x / (k * std::cos(origin_lat * M_PI / 180.0))};
  }
};

}  // namespace aedopt
