#include "aedopt/geometry.hpp"

namespace aedopt {

double polygon_area(std::span<const Vec2> poly) {
  if (poly.size() < 3) return 0.0;
  double s = 0.0;
  for (size_t i = 0, n = poly.size(); i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

bool polygon_contains(std::span<const Vec2> poly, Vec2 p, double eps_m) {
  for (size_t i = 0, n = poly.size(); i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    double ex = b.x - a.x, ey = b.y - a.y;
    double cross = ex * (p.y - a.y) - ey * (p.x - a.x);
    double len = std::hypot(ex, ey);
    if (len > 0.0 && cross < -eps_m * len) return false;
  }
  return true;
}

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  std::vector<Vec2> in;
  for (size_t i = 0, n = clip.size(); i < n && !out.empty(); ++i) {
    const Vec2& a = clip[i];
    const Vec2& b = clip[(i + 1) % n];
    double ex = b.x - a.x, ey = b.y - a.y;
    auto side = [&](Vec2 p) { return ex * (p.y - a.y) - ey * (p.x - a.x); };

    in.swap(out);
    out.clear();
    for (size_t j = 0, m = in.size(); j < m; ++j) {
      Vec2 cur = in[j];
      Vec2 nxt = in[(j + 1) % m];
      double sc = side(cur), sn = side(nxt);
      if (sc >= 0.0) out.push_back(cur);
      if ((sc >= 0.0) != (sn >= 0.0)) {
        double t = sc / (sc - sn);
        out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
      }
    }
  }
  return out;
}

std::vector<Vec2> regular_polygon(Vec2 center, double radius, int n) {
  std::vector<Vec2> v;
  v.reserve(n);
  for (int k = 0; k < n; ++k) {
    double a = 2.0 * M_PI * k / n;
    v.push_back({center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
  }
  return v;
}

}  // namespace aedopt
