#include "aedopt/density.hpp"

#include <algorithm>

#include "aedopt/errors.hpp"
#include "aedopt/rng.hpp"

namespace aedopt {

std::vector<CandidateSite> sample_candidates(std::span<const SiteRecord> sites,
                                             size_t count, uint64_t seed,
                                             double radius) {
  if (count > sites.size())
    throw InvalidInputError("sample_candidates: count exceeds site pool");
  std::vector<size_t> idx(sites.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  for (size_t i = 0; i < count; ++i) {
    size_t j = i + static_cast<size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<CandidateSite> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    const SiteRecord& s = sites[idx[i]];
    out.push_back({s.id, s.location, radius, 0.0});
  }
  return out;
}

std::pair<double, OverlapDecomposition> score_candidate(const CandidateSite& k,
                                                        const HexGrid& grid,
                                                        const SiteShareMap& shares) {
  if (shares.grid_fingerprint != grid.fingerprint())
    throw ConsistencyError("score: share map built on a different grid");
  if (!(k.radius > 0.0)) throw InvalidInputError("score: radius must be > 0");

  const double disk_area = disk_polygon_area(k.radius);
  const double r2 = k.radius * k.radius;

  OverlapDecomposition dec;
  double score = 0.0;
  for (CellId id : grid.cells_overlapping_disk(k.location, k.radius)) {
    const HexCell& cell = grid.at(id);
    double ov = overlap_area(cell, k.location, k.radius);
    if (!(ov > 0.0)) continue;
    double omega = ov / disk_area;

    double phi_sum = 0.0;
    auto it = shares.by_cell.find(id);
    if (it != shares.by_cell.end()) {
      for (int s : it->second) {
        const SiteShare& share = shares.shares[s];
        if (dist2(share.location, k.location) <= r2) phi_sum += share.phi_p;
      }
    }
    double rho = phi_sum / cell.area;
    dec.terms.push_back({id, omega, rho});
    dec.omega_sum += omega;
    score += omega * rho;
  }
  return {score, std::move(dec)};
}

std::vector<CandidateSite> score_all(std::vector<CandidateSite> candidates,
                                     const HexGrid& grid, const SiteShareMap& shares) {
  if (candidates.empty()) throw EmptyInputError("score: no candidates");
  for (auto& k : candidates) {
    try {
      k.score = score_candidate(k, grid, shares).first;
    } catch (const Error& e) {
      throw ConsistencyError("score: candidate " + std::to_string(k.id) + ": " +
                             e.what());
    }
  }
  return candidates;
}

}  // namespace aedopt
