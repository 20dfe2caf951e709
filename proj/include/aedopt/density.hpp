#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "aedopt/explain.hpp"
#include "aedopt/hexgrid.hpp"

namespace aedopt {

// Attribution-weighted incident density around candidate AED locations:
// S_k = sum over intersecting cells of (overlap fraction) x (share density).

struct CandidateSite {
  int64_t id = 0;
  Vec2 location;
  double radius = 0.0;  // coverage disk radius in meters
  double score = 0.0;
};

// Uniform sample of `count` sites without replacement, deterministic per
// seed. count > |sites| is an InvalidInputError.
std::vector<CandidateSite> sample_candidates(std::span<const SiteRecord> sites,
                                             size_t count, uint64_t seed,
                                             double radius);

struct OverlapTerm {
  CellId cell = 0;
  double omega = 0.0;  // overlap area / disk area
  double rho = 0.0;    // in-disk share sum / cell area
};

struct OverlapDecomposition {
  std::vector<OverlapTerm> terms;
  double omega_sum = 0.0;  // == 1 (within 1e-6) when the disk lies in the grid
};

// Sites count as in range iff dist(site, candidate) <= radius (closed disk;
// the same rule evaluation uses for coverage).
std::pair<double, OverlapDecomposition> score_candidate(const CandidateSite& k,
                                                        const HexGrid& grid,
                                                        const SiteShareMap& shares);

// Scores every candidate, preserving order; per-candidate failures rethrow
// with the candidate id attached.
std::vector<CandidateSite> score_all(std::vector<CandidateSite> candidates,
                                     const HexGrid& grid, const SiteShareMap& shares);

}  // namespace aedopt
