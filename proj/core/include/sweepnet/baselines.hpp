#pragma once

#include "sweepnet/common.hpp"
#include "sweepnet/solution.hpp"

namespace sweepnet {

struct BruteForceOptions {
  // Refuse when the estimated leaf count n! * 4^n * p^n exceeds this cap.
  double max_leaves = 1e7;
  // When true (m == 2 only), areas may be partitioned freely between the two
  // agents instead of following the round-robin order.
  bool unconstrained_partition = false;
};

// Exhaustive exact solver for desk-scale instances. Enumerates every
// round-robin-feasible assignment (agent order fixed, area/corner/pattern
// free) and returns the cheapest; ties resolve to the lexicographically
// smallest step sequence of (area, corner, pattern) triples.
Solution brute_force_solve(const Instance& inst, const CostConfig& cfg,
                           const BruteForceOptions& opts = {});

// Round-robin constructive heuristic: each sub-step the acting agent takes
// the unassigned area with the nearest corner, that corner, and the pattern
// with the shorter scan path (ties to the lower index).
Solution nearest_neighbor_solve(const Instance& inst, const CostConfig& cfg);

// Uniformly random feasible solution (round-robin order).
Solution random_solve(const Instance& inst, Rng& rng, const CostConfig& cfg);

}  // namespace sweepnet
