#pragma once

#include <compare>
#include <filesystem>
#include <span>
#include <vector>

#include "sweepnet/instance.hpp"

namespace sweepnet {

// One assignment: scan area `area` starting at corner `corner` using scan
// pattern `pattern`.
struct ScanAction {
  int area = 0;
  int corner = 0;
  int pattern = 0;

  friend auto operator<=>(const ScanAction&, const ScanAction&) = default;
};

struct Solution {
  std::vector<std::vector<ScanAction>> tours;  // one ordered list per agent
  double total_cost = 0.0;

  int num_agents() const { return static_cast<int>(tours.size()); }
};

// Throws FeasibilityError (listing the offending areas) unless every area
// index in [0, n) appears exactly once across all tours.
void check_feasible(const Instance& inst, const Solution& sol);

// Total tour length: per agent, Euclidean travel from the current position to
// each chosen corner plus the scan path length, chaining positions through
// scan end points. Validates feasibility first.
double cost_of_solution(const Instance& inst, const Solution& sol, const CostConfig& cfg);

std::string serialize_solution(const Solution& sol);
Solution parse_solution(std::string_view text);

void write_solutions(const std::filesystem::path& path, std::span<const Solution> sols);
std::vector<Solution> read_solutions(const std::filesystem::path& path);

}  // namespace sweepnet
