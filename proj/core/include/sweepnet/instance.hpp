#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sweepnet/geometry.hpp"

namespace sweepnet {

// One problem instance: m agent start positions and n square areas inside the
// unit square, plus a weighted adjacency over the areas.
struct Instance {
  uint64_t seed = 0;
  std::vector<Point2> agents;
  std::vector<AreaSquare> areas;
  Eigen::MatrixXd adjacency;  // n x n, symmetric, zero diagonal
  // Recipe used to build `adjacency`; k_nearest is empty for a complete graph.
  std::optional<int> k_nearest;

  int num_agents() const { return static_cast<int>(agents.size()); }
  int num_areas() const { return static_cast<int>(areas.size()); }

  bool operator==(const Instance& other) const;
};

struct GenerateOptions {
  int max_attempts = 10000;                 // placement retries per entity
  std::optional<int> k_nearest;             // empty -> complete adjacency
  std::optional<std::vector<Point2>> fixed_agents;  // reuse these start positions
};

// Deterministic rejection-sampling generator: distinct uniform agent
// positions, uniform area centers with radius in [0.01, 0.03], no overlaps,
// everything inside the unit square.
Instance generate_instance(uint64_t seed, int n, int m, const GenerateOptions& opts = {});

// Distance-weighted adjacency: weight(i,j) = center distance if j is among
// i's k nearest neighbors (symmetrized), or for every pair when k_nearest is
// empty. Diagonal is zero.
Eigen::MatrixXd build_adjacency(const std::vector<AreaSquare>& areas,
                                std::optional<int> k_nearest);

// Throws ValidationError if any structural invariant is violated.
void validate_instance(const Instance& inst);

// Textual record format; parse(serialize(x)) == x exactly.
std::string serialize_instance(const Instance& inst);
Instance parse_instance(std::string_view text);

void write_instances(const std::filesystem::path& path, std::span<const Instance> instances);
std::vector<Instance> read_instances(const std::filesystem::path& path);

// Neighbor lists (indices with positive adjacency weight).
std::vector<std::vector<int>> neighbor_lists(const Eigen::MatrixXd& adjacency);
std::vector<std::vector<int>> complete_graph(int n);

}  // namespace sweepnet
