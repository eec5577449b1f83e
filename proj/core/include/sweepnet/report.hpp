#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sweepnet/common.hpp"

namespace sweepnet {

struct GapRow {
  int instance_id = 0;
  double cost = 0.0;
  double ref_cost = 0.0;
  double gap = 0.0;  // (cost - ref) / ref
  std::optional<double> time_s;
  std::optional<double> ref_time_s;
};

struct GapReport {
  std::vector<GapRow> rows;
  std::vector<int> missing_refs;  // instance ids excluded for lack of a reference
  double mean_gap = 0.0, median_gap = 0.0, stddev_gap = 0.0;
  double mean_cost = 0.0, mean_ref_cost = 0.0;
  std::optional<double> mean_time_s, mean_ref_time_s;
};

// Pairs candidate costs with reference costs by instance id (vector index).
// Instances without a reference are listed in missing_refs and excluded from
// the aggregates.
GapReport compute_gap_report(std::span<const double> costs,
                             std::span<const std::optional<double>> ref_costs,
                             std::span<const std::optional<double>> times = {},
                             std::span<const std::optional<double>> ref_times = {});

void write_gap_csv(const std::filesystem::path& path, const GapReport& report);
std::string format_gap_summary(const GapReport& report, const std::string& candidate_label,
                               const std::string& reference_label);

// {instance_id, cost[, time_s]} CSV for importing externally computed
// reference results. Header row optional. Returns a dense vector indexed by
// instance id; ids beyond `count` are ignored.
std::vector<std::optional<double>> read_reference_csv(const std::filesystem::path& path,
                                                      int count,
                                                      std::vector<std::optional<double>>* times);

// Per-instance timing CSV written by the solver: {instance_id, cost, time_s}.
struct TimingRow {
  int instance_id = 0;
  double cost = 0.0;
  double time_s = 0.0;
};
void write_timing_csv(const std::filesystem::path& path, std::span<const TimingRow> rows);
std::vector<TimingRow> read_timing_csv(const std::filesystem::path& path);

}  // namespace sweepnet
