#include "sweepnet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sweepnet {

GapReport compute_gap_report(std::span<const double> costs,
                             std::span<const std::optional<double>> ref_costs,
                             std::span<const std::optional<double>> times,
                             std::span<const std::optional<double>> ref_times) {
  if (costs.size() != ref_costs.size())
    throw ValidationError("gap report: cost and reference counts differ");
  GapReport rep;
  std::vector<double> gaps;
  double time_sum = 0.0, ref_time_sum = 0.0;
  int time_count = 0, ref_time_count = 0;
  for (size_t i = 0; i < costs.size(); ++i) {
    if (!ref_costs[i]) {
      rep.missing_refs.push_back(static_cast<int>(i));
      continue;
    }
    GapRow row;
    row.instance_id = static_cast<int>(i);
    row.cost = costs[i];
    row.ref_cost = *ref_costs[i];
    if (row.ref_cost == 0.0)
      throw ValidationError("gap report: zero reference cost for instance " +
                            std::to_string(i));
    row.gap = (row.cost - row.ref_cost) / row.ref_cost;
    if (i < times.size() && times[i]) {
      row.time_s = *times[i];
      time_sum += *times[i];
      ++time_count;
    }
    if (i < ref_times.size() && ref_times[i]) {
      row.ref_time_s = *ref_times[i];
      ref_time_sum += *ref_times[i];
      ++ref_time_count;
    }
    gaps.push_back(row.gap);
    rep.mean_cost += row.cost;
    rep.mean_ref_cost += row.ref_cost;
    rep.rows.push_back(row);
  }
  const size_t k = rep.rows.size();
  if (k == 0) return rep;
  rep.mean_cost /= static_cast<double>(k);
  rep.mean_ref_cost /= static_cast<double>(k);
  rep.mean_gap = 0.0;
  for (double g : gaps) rep.mean_gap += g;
  rep.mean_gap /= static_cast<double>(k);
  double sq = 0.0;
  for (double g : gaps) sq += (g - rep.mean_gap) * (g - rep.mean_gap);
  rep.stddev_gap = std::sqrt(sq / static_cast<double>(k));
  std::sort(gaps.begin(), gaps.end());
  rep.median_gap = k % 2 == 1 ? gaps[k / 2] : 0.5 * (gaps[k / 2 - 1] + gaps[k / 2]);
  if (time_count > 0) rep.mean_time_s = time_sum / time_count;
  if (ref_time_count > 0) rep.mean_ref_time_s = ref_time_sum / ref_time_count;
  return rep;
}

void write_gap_csv(const std::filesystem::path& path, const GapReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_gap_csv: cannot open " + path.string());
  out << "instance_id,cost,ref_cost,gap,time_s,ref_time_s\n";
  for (const auto& r : report.rows) {
    out << r.instance_id << "," << format_double(r.cost) << "," << format_double(r.ref_cost)
        << "," << format_double(r.gap) << ",";
    if (r.time_s) out << format_double(*r.time_s);
    out << ",";
    if (r.ref_time_s) out << format_double(*r.ref_time_s);
    out << "\n";
  }
  if (!out) throw Error("write_gap_csv: write failed for " + path.string());
}

std::string format_gap_summary(const GapReport& report, const std::string& candidate_label,
                               const std::string& reference_label) {
  char buf[256];
  std::string s;
  s += "gap report: " + candidate_label + " vs " + reference_label + "\n";
  std::snprintf(buf, sizeof(buf), "  %-22s %d\n", "instances", (int)report.rows.size());
  s += buf;
  std::snprintf(buf, sizeof(buf), "  %-22s %d\n", "missing references",
                (int)report.missing_refs.size());
  s += buf;
  if (report.rows.empty()) return s;
  std::snprintf(buf, sizeof(buf), "  %-22s %.6f\n", "mean cost (mu)", report.mean_cost);
  s += buf;
  std::snprintf(buf, sizeof(buf), "  %-22s %.6f\n", "mean ref cost (mu)", report.mean_ref_cost);
  s += buf;
  std::snprintf(buf, sizeof(buf), "  %-22s %.4f%%\n", "mean gap", 100.0 * report.mean_gap);
  s += buf;
  std::snprintf(buf, sizeof(buf), "  %-22s %.4f%%\n", "median gap", 100.0 * report.median_gap);
  s += buf;
  std::snprintf(buf, sizeof(buf), "  %-22s %.4f%%\n", "stddev gap", 100.0 * report.stddev_gap);
  s += buf;
  if (report.mean_time_s) {
    std::snprintf(buf, sizeof(buf), "  %-22s %.6f\n", "mean time (s)", *report.mean_time_s);
    s += buf;
  }
  if (report.mean_ref_time_s) {
    std::snprintf(buf, sizeof(buf), "  %-22s %.6f\n", "mean ref time (s)",
                  *report.mean_ref_time_s);
    s += buf;
  }
  return s;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<std::optional<double>> read_reference_csv(const std::filesystem::path& path,
                                                      int count,
                                                      std::vector<std::optional<double>>* times) {
  std::ifstream in(path);
  if (!in) throw Error("read_reference_csv: cannot open " + path.string());
  std::vector<std::optional<double>> refs(count);
  if (times) times->assign(count, std::nullopt);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv(line);
    if (fields.size() < 2)
      throw ParseError("reference csv: line " + std::to_string(line_no) + ": need id,cost");
    int id;
    double cost;
    if (!parse_int(fields[0], id)) {
      if (line_no == 1) continue;  // header row
      throw ParseError("reference csv: line " + std::to_string(line_no) + ": bad instance id");
    }
    if (!parse_double(fields[1], cost))
      throw ParseError("reference csv: line " + std::to_string(line_no) + ": bad cost");
    if (id < 0 || id >= count) continue;
    refs[id] = cost;
    if (times && fields.size() >= 3 && !fields[2].empty()) {
      double t;
      if (parse_double(fields[2], t)) (*times)[id] = t;
    }
  }
  return refs;
}

void write_timing_csv(const std::filesystem::path& path, std::span<const TimingRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_timing_csv: cannot open " + path.string());
  out << "instance_id,cost,time_s\n";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.6f", r.time_s);
    out << r.instance_id << "," << format_double(r.cost) << "," << buf << "\n";
  }
  if (!out) throw Error("write_timing_csv: write failed for " + path.string());
}

std::vector<TimingRow> read_timing_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_timing_csv: cannot open " + path.string());
  std::vector<TimingRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv(line);
    if (fields.size() != 3)
      throw ParseError("timing csv: line " + std::to_string(line_no) + ": need id,cost,time_s");
    TimingRow r;
    if (!parse_int(fields[0], r.instance_id)) {
      if (line_no == 1) continue;
      throw ParseError("timing csv: line " + std::to_string(line_no) + ": bad instance id");
    }
    if (!parse_double(fields[1], r.cost) || !parse_double(fields[2], r.time_s))
      throw ParseError("timing csv: line " + std::to_string(line_no) + ": bad fields");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace sweepnet
