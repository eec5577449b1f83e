#include "sweepnet/solution.hpp"

#include <fstream>
#include <sstream>

#include "sweepnet/common.hpp"

namespace sweepnet {

void check_feasible(const Instance& inst, const Solution& sol) {
  const int n = inst.num_areas();
  std::vector<int> count(n, 0);
  std::vector<int> out_of_range;
  for (const auto& tour : sol.tours) {
    for (const auto& action : tour) {
      if (action.area < 0 || action.area >= n) {
        out_of_range.push_back(action.area);
        continue;
      }
      ++count[action.area];
      if (action.corner < 0 || action.corner > 3)
        throw FeasibilityError("solution: corner index out of range for area " +
                               std::to_string(action.area));
      if (action.pattern < 0)
        throw FeasibilityError("solution: negative pattern index for area " +
                               std::to_string(action.area));
    }
  }
  std::string missing, duplicated, invalid;
  for (int i = 0; i < n; ++i) {
    if (count[i] == 0) missing += (missing.empty() ? "" : ",") + std::to_string(i);
    if (count[i] > 1) duplicated += (duplicated.empty() ? "" : ",") + std::to_string(i);
  }
  for (int a : out_of_range) invalid += (invalid.empty() ? "" : ",") + std::to_string(a);
  if (!missing.empty() || !duplicated.empty() || !invalid.empty()) {
    std::string msg = "solution infeasible:";
    if (!missing.empty()) msg += " missing areas {" + missing + "}";
    if (!duplicated.empty()) msg += " duplicated areas {" + duplicated + "}";
    if (!invalid.empty()) msg += " out-of-range areas {" + invalid + "}";
    throw FeasibilityError(msg);
  }
}

double cost_of_solution(const Instance& inst, const Solution& sol, const CostConfig& cfg) {
  check_feasible(inst, sol);
  if (sol.num_agents() > inst.num_agents())
    throw FeasibilityError("solution: more tours than agents");
  double total = 0.0;
  for (int a = 0; a < sol.num_agents(); ++a) {
    Point2 pos = inst.agents[a];
    for (const auto& action : sol.tours[a]) {
      const AreaSquare& area = inst.areas[action.area];
      const Point2 start = area.corner(action.corner);
      const ScanPath path = scan_path(area, action.corner, action.pattern, cfg);
      total += distance(pos, start) + path.length;
      pos = path.end;
    }
  }
  return total;
}

std::string serialize_solution(const Solution& sol) {
  std::string out = "solution m=" + std::to_string(sol.num_agents()) +
                    " total_cost=" + format_double(sol.total_cost) + "\n";
  for (int a = 0; a < sol.num_agents(); ++a) {
    out += "tour " + std::to_string(a) + " " + std::to_string(sol.tours[a].size());
    for (const auto& act : sol.tours[a])
      out += " " + std::to_string(act.area) + " " + std::to_string(act.corner) + " " +
             std::to_string(act.pattern);
    out += "\n";
  }
  out += "end\n";
  return out;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool next_line(std::string_view text, size_t& pos, std::string_view& line, int& line_no) {
  if (pos >= text.size()) return false;
  size_t end = text.find('\n', pos);
  if (end == std::string_view::npos) end = text.size();
  line = text.substr(pos, end - pos);
  pos = end < text.size() ? end + 1 : end;
  ++line_no;
  return true;
}

Solution parse_solution_at(std::string_view text, size_t& pos, int& line_no) {
  std::string_view line;
  for (;;) {
    if (!next_line(text, pos, line, line_no)) throw ParseError("solution: empty input");
    if (!line.empty() && line[0] != '#') break;
  }
  auto header = split_ws(line);
  if (header.size() != 3 || header[0] != "solution" || header[1].substr(0, 2) != "m=" ||
      header[2].substr(0, 11) != "total_cost=")
    throw ParseError("solution: line " + std::to_string(line_no) + ": malformed header");
  Solution sol;
  int m = 0;
  if (!parse_int(header[1].substr(2), m) || m < 0)
    throw ParseError("solution: line " + std::to_string(line_no) + ": bad m");
  if (!parse_double(header[2].substr(11), sol.total_cost))
    throw ParseError("solution: line " + std::to_string(line_no) + ": bad total_cost");
  sol.tours.resize(m);
  for (int a = 0; a < m; ++a) {
    if (!next_line(text, pos, line, line_no))
      throw ParseError("solution: truncated record (expected tour line)");
    auto tok = split_ws(line);
    int idx = -1, count = -1;
    if (tok.size() < 3 || tok[0] != "tour" || !parse_int(tok[1], idx) || idx != a ||
        !parse_int(tok[2], count) || count < 0 ||
        tok.size() != static_cast<size_t>(3 + 3 * count))
      throw ParseError("solution: line " + std::to_string(line_no) + ": malformed tour line");
    sol.tours[a].resize(count);
    for (int t = 0; t < count; ++t) {
      ScanAction& act = sol.tours[a][t];
      if (!parse_int(tok[3 + 3 * t], act.area) || !parse_int(tok[4 + 3 * t], act.corner) ||
          !parse_int(tok[5 + 3 * t], act.pattern))
        throw ParseError("solution: line " + std::to_string(line_no) + ": bad action triple");
    }
  }
  if (!next_line(text, pos, line, line_no) ||
      split_ws(line) != std::vector<std::string_view>{"end"})
    throw ParseError("solution: truncated record (expected 'end')");
  return sol;
}

}  // namespace

Solution parse_solution(std::string_view text) {
  size_t pos = 0;
  int line_no = 0;
  Solution sol = parse_solution_at(text, pos, line_no);
  if (text.substr(pos).find_first_not_of(" \t\n") != std::string_view::npos)
    throw ParseError("solution: trailing content after record");
  return sol;
}

void write_solutions(const std::filesystem::path& path, std::span<const Solution> sols) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_solutions: cannot open " + path.string());
  out << "# sweepnet solution file v1\n";
  for (const auto& sol : sols) out << serialize_solution(sol);
  if (!out) throw Error("write_solutions: write failed for " + path.string());
}

std::vector<Solution> read_solutions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_solutions: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::vector<Solution> out;
  size_t pos = 0;
  int line_no = 0;
  std::string_view view(text);
  while (pos < view.size()) {
    size_t probe = pos;
    int probe_line = line_no;
    std::string_view line;
    if (!next_line(view, probe, line, probe_line)) break;
    if (line.empty() || line[0] == '#') {
      pos = probe;
      line_no = probe_line;
      continue;
    }
    out.push_back(parse_solution_at(view, pos, line_no));
  }
  return out;
}

}  // namespace sweepnet
