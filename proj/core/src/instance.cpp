#include "sweepnet/instance.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sweepnet/common.hpp"

namespace sweepnet {

namespace {

constexpr double kMinRadius = 0.01;
constexpr double kMaxRadius = 0.03;

bool in_unit_square(const AreaSquare& a) {
  return a.center.x - a.radius >= 0.0 && a.center.x + a.radius <= 1.0 &&
         a.center.y - a.radius >= 0.0 && a.center.y + a.radius <= 1.0;
}

}  // namespace

bool Instance::operator==(const Instance& other) const {
  return seed == other.seed && agents == other.agents && areas == other.areas &&
         k_nearest == other.k_nearest && adjacency.rows() == other.adjacency.rows() &&
         adjacency.cols() == other.adjacency.cols() && adjacency == other.adjacency;
}

Instance generate_instance(uint64_t seed, int n, int m, const GenerateOptions& opts) {
  if (n < 1) throw ValidationError("generate_instance: n must be >= 1");
  if (m < 1) throw ValidationError("generate_instance: m must be >= 1");
  if (opts.fixed_agents && static_cast<int>(opts.fixed_agents->size()) != m)
    throw ValidationError("generate_instance: fixed_agents size does not match m");

  Rng rng(seed);
  Instance inst;
  inst.seed = seed;
  inst.k_nearest = opts.k_nearest;

  if (opts.fixed_agents) {
    inst.agents = *opts.fixed_agents;
  } else {
    inst.agents.reserve(m);
    for (int i = 0; i < m; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
        Point2 p{rng.uniform01(), rng.uniform01()};
        if (std::find(inst.agents.begin(), inst.agents.end(), p) != inst.agents.end()) continue;
        inst.agents.push_back(p);
        placed = true;
        break;
      }
      if (!placed)
        throw GenerationError("generate_instance: could not place agent " + std::to_string(i));
    }
  }

  inst.areas.reserve(n);
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
      AreaSquare a;
      a.center = {rng.uniform01(), rng.uniform01()};
      a.radius = rng.uniform(kMinRadius, kMaxRadius);
      if (!in_unit_square(a)) continue;
      bool bad = false;
      for (const auto& other : inst.areas) {
        if (areas_overlap(a, other)) {
          bad = true;
          break;
        }
      }
      if (!bad) {
        for (const auto& agent : inst.agents) {
          if (point_in_area(agent, a)) {
            bad = true;
            break;
          }
        }
      }
      if (bad) continue;
      inst.areas.push_back(a);
      placed = true;
      break;
    }
    if (!placed)
      throw GenerationError("generate_instance: could not place area " + std::to_string(i));
  }

  inst.adjacency = build_adjacency(inst.areas, inst.k_nearest);
  return inst;
}

Eigen::MatrixXd build_adjacency(const std::vector<AreaSquare>& areas,
                                std::optional<int> k_nearest) {
  const int n = static_cast<int>(areas.size());
  if (n < 1) throw ValidationError("build_adjacency: need at least one area");
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  if (n == 1) return adj;

  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = distance(areas[i].center, areas[j].center);
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }

  if (!k_nearest) {
    adj = dist;
    adj.diagonal().setZero();
    return adj;
  }

  const int k = *k_nearest;
  if (k < 1 || k > n - 1)
    throw ValidationError("build_adjacency: k_nearest must lie in [1, n-1]");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) order[j] = j;
    order.erase(order.begin() + i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (dist(i, a) != dist(i, b)) return dist(i, a) < dist(i, b);
      return a < b;  // deterministic tie-break
    });
    for (int r = 0; r < k; ++r) {
      const int j = order[r];
      adj(i, j) = dist(i, j);
      adj(j, i) = dist(i, j);  // symmetrize
    }
    order.resize(n);
  }
  return adj;
}

void validate_instance(const Instance& inst) {
  const int m = inst.num_agents();
  const int n = inst.num_areas();
  if (m < 1) throw ValidationError("instance: must have at least one agent");
  if (n < 1) throw ValidationError("instance: must have at least one area");
  for (int i = 0; i < m; ++i) {
    const auto& p = inst.agents[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw ValidationError("instance: agent " + std::to_string(i) + " has non-finite position");
    if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0)
      throw ValidationError("instance: agent " + std::to_string(i) + " outside the unit square");
  }
  for (int i = 0; i < n; ++i) {
    const auto& a = inst.areas[i];
    if (!std::isfinite(a.center.x) || !std::isfinite(a.center.y) || !std::isfinite(a.radius))
      throw ValidationError("instance: area " + std::to_string(i) + " has non-finite fields");
    if (a.radius < kMinRadius || a.radius > kMaxRadius)
      throw ValidationError("instance: area " + std::to_string(i) + " radius outside [0.01, 0.03]");
    if (!in_unit_square(a))
      throw ValidationError("instance: area " + std::to_string(i) + " outside the unit square");
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (areas_overlap(inst.areas[i], inst.areas[j]))
        throw ValidationError("instance: areas " + std::to_string(i) + " and " +
                              std::to_string(j) + " overlap");
    }
    for (int a = 0; a < m; ++a) {
      if (point_in_area(inst.agents[a], inst.areas[i]))
        throw ValidationError("instance: agent " + std::to_string(a) + " lies inside area " +
                              std::to_string(i));
    }
  }
  if (inst.adjacency.rows() != n || inst.adjacency.cols() != n)
    throw ValidationError("instance: adjacency shape does not match the number of areas");
  for (int i = 0; i < n; ++i) {
    if (inst.adjacency(i, i) != 0.0)
      throw ValidationError("instance: adjacency diagonal must be zero");
    for (int j = 0; j < n; ++j) {
      if (inst.adjacency(i, j) < 0.0 || inst.adjacency(i, j) != inst.adjacency(j, i))
        throw ValidationError("instance: adjacency must be symmetric and nonnegative");
    }
  }
}

std::string serialize_instance(const Instance& inst) {
  std::string out;
  out += "instance seed=" + std::to_string(inst.seed);
  out += " m=" + std::to_string(inst.num_agents());
  out += " n=" + std::to_string(inst.num_areas());
  out += " adjacency=";
  out += inst.k_nearest ? "knn" : "full";
  out += " k=" + std::to_string(inst.k_nearest.value_or(0));
  out += "\n";
  for (const auto& a : inst.agents)
    out += "agent " + format_double(a.x) + " " + format_double(a.y) + "\n";
  for (const auto& a : inst.areas)
    out += "area " + format_double(a.center.x) + " " + format_double(a.center.y) + " " +
           format_double(a.radius) + "\n";
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

std::string_view field_value(std::string_view token, std::string_view key, int line_no) {
  if (token.size() < key.size() + 1 || token.substr(0, key.size()) != key ||
      token[key.size()] != '=')
    throw ParseError("instance: line " + std::to_string(line_no) + ": expected '" +
                     std::string(key) + "=...'");
  return token.substr(key.size() + 1);
}

// Pulls the next line out of `text`, advancing `pos`. Returns false at EOF.
bool next_line(std::string_view text, size_t& pos, std::string_view& line, int& line_no) {
  if (pos >= text.size()) return false;
  size_t end = text.find('\n', pos);
  if (end == std::string_view::npos) end = text.size();
  line = text.substr(pos, end - pos);
  pos = end < text.size() ? end + 1 : end;
  ++line_no;
  return true;
}

}  // namespace

Instance parse_instance(std::string_view text) {
  size_t pos = 0;
  int line_no = 0;
  std::string_view line;
  for (;;) {
    if (!next_line(text, pos, line, line_no))
      throw ParseError("instance: empty input");
    if (!line.empty() && line[0] != '#') break;
  }
  auto header = split_ws(line);
  if (header.size() != 6 || header[0] != "instance")
    throw ParseError("instance: line " + std::to_string(line_no) + ": malformed header");
  Instance inst;
  int m = 0, n = 0, k = 0;
  if (!parse_u64(field_value(header[1], "seed", line_no), inst.seed))
    throw ParseError("instance: line " + std::to_string(line_no) + ": bad seed");
  if (!parse_int(field_value(header[2], "m", line_no), m) || m < 1)
    throw ParseError("instance: line " + std::to_string(line_no) + ": bad m");
  if (!parse_int(field_value(header[3], "n", line_no), n) || n < 1)
    throw ParseError("instance: line " + std::to_string(line_no) + ": bad n");
  std::string_view adjacency_mode = field_value(header[4], "adjacency", line_no);
  if (!parse_int(field_value(header[5], "k", line_no), k))
    throw ParseError("instance: line " + std::to_string(line_no) + ": bad k");
  if (adjacency_mode == "knn") {
    inst.k_nearest = k;
  } else if (adjacency_mode != "full") {
    throw ParseError("instance: line " + std::to_string(line_no) + ": bad adjacency mode");
  }

  inst.agents.reserve(m);
  for (int i = 0; i < m; ++i) {
    if (!next_line(text, pos, line, line_no))
      throw ParseError("instance: truncated record (expected agent line)");
    auto tok = split_ws(line);
    Point2 p;
    if (tok.size() != 3 || tok[0] != "agent" || !parse_double(tok[1], p.x) ||
        !parse_double(tok[2], p.y))
      throw ParseError("instance: line " + std::to_string(line_no) + ": malformed agent line");
    inst.agents.push_back(p);
  }
  inst.areas.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (!next_line(text, pos, line, line_no))
      throw ParseError("instance: truncated record (expected area line)");
    auto tok = split_ws(line);
    AreaSquare a;
    if (tok.size() != 4 || tok[0] != "area" || !parse_double(tok[1], a.center.x) ||
        !parse_double(tok[2], a.center.y) || !parse_double(tok[3], a.radius))
      throw ParseError("instance: line " + std::to_string(line_no) + ": malformed area line");
    inst.areas.push_back(a);
  }
  if (!next_line(text, pos, line, line_no) || split_ws(line) != std::vector<std::string_view>{"end"})
    throw ParseError("instance: truncated record (expected 'end')");
  if (pos < text.size()) {
    // Trailing content after a single-record parse is a caller error.
    std::string_view rest = text.substr(pos);
    if (rest.find_first_not_of(" \t\n") != std::string_view::npos)
      throw ParseError("instance: trailing content after record");
  }

  inst.adjacency = build_adjacency(inst.areas, inst.k_nearest);
  validate_instance(inst);
  return inst;
}

void write_instances(const std::filesystem::path& path, std::span<const Instance> instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_instances: cannot open " + path.string());
  out << "# sweepnet instance file v1\n";
  for (const auto& inst : instances) out << serialize_instance(inst);
  if (!out) throw Error("write_instances: write failed for " + path.string());
}

std::vector<Instance> read_instances(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_instances: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::vector<Instance> out;
  size_t pos = 0;
  int line_no = 0;
  std::string_view view(text);
  while (pos < view.size()) {
    // Find the next record start.
    size_t probe = pos;
    int probe_line = line_no;
    std::string_view line;
    if (!next_line(view, probe, line, probe_line)) break;
    if (line.empty() || line[0] == '#') {
      pos = probe;
      line_no = probe_line;
      continue;
    }
    // Record text spans until the matching 'end' line.
    size_t rec_end = probe;
    int rec_line = probe_line;
    bool closed = false;
    std::string_view body;
    while (next_line(view, rec_end, body, rec_line)) {
      if (split_ws(body) == std::vector<std::string_view>{"end"}) {
        closed = true;
        break;
      }
    }
    if (!closed) throw ParseError("instance: line " + std::to_string(line_no + 1) +
                                  ": record without 'end'");
    out.push_back(parse_instance(view.substr(pos, rec_end - pos)));
    pos = rec_end;
    line_no = rec_line;
  }
  return out;
}

std::vector<std::vector<int>> neighbor_lists(const Eigen::MatrixXd& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  std::vector<std::vector<int>> nbrs(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i && adjacency(i, j) > 0.0) nbrs[i].push_back(j);
    }
  }
  return nbrs;
}

std::vector<std::vector<int>> complete_graph(int n) {
  std::vector<std::vector<int>> nbrs(n);
  for (int i = 0; i < n; ++i) {
    nbrs[i].reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j != i) nbrs[i].push_back(j);
    }
  }
  return nbrs;
}

}  // namespace sweepnet
