#include "sweepnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sweepnet {

namespace {

struct DfsState {
  const Instance* inst;
  const CostConfig* cfg;
  int n, m;
  std::vector<char> used;
  std::vector<ScanAction> seq;          // actions in sub-step order
  std::vector<Point2> pos;              // per agent
  double cost = 0.0;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<ScanAction> best_seq;
};

// Depth-first over sub-steps in lexicographic (area, corner, pattern) order;
// the first minimum found is the lexicographically smallest optimum.
void dfs(DfsState& st, int t) {
  if (t == st.n) {
    if (st.cost < st.best_cost) {
      st.best_cost = st.cost;
      st.best_seq = st.seq;
    }
    return;
  }
  const int agent = t % st.m;
  const Point2 saved_pos = st.pos[agent];
  for (int j = 0; j < st.n; ++j) {
    if (st.used[j]) continue;
    st.used[j] = 1;
    const AreaSquare& area = st.inst->areas[j];
    for (int k = 0; k < 4; ++k) {
      const double travel = distance(saved_pos, area.corner(k));
      for (int z = 0; z < st.cfg->pattern_count; ++z) {
        const ScanPath path = scan_path(area, k, z, *st.cfg);
        const double step = travel + path.length;
        st.seq.push_back({j, k, z});
        st.cost += step;
        st.pos[agent] = path.end;
        dfs(st, t + 1);
        st.pos[agent] = saved_pos;
        st.cost -= step;
        st.seq.pop_back();
      }
    }
    st.used[j] = 0;
  }
}

Solution sequence_to_solution(const Instance& inst, const CostConfig& cfg,
                              std::span<const ScanAction> seq, int m) {
  Solution sol;
  sol.tours.resize(inst.num_agents());
  for (size_t t = 0; t < seq.size(); ++t) sol.tours[t % m].push_back(seq[t]);
  sol.total_cost = cost_of_solution(inst, sol, cfg);
  return sol;
}

double leaf_estimate(int n, int p) {
  double est = 1.0;
  for (int i = 2; i <= n; ++i) est *= i;
  est *= std::pow(4.0, n) * std::pow(static_cast<double>(p), n);
  return est;
}

// Best single-agent tour over the given area subset, starting at `start`.
struct SubsetBest {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<ScanAction> seq;
};

void subset_dfs(const Instance& inst, const CostConfig& cfg, const std::vector<int>& areas,
                std::vector<char>& used, std::vector<ScanAction>& seq, Point2 pos, double cost,
                SubsetBest& best) {
  if (seq.size() == areas.size()) {
    if (cost < best.cost) {
      best.cost = cost;
      best.seq = seq;
    }
    return;
  }
  for (size_t i = 0; i < areas.size(); ++i) {
    if (used[i]) continue;
    used[i] = 1;
    const int j = areas[i];
    const AreaSquare& area = inst.areas[j];
    for (int k = 0; k < 4; ++k) {
      const double travel = distance(pos, area.corner(k));
      for (int z = 0; z < cfg.pattern_count; ++z) {
        const ScanPath path = scan_path(area, k, z, cfg);
        seq.push_back({j, k, z});
        subset_dfs(inst, cfg, areas, used, seq, path.end, cost + travel + path.length, best);
        seq.pop_back();
      }
    }
    used[i] = 0;
  }
}

SubsetBest best_subset_tour(const Instance& inst, const CostConfig& cfg,
                            const std::vector<int>& areas, Point2 start) {
  SubsetBest best;
  if (areas.empty()) {
    best.cost = 0.0;
    return best;
  }
  std::vector<char> used(areas.size(), 0);
  std::vector<ScanAction> seq;
  subset_dfs(inst, cfg, areas, used, seq, start, 0.0, best);
  return best;
}

Solution unconstrained_two_agent(const Instance& inst, const CostConfig& cfg,
                                 const BruteForceOptions& opts) {
  const int n = inst.num_areas();
  const double est = std::pow(2.0, n) * leaf_estimate(n, cfg.pattern_count);
  if (est > opts.max_leaves)
    throw Error("brute_force_solve: estimated " + format_double(est) +
                " leaves exceeds the cap of " + format_double(opts.max_leaves));
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<ScanAction> best0, best1;
  for (uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> set0, set1;
    for (int j = 0; j < n; ++j) ((mask >> j) & 1u ? set0 : set1).push_back(j);
    const SubsetBest b0 = best_subset_tour(inst, cfg, set0, inst.agents[0]);
    const SubsetBest b1 = best_subset_tour(inst, cfg, set1, inst.agents[1]);
    if (b0.cost + b1.cost < best_cost) {
      best_cost = b0.cost + b1.cost;
      best0 = b0.seq;
      best1 = b1.seq;
    }
  }
  Solution sol;
  sol.tours.resize(inst.num_agents());
  sol.tours[0] = best0;
  sol.tours[1] = best1;
  sol.total_cost = cost_of_solution(inst, sol, cfg);
  return sol;
}

}  // namespace

Solution brute_force_solve(const Instance& inst, const CostConfig& cfg,
                           const BruteForceOptions& opts) {
  const int n = inst.num_areas();
  const int m = inst.num_agents();
  if (opts.unconstrained_partition) {
    if (m != 2)
      throw ValidationError("brute_force_solve: unconstrained partitions support m == 2 only");
    return unconstrained_two_agent(inst, cfg, opts);
  }
  const double est = leaf_estimate(n, cfg.pattern_count);
  if (est > opts.max_leaves)
    throw Error("brute_force_solve: estimated " + format_double(est) +
                " leaves exceeds the cap of " + format_double(opts.max_leaves));

  DfsState st;
  st.inst = &inst;
  st.cfg = &cfg;
  st.n = n;
  st.m = m;
  st.used.assign(n, 0);
  st.pos = inst.agents;
  st.seq.reserve(n);
  dfs(st, 0);
  return sequence_to_solution(inst, cfg, st.best_seq, m);
}

Solution nearest_neighbor_solve(const Instance& inst, const CostConfig& cfg) {
  const int n = inst.num_areas();
  const int m = inst.num_agents();
  std::vector<char> used(n, 0);
  std::vector<Point2> pos = inst.agents;
  Solution sol;
  sol.tours.resize(m);
  for (int t = 0; t < n; ++t) {
    const int agent = t % m;
    int best_area = -1, best_corner = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (used[j]) continue;
      for (int k = 0; k < 4; ++k) {
        const double d = distance(pos[agent], inst.areas[j].corner(k));
        if (d < best_dist) {
          best_dist = d;
          best_area = j;
          best_corner = k;
        }
      }
    }
    int best_pattern = 0;
    double best_len = scan_path(inst.areas[best_area], best_corner, 0, cfg).length;
    for (int z = 1; z < cfg.pattern_count; ++z) {
      const double len = scan_path(inst.areas[best_area], best_corner, z, cfg).length;
      if (len < best_len) {
        best_len = len;
        best_pattern = z;
      }
    }
    const ScanAction act{best_area, best_corner, best_pattern};
    sol.tours[agent].push_back(act);
    used[best_area] = 1;
    pos[agent] = scan_path(inst.areas[best_area], best_corner, best_pattern, cfg).end;
  }
  sol.total_cost = cost_of_solution(inst, sol, cfg);
  return sol;
}

Solution random_solve(const Instance& inst, Rng& rng, const CostConfig& cfg) {
  const int n = inst.num_areas();
  const int m = inst.num_agents();
  std::vector<int> remaining(n);
  for (int j = 0; j < n; ++j) remaining[j] = j;
  Solution sol;
  sol.tours.resize(m);
  std::vector<Point2> pos = inst.agents;
  for (int t = 0; t < n; ++t) {
    const int agent = t % m;
    const int pick = rng.uniform_int(static_cast<int>(remaining.size()));
    const int area = remaining[pick];
    remaining.erase(remaining.begin() + pick);
    const int corner = rng.uniform_int(4);
    const int pattern = rng.uniform_int(cfg.pattern_count);
    sol.tours[agent].push_back({area, corner, pattern});
    pos[agent] = scan_path(inst.areas[area], corner, pattern, cfg).end;
  }
  sol.total_cost = cost_of_solution(inst, sol, cfg);
  return sol;
}

}  // namespace sweepnet
