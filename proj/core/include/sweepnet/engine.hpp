#pragma once

#include <memory>

#include "sweepnet/policy.hpp"

namespace sweepnet {

// One sub-step of a rollout trace.
struct StepRecord {
  int agent = 0;
  ScanAction action;
  double logp_area = 0.0, logp_corner = 0.0, logp_pattern = 0.0;
  double logp() const { return logp_area + logp_corner + logp_pattern; }
};

struct RolloutTrace {
  std::vector<StepRecord> steps;
  double total_cost = 0.0;
  DecodeMode mode = DecodeMode::Greedy;
  uint64_t instance_seed = 0;
  double total_logp() const {
    double s = 0.0;
    for (const auto& r : steps) s += r.logp();
    return s;
  }
};

// Forward intermediates of one batched pass, retained for the analytic
// backward. Instances in a batch share (n, m); batched node rows are
// (b*n + i) and agent rows (b*m + alpha).
struct BatchCaches {
  int batch = 0, n = 0, m = 0;
  EncoderCache nodes;
  std::vector<Neighbors> node_graphs;
  Neighbors agent_graph;
  std::vector<EncoderCache> agent_passes;  // one per agents-encoder pass
  std::vector<int> step_round;             // sub-step -> pass index feeding slot 5
  // Per-instance copies read by the decoder forward and backward.
  std::vector<RowMat> node_h;              // n x d
  std::vector<NodeProjections> proj;
  std::vector<Eigen::VectorXd> h_graph;
  std::vector<std::vector<RowMat>> agents_h;  // [pass][b] m x d
  std::vector<std::vector<StepCache>> steps;  // [b][t]
};

struct EngineOptions {
  BnMode bn = BnMode::Eval;
  bool update_running_stats = false;
  bool keep_caches = false;
  bool reencode_each_substep = false;
  int threads = 1;
};

struct EngineResult {
  std::vector<Solution> solutions;
  std::vector<RolloutTrace> traces;
  std::unique_ptr<BatchCaches> caches;
};

// Round-robin autoregressive assignment over a batch of same-sized instances.
// Nodes are encoded once; agents are encoded on start positions and
// re-encoded each assignment round (or each sub-step when configured so).
// `forced` replays fixed action sequences; otherwise `rngs[b]` drives
// sampling for instance b.
EngineResult run_batch(std::span<const Instance> instances, const PolicyParameters& params,
                       DecodeMode mode, std::span<Rng> rngs,
                       const std::vector<std::vector<ScanAction>>* forced,
                       const EngineOptions& opts);

// Accumulates d(sum_b weight[b] * logp_b)/d(params) into `grads` using the
// caches kept by run_batch.
void backward_batch(const PolicyParameters& params, const BatchCaches& caches,
                    std::span<const double> logp_weights, PolicyParameters& grads,
                    int threads = 1);

}  // namespace sweepnet
