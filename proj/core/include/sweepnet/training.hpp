#pragma once

#include <functional>
#include <memory>

#include "sweepnet/engine.hpp"

namespace sweepnet {

enum class Algorithm { Reinforce, Ppo };
enum class BaselineKind { Ema, GreedyRollout };
enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  Algorithm algorithm = Algorithm::Reinforce;
  int batch_size = 128;
  int instances_per_epoch = 10000;
  int epochs = 10;
  double learning_rate = 1e-4;
  int n_min = 35, n_max = 100;  // areas; restricted to multiples of m
  int m_min = 5, m_max = 10;    // agents
  BaselineKind baseline = BaselineKind::Ema;
  double ema_beta = 0.8;
  double ppo_epsilon = 0.2;
  int ppo_inner_epochs = 3;
  uint64_t seed = 0;
  bool varying_start_locations = true;  // false: one start set shared per batch
  ModelConfig model;
  double grad_clip = 1.0;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  int threads = 1;
  bool reencode_each_substep = false;

  std::string metrics_path;     // CSV output; empty keeps metrics in memory only
  std::string checkpoint_path;  // final checkpoint; empty skips writing
  int checkpoint_every = 0;     // additionally write <path>.epochK every K epochs
  std::function<void(int, const PolicyParameters&)> epoch_callback;
};

void validate_config(const TrainConfig& cfg);

struct BaselineState {
  BaselineKind kind = BaselineKind::Ema;
  double ema_beta = 0.8;
  bool initialized = false;
  double value = 0.0;
  std::shared_ptr<const PolicyParameters> frozen;  // greedy-rollout baseline policy
};

// EMA: b <- beta*b + (1-beta)*mean(costs); the first batch initializes b to
// the batch mean. Greedy-rollout baselines are computed per instance instead
// (see train()), so this is a no-op for that kind.
void update_baseline(BaselineState& state, std::span<const double> batch_costs);

// One sampled batch with retained forward caches.
struct SampledBatch {
  std::vector<Instance> instances;
  EngineResult result;
  std::vector<double> costs;
};

// REINFORCE surrogate mean_b (L_b - b_b) * logp_b; accumulates its gradient
// (advantages treated as constants). Throws TrainingError on greedy traces.
double reinforce_loss(const PolicyParameters& params, const SampledBatch& batch,
                      std::span<const double> baseline_values, PolicyParameters& grads,
                      int threads = 1);

// Clipped-surrogate objective mean_b min(r*A, clip(r,1-eps,1+eps)*A), with
// r = exp(logp - old_logp) per trajectory and A = b(s) - L(pi) (positive when
// the sample beat the baseline). The objective is maximized; the accumulated
// gradient is the ascent direction. Throws TrainingError on non-finite ratios.
double ppo_objective(const PolicyParameters& params, const SampledBatch& replayed,
                     std::span<const double> old_logps, std::span<const double> advantages,
                     double epsilon, PolicyParameters& grads, int threads = 1);

struct EpochMetrics {
  int epoch = 0;
  double mean_cost = 0.0;
  double baseline = 0.0;
  double grad_norm = 0.0;
  double wallclock_s = 0.0;
};

struct TrainResult {
  PolicyParameters params;
  std::vector<EpochMetrics> metrics;
};

TrainResult train(const TrainConfig& config);

void write_metrics_csv(const std::filesystem::path& path, std::span<const EpochMetrics> rows);

// Instance sizes and content for one training batch, derived from the run
// seed; exposed for tests and the evaluation harness.
std::vector<Instance> generate_training_batch(const TrainConfig& cfg, int epoch, int batch_index,
                                              int count, int* n_out = nullptr,
                                              int* m_out = nullptr);

}  // namespace sweepnet
