#include "sweepnet/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sweepnet/rollout.hpp"

namespace sweepnet {

void validate_config(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
  if (cfg.instances_per_epoch < 1)
    throw ValidationError("train config: instances_per_epoch must be >= 1");
  if (cfg.epochs < 0) throw ValidationError("train config: epochs must be >= 0");
  if (cfg.learning_rate <= 0.0) throw ValidationError("train config: learning_rate must be > 0");
  if (cfg.m_min < 1 || cfg.m_max < cfg.m_min)
    throw ValidationError("train config: bad agent range");
  if (cfg.n_min < 1 || cfg.n_max < cfg.n_min)
    throw ValidationError("train config: bad area range");
  if (cfg.ema_beta <= 0.0 || cfg.ema_beta >= 1.0)
    throw ValidationError("train config: ema_beta must lie in (0, 1)");
  if (cfg.algorithm == Algorithm::Ppo) {
    if (cfg.ppo_epsilon <= 0.0) throw ValidationError("train config: ppo_epsilon must be > 0");
    if (cfg.ppo_inner_epochs < 1)
      throw ValidationError("train config: ppo_inner_epochs must be >= 1");
  }
  if (cfg.grad_clip <= 0.0) throw ValidationError("train config: grad_clip must be > 0");
  // There must be at least one feasible (n, m) pair.
  bool any = false;
  for (int m = cfg.m_min; m <= cfg.m_max && !any; ++m)
    for (int n = cfg.n_min; n <= cfg.n_max; n += 1)
      if (n % m == 0) {
        any = true;
        break;
      }
  if (!any)
    throw ValidationError("train config: no multiple of any m in [m_min, m_max] lies in "
                          "[n_min, n_max]");
}

void update_baseline(BaselineState& state, std::span<const double> batch_costs) {
  if (batch_costs.empty()) throw ValidationError("update_baseline: empty batch");
  if (state.kind != BaselineKind::Ema) return;
  double mean = 0.0;
  for (double c : batch_costs) mean += c;
  mean /= static_cast<double>(batch_costs.size());
  if (!state.initialized) {
    state.value = mean;
    state.initialized = true;
  } else {
    state.value = state.ema_beta * state.value + (1.0 - state.ema_beta) * mean;
  }
}

double reinforce_loss(const PolicyParameters& params, const SampledBatch& batch,
                      std::span<const double> baseline_values, PolicyParameters& grads,
                      int threads) {
  const int B = static_cast<int>(batch.costs.size());
  if (B == 0) throw ValidationError("reinforce_loss: empty batch");
  if (static_cast<int>(baseline_values.size()) != B)
    throw ValidationError("reinforce_loss: baseline count must match batch");
  for (const auto& trace : batch.result.traces) {
    if (trace.mode != DecodeMode::Sample)
      throw TrainingError("reinforce_loss: traces must come from sampling mode "
                          "(greedy traces give a zero-gradient estimator)");
  }
  if (!batch.result.caches) throw TrainingError("reinforce_loss: batch has no forward caches");

  std::vector<double> weights(B);
  double loss = 0.0;
  for (int b = 0; b < B; ++b) {
    const double adv = batch.costs[b] - baseline_values[b];
    weights[b] = adv / static_cast<double>(B);
    loss += weights[b] * batch.result.traces[b].total_logp();
  }
  backward_batch(params, *batch.result.caches, weights, grads, threads);
  return loss;
}

double ppo_objective(const PolicyParameters& params, const SampledBatch& replayed,
                     std::span<const double> old_logps, std::span<const double> advantages,
                     double epsilon, PolicyParameters& grads, int threads) {
  const int B = static_cast<int>(replayed.costs.size());
  if (B == 0) throw ValidationError("ppo_objective: empty batch");
  if (static_cast<int>(old_logps.size()) != B ||
      static_cast<int>(advantages.size()) != B)
    throw ValidationError("ppo_objective: old_logps/advantages must match batch size");
  if (!replayed.result.caches) throw TrainingError("ppo_objective: batch has no forward caches");

  std::vector<double> weights(B, 0.0);
  double objective = 0.0;
  for (int b = 0; b < B; ++b) {
    const double ratio = std::exp(replayed.result.traces[b].total_logp() - old_logps[b]);
    if (!std::isfinite(ratio))
      throw TrainingError("ppo_objective: non-finite probability ratio at sample " +
                          std::to_string(b));
    const double a = advantages[b];
    const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    const double unclipped_term = ratio * a;
    const double clipped_term = clipped * a;
    objective += std::min(unclipped_term, clipped_term) / static_cast<double>(B);
    // Gradient flows through the ratio only when the unclipped term is active.
    if (unclipped_term <= clipped_term) weights[b] = ratio * a / static_cast<double>(B);
  }
  backward_batch(params, *replayed.result.caches, weights, grads, threads);
  return objective;
}

namespace {

// Distinct uniform points for a shared start-location set.
std::vector<Point2> sample_agent_positions(Rng& rng, int m) {
  std::vector<Point2> pts;
  pts.reserve(m);
  while (static_cast<int>(pts.size()) < m) {
    Point2 p{rng.uniform01(), rng.uniform01()};
    if (std::find(pts.begin(), pts.end(), p) == pts.end()) pts.push_back(p);
  }
  return pts;
}

struct AdamState {
  PolicyParameters m, v;
  int64_t step = 0;
};

void apply_update(PolicyParameters& params, PolicyParameters& grads, OptimizerKind opt,
                  double lr, AdamState* adam) {
  auto pb = trainable_blocks(params);
  auto gb = trainable_blocks(grads);
  if (opt == OptimizerKind::Sgd) {
    for (size_t i = 0; i < pb.size(); ++i) {
      for (Eigen::Index j = 0; j < pb[i].size(); ++j) pb[i].data[j] -= lr * gb[i].data[j];
    }
    return;
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  adam->step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam->step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam->step));
  auto mb = trainable_blocks(adam->m);
  auto vb = trainable_blocks(adam->v);
  for (size_t i = 0; i < pb.size(); ++i) {
    for (Eigen::Index j = 0; j < pb[i].size(); ++j) {
      const double g = gb[i].data[j];
      double& mm = mb[i].data[j];
      double& vv = vb[i].data[j];
      mm = beta1 * mm + (1.0 - beta1) * g;
      vv = beta2 * vv + (1.0 - beta2) * g * g;
      pb[i].data[j] -= lr * (mm / bc1) / (std::sqrt(vv / bc2) + eps);
    }
  }
}

}  // namespace

std::vector<Instance> generate_training_batch(const TrainConfig& cfg, int epoch, int batch_index,
                                              int count, int* n_out, int* m_out) {
  const uint64_t batch_seed = derive_seed(cfg.seed, static_cast<uint64_t>(epoch),
                                          static_cast<uint64_t>(batch_index));
  Rng rng(batch_seed);
  const int m = cfg.m_min + rng.uniform_int(cfg.m_max - cfg.m_min + 1);
  std::vector<int> candidates;
  for (int n = cfg.n_min; n <= cfg.n_max; ++n)
    if (n % m == 0) candidates.push_back(n);
  if (candidates.empty())
    throw TrainingError("generate_training_batch: no multiple of m=" + std::to_string(m) +
                        " in the area range");
  const int n = candidates[rng.uniform_int(static_cast<int>(candidates.size()))];
  if (n_out) *n_out = n;
  if (m_out) *m_out = m;

  GenerateOptions gen;
  if (!cfg.varying_start_locations) gen.fixed_agents = sample_agent_positions(rng, m);
  std::vector<Instance> out;
  out.reserve(count);
  for (int b = 0; b < count; ++b)
    out.push_back(generate_instance(derive_seed(batch_seed, 0x9e11, b), n, m, gen));
  return out;
}

TrainResult train(const TrainConfig& cfg) {
  validate_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  TrainResult result;
  result.params = init_parameters(cfg.model, derive_seed(cfg.seed, 0x1217));
  PolicyParameters& params = result.params;

  AdamState adam;
  if (cfg.optimizer == OptimizerKind::Adam) {
    adam.m = zeros_like(params);
    adam.v = zeros_like(params);
  }
  BaselineState baseline;
  baseline.kind = cfg.baseline;
  baseline.ema_beta = cfg.ema_beta;

  const int batches_per_epoch =
      (cfg.instances_per_epoch + cfg.batch_size - 1) / cfg.batch_size;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.baseline == BaselineKind::GreedyRollout)
      baseline.frozen = std::make_shared<PolicyParameters>(params);

    double epoch_cost_sum = 0.0;
    int epoch_cost_count = 0;
    double grad_norm_sum = 0.0;
    int grad_norm_count = 0;
    double baseline_report = 0.0;

    for (int bi = 0; bi < batches_per_epoch; ++bi) {
      const int remaining = cfg.instances_per_epoch - bi * cfg.batch_size;
      const int B = std::min(cfg.batch_size, remaining);

      const uint64_t batch_seed =
          derive_seed(cfg.seed, static_cast<uint64_t>(epoch), static_cast<uint64_t>(bi));
      try {
      SampledBatch batch;
      batch.instances = generate_training_batch(cfg, epoch, bi, B);

      std::vector<Rng> rngs;
      rngs.reserve(B);
      for (int b = 0; b < B; ++b) rngs.emplace_back(derive_seed(batch_seed, 0x5a3d, b));

      EngineOptions eopts;
      eopts.bn = BnMode::Train;
      eopts.update_running_stats = true;
      eopts.keep_caches = true;
      eopts.reencode_each_substep = cfg.reencode_each_substep;
      eopts.threads = cfg.threads;
      batch.result = run_batch(batch.instances, params, DecodeMode::Sample, rngs, nullptr, eopts);
      batch.costs.resize(B);
      for (int b = 0; b < B; ++b) batch.costs[b] = batch.result.traces[b].total_cost;
      for (double c : batch.costs) {
        epoch_cost_sum += c;
        ++epoch_cost_count;
      }

      std::vector<double> baseline_values(B);
      if (cfg.baseline == BaselineKind::Ema) {
        update_baseline(baseline, batch.costs);
        std::fill(baseline_values.begin(), baseline_values.end(), baseline.value);
        baseline_report = baseline.value;
      } else {
        auto greedy = batch_rollout(batch.instances, *baseline.frozen, DecodeMode::Greedy,
                                    batch_seed, BnMode::Eval, {}, cfg.threads);
        double mean_b = 0.0;
        for (int b = 0; b < B; ++b) {
          baseline_values[b] = greedy[b].first.total_cost;
          mean_b += baseline_values[b];
        }
        baseline_report = mean_b / B;
      }

      if (cfg.algorithm == Algorithm::Reinforce) {
        PolicyParameters grads = zeros_like(params);
        const double loss = reinforce_loss(params, batch, baseline_values, grads, cfg.threads);
        if (!std::isfinite(loss))
          throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) +
                              " batch " + std::to_string(bi) + " (batch seed " +
                              std::to_string(batch_seed) + ")");
        grad_norm_sum += grad_global_norm(grads);
        ++grad_norm_count;
        clip_grad_norm(grads, cfg.grad_clip);
        apply_update(params, grads, cfg.optimizer, cfg.learning_rate, &adam);
      } else {
        std::vector<double> old_logps(B), advantages(B);
        std::vector<std::vector<ScanAction>> actions(B);
        for (int b = 0; b < B; ++b) {
          old_logps[b] = batch.result.traces[b].total_logp();
          advantages[b] = baseline_values[b] - batch.costs[b];
          actions[b].reserve(batch.result.traces[b].steps.size());
          for (const auto& s : batch.result.traces[b].steps) actions[b].push_back(s.action);
        }
        for (int inner = 0; inner < cfg.ppo_inner_epochs; ++inner) {
          SampledBatch replay;
          replay.instances = batch.instances;
          EngineOptions ropts = eopts;
          ropts.update_running_stats = false;
          replay.result =
              run_batch(replay.instances, params, DecodeMode::Sample, {}, &actions, ropts);
          replay.costs = batch.costs;
          PolicyParameters grads = zeros_like(params);
          const double obj = ppo_objective(params, replay, old_logps, advantages,
                                           cfg.ppo_epsilon, grads, cfg.threads);
          if (!std::isfinite(obj))
            throw TrainingError("train: non-finite objective at epoch " +
                                std::to_string(epoch) + " batch " + std::to_string(bi) +
                                " (batch seed " + std::to_string(batch_seed) + ")");
          // Ascent on the objective = descent on its negation.
          auto gb = trainable_blocks(grads);
          for (auto& blk : gb)
            for (Eigen::Index j = 0; j < blk.size(); ++j) blk.data[j] = -blk.data[j];
          if (inner == 0) {
            grad_norm_sum += grad_global_norm(grads);
            ++grad_norm_count;
          }
          clip_grad_norm(grads, cfg.grad_clip);
          apply_update(params, grads, cfg.optimizer, cfg.learning_rate, &adam);
        }
      }
      } catch (const ValidationError&) {
        throw;
      } catch (const Error& e) {
        throw TrainingError("train: batch failed at epoch " + std::to_string(epoch) +
                            " batch " + std::to_string(bi) + " (batch seed " +
                            std::to_string(batch_seed) + "): " + e.what());
      }
    }

    EpochMetrics row;
    row.epoch = epoch;
    row.mean_cost = epoch_cost_sum / std::max(1, epoch_cost_count);
    row.baseline = baseline_report;
    row.grad_norm = grad_norm_sum / std::max(1, grad_norm_count);
    row.wallclock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.metrics.push_back(row);

    if (cfg.epoch_callback) cfg.epoch_callback(epoch, params);
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_path.empty() &&
        epoch % cfg.checkpoint_every == 0)
      save_checkpoint(cfg.checkpoint_path + ".epoch" + std::to_string(epoch), params);
  }

  if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, params);
  if (!cfg.metrics_path.empty()) write_metrics_csv(cfg.metrics_path, result.metrics);
  return result;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const EpochMetrics> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_metrics_csv: cannot open " + path.string());
  out << "epoch,mean_cost,baseline,grad_norm,wallclock_s\n";
  char wall[32];
  for (const auto& r : rows) {
    std::snprintf(wall, sizeof(wall), "%.3f", r.wallclock_s);
    out << r.epoch << "," << format_double(r.mean_cost) << "," << format_double(r.baseline)
        << "," << format_double(r.grad_norm) << "," << wall << "\n";
  }
  if (!out) throw Error("write_metrics_csv: write failed for " + path.string());
}

}  // namespace sweepnet
