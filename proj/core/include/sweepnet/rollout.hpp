#pragma once

#include "sweepnet/engine.hpp"

namespace sweepnet {

struct RolloutOptions {
  bool reencode_each_substep = false;  // ablation: refresh agent embeddings every sub-step
};

// One autoregressive rollout in eval mode (running BN statistics). The
// solution cost is recomputed independently and must match the incrementally
// tracked cost within 1e-9.
std::pair<Solution, RolloutTrace> rollout(const Instance& inst, const PolicyParameters& params,
                                          DecodeMode mode, Rng& rng,
                                          const RolloutOptions& opts = {});

// Rollouts over a batch. Training mode requires all instances to share
// (n, m) since batch normalization couples them; eval mode processes
// instances independently (results do not depend on the batch partition).
// Per-instance RNG streams are derived as hash(seed, instance index).
std::vector<std::pair<Solution, RolloutTrace>> batch_rollout(
    std::span<const Instance> instances, const PolicyParameters& params, DecodeMode mode,
    uint64_t seed, BnMode bn = BnMode::Eval, const RolloutOptions& opts = {}, int threads = 1);

}  // namespace sweepnet
