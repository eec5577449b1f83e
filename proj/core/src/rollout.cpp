#include "sweepnet/rollout.hpp"

namespace sweepnet {

std::pair<Solution, RolloutTrace> rollout(const Instance& inst, const PolicyParameters& params,
                                          DecodeMode mode, Rng& rng,
                                          const RolloutOptions& opts) {
  EngineOptions eopts;
  eopts.bn = BnMode::Eval;
  eopts.reencode_each_substep = opts.reencode_each_substep;
  EngineResult res = run_batch({&inst, 1}, params, mode, {&rng, 1}, nullptr, eopts);
  return {std::move(res.solutions[0]), std::move(res.traces[0])};
}

std::vector<std::pair<Solution, RolloutTrace>> batch_rollout(
    std::span<const Instance> instances, const PolicyParameters& params, DecodeMode mode,
    uint64_t seed, BnMode bn, const RolloutOptions& opts, int threads) {
  const int batch = static_cast<int>(instances.size());
  if (batch == 0) throw ValidationError("batch_rollout: empty batch");
  std::vector<std::pair<Solution, RolloutTrace>> out(batch);

  if (bn == BnMode::Train) {
    const int n = instances[0].num_areas();
    const int m = instances[0].num_agents();
    for (const auto& inst : instances) {
      if (inst.num_areas() != n || inst.num_agents() != m)
        throw ValidationError("batch_rollout: training mode requires uniform (n, m)");
    }
    std::vector<Rng> rngs;
    rngs.reserve(batch);
    for (int b = 0; b < batch; ++b) rngs.emplace_back(derive_seed(seed, b));
    EngineOptions eopts;
    eopts.bn = BnMode::Train;
    eopts.reencode_each_substep = opts.reencode_each_substep;
    eopts.threads = threads;
    EngineResult res = run_batch(instances, params, mode, rngs, nullptr, eopts);
    for (int b = 0; b < batch; ++b)
      out[b] = {std::move(res.solutions[b]), std::move(res.traces[b])};
    return out;
  }

  // Eval mode: instances are independent.
  parallel_chunks(batch, threads, [&](int b) {
    Rng rng(derive_seed(seed, b));
    out[b] = rollout(instances[b], params, mode, rng, opts);
  });
  return out;
}

}  // namespace sweepnet
