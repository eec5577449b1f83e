#include "sweepnet/engine.hpp"

#include <cmath>

namespace sweepnet {

namespace {

// Feature builders over a whole batch.
RowMat batch_area_features(std::span<const Instance> instances, int n) {
  const int batch = static_cast<int>(instances.size());
  RowMat f(batch * n, 8);
  for (int b = 0; b < batch; ++b) f.middleRows(b * n, n) = area_features(instances[b]);
  return f;
}

RowMat batch_area_edge_features(std::span<const Instance> instances, int n) {
  const int batch = static_cast<int>(instances.size());
  RowMat f(batch * n * n, 1);
  for (int b = 0; b < batch; ++b)
    f.middleRows(b * n * n, n * n) = area_edge_features(instances[b]);
  return f;
}

RowMat batch_agent_features(const std::vector<std::vector<Point2>>& positions, int m) {
  const int batch = static_cast<int>(positions.size());
  RowMat f(batch * m, 2);
  for (int b = 0; b < batch; ++b) f.middleRows(b * m, m) = agent_features(positions[b]);
  return f;
}

RowMat batch_agent_edge_features(const std::vector<std::vector<Point2>>& positions, int m) {
  const int batch = static_cast<int>(positions.size());
  RowMat f(batch * m * m, 1);
  for (int b = 0; b < batch; ++b)
    f.middleRows(b * m * m, m * m) = agent_edge_features(positions[b]);
  return f;
}

}  // namespace

EngineResult run_batch(std::span<const Instance> instances, const PolicyParameters& params,
                       DecodeMode mode, std::span<Rng> rngs,
                       const std::vector<std::vector<ScanAction>>* forced,
                       const EngineOptions& opts) {
  const int batch = static_cast<int>(instances.size());
  if (batch == 0) throw ValidationError("run_batch: empty batch");
  const int n = instances[0].num_areas();
  const int m = instances[0].num_agents();
  for (const auto& inst : instances) {
    if (inst.num_areas() != n || inst.num_agents() != m)
      throw ValidationError("run_batch: instances in a batch must share (n, m)");
  }
  if (mode == DecodeMode::Sample && !forced &&
      rngs.size() != static_cast<size_t>(batch))
    throw ValidationError("run_batch: sampling needs one RNG per instance");

  const ModelConfig& cfg = params.config;
  const CostConfig& cost = cfg.cost;
  auto caches = std::make_unique<BatchCaches>();
  BatchCaches& C = *caches;
  C.batch = batch;
  C.n = n;
  C.m = m;

  // Nodes: one batched pass.
  C.node_graphs.reserve(batch);
  std::vector<const Neighbors*> graph_ptrs(batch);
  for (int b = 0; b < batch; ++b) C.node_graphs.push_back(neighbor_lists(instances[b].adjacency));
  for (int b = 0; b < batch; ++b) graph_ptrs[b] = &C.node_graphs[b];

  RowMat h_all, e_all;
  encode_graph_batch(params.nodes, batch_area_features(instances, n),
                     batch_area_edge_features(instances, n), graph_ptrs, batch, n, opts.bn,
                     opts.update_running_stats, h_all, e_all,
                     opts.keep_caches ? &C.nodes : nullptr);

  // Batch-level projections, then per-instance copies.
  RowMat key_all = h_all * params.decoder.node_key.transpose();
  RowMat value_all = h_all * params.decoder.node_value.transpose();
  RowMat ptr_all = h_all * params.decoder.area_key.transpose();
  C.node_h.resize(batch);
  C.proj.resize(batch);
  C.h_graph.resize(batch);
  for (int b = 0; b < batch; ++b) {
    C.node_h[b] = h_all.middleRows(b * n, n);
    C.proj[b].key = key_all.middleRows(b * n, n);
    C.proj[b].value = value_all.middleRows(b * n, n);
    C.proj[b].ptr = ptr_all.middleRows(b * n, n);
    C.h_graph[b] = C.node_h[b].colwise().mean().transpose();
  }

  // Agents pass on start positions.
  C.agent_graph = complete_graph(m);
  std::vector<const Neighbors*> agent_graph_ptrs(batch, &C.agent_graph);
  std::vector<std::vector<Point2>> positions(batch);
  for (int b = 0; b < batch; ++b) positions[b] = instances[b].agents;

  auto run_agents_pass = [&](const std::vector<std::vector<Point2>>& pos) {
    RowMat h, e;
    EncoderCache* pass_cache = nullptr;
    if (opts.keep_caches) {
      C.agent_passes.emplace_back();
      pass_cache = &C.agent_passes.back();
    }
    encode_graph_batch(params.agents, batch_agent_features(pos, m),
                       batch_agent_edge_features(pos, m), agent_graph_ptrs, batch, m, opts.bn,
                       opts.update_running_stats, h, e, pass_cache);
    std::vector<RowMat> per_inst(batch);
    for (int b = 0; b < batch; ++b) per_inst[b] = h.middleRows(b * m, m);
    C.agents_h.push_back(std::move(per_inst));
  };
  if (cfg.agents_encoder) run_agents_pass(positions);

  // Decode, round-robin over agents.
  std::vector<DecodingState> states;
  states.reserve(batch);
  for (int b = 0; b < batch; ++b) states.push_back(DecodingState::init(instances[b]));

  EngineResult result;
  result.traces.resize(batch);
  for (int b = 0; b < batch; ++b) {
    result.traces[b].mode = mode;
    result.traces[b].instance_seed = instances[b].seed;
    result.traces[b].steps.reserve(n);
  }
  if (opts.keep_caches) {
    C.steps.resize(batch);
    for (int b = 0; b < batch; ++b) C.steps[b].resize(n);
  }
  C.step_round.resize(n);

  int current_pass = 0;
  for (int t = 0; t < n; ++t) {
    const int agent = t % m;
    if (t > 0 && cfg.agents_encoder && (opts.reencode_each_substep || t % m == 0)) {
      for (int b = 0; b < batch; ++b) positions[b] = states[b].positions;
      run_agents_pass(positions);
      current_pass = static_cast<int>(C.agents_h.size()) - 1;
    }
    C.step_round[t] = current_pass;

    const int chunk_size = 16;
    const int num_chunks = (batch + chunk_size - 1) / chunk_size;
    parallel_chunks(num_chunks, opts.threads, [&](int chunk) {
      const int lo = chunk * chunk_size;
      const int hi = std::min(batch, lo + chunk_size);
      for (int b = lo; b < hi; ++b) {
        StepEmbeddings emb;
        emb.node_h = &C.node_h[b];
        emb.agents_encoder = cfg.agents_encoder;
        if (cfg.agents_encoder) {
          emb.agents_start = &C.agents_h[0][b];
          emb.agents_current = &C.agents_h[current_pass][b];
        }
        const ScanAction* forced_action =
            forced ? &(*forced)[b][static_cast<size_t>(t)] : nullptr;
        StepCache* sc = opts.keep_caches ? &C.steps[b][t] : nullptr;
        if (sc) sc->round = current_pass;
        SelectedAction sel = select_action(
            params.decoder, instances[b], cost, states[b], emb, C.proj[b], C.h_graph[b], agent,
            mode, rngs.empty() ? nullptr : &rngs[b], sc, forced_action);
        apply_action(states[b], instances[b], cost, agent, sel.action);
        result.traces[b].steps.push_back(
            {agent, sel.action, sel.logp_area, sel.logp_corner, sel.logp_pattern});
      }
    });
  }

  // Solutions with independently recomputed costs.
  result.solutions.resize(batch);
  for (int b = 0; b < batch; ++b) {
    Solution& sol = result.solutions[b];
    sol.tours = states[b].tours;
    const double recomputed = cost_of_solution(instances[b], sol, cost);
    if (std::abs(recomputed - states[b].inc_cost) > 1e-9)
      throw Error("run_batch: incremental cost diverged from recomputation");
    sol.total_cost = recomputed;
    result.traces[b].total_cost = recomputed;
  }
  if (opts.keep_caches) result.caches = std::move(caches);
  return result;
}

void backward_batch(const PolicyParameters& params, const BatchCaches& C,
                    std::span<const double> logp_weights, PolicyParameters& grads,
                    int threads) {
  const int batch = C.batch;
  const int n = C.n;
  const int m = C.m;
  const int d = params.config.d;
  const bool agents_enc = params.config.agents_encoder;
  if (static_cast<int>(logp_weights.size()) != batch)
    throw ValidationError("backward_batch: weight count must match batch size");

  RowMat d_node_h = RowMat::Zero(batch * n, d);
  RowMat d_key = RowMat::Zero(batch * n, d);
  RowMat d_value = RowMat::Zero(batch * n, d);
  RowMat d_ptr = RowMat::Zero(batch * n, d);
  const int num_passes = static_cast<int>(C.agents_h.size());
  std::vector<RowMat> d_agents(num_passes);
  for (auto& g : d_agents) g = RowMat::Zero(batch * m, d);

  // Per-instance decoder backward; disjoint rows, chunk-local decoder grads.
  const int chunk_size = 16;
  const int num_chunks = (batch + chunk_size - 1) / chunk_size;
  std::vector<DecoderParams> chunk_grads(num_chunks);
  parallel_chunks(num_chunks, threads, [&](int chunk) {
    chunk_grads[chunk] = zeros_like(params.decoder);
    const int lo = chunk * chunk_size;
    const int hi = std::min(batch, lo + chunk_size);
    for (int b = lo; b < hi; ++b) {
      const double w = logp_weights[b];
      if (w == 0.0) continue;
      for (int t = 0; t < n; ++t) {
        const StepCache& sc = C.steps[b][t];
        RowMat* das = agents_enc ? &d_agents[0] : nullptr;
        RowMat* dac = agents_enc ? &d_agents[sc.round] : nullptr;
        decode_substep_backward(params.decoder, sc, w, C.proj[b], n, chunk_grads[chunk],
                                d_node_h, b * n, d_key, d_value, d_ptr, das, b * m, dac, b * m);
      }
    }
  });
  // Reduce chunk decoder gradients in chunk order.
  for (const auto& cg : chunk_grads) {
    grads.decoder.context_fuse += cg.context_fuse;
    grads.decoder.ctx_query += cg.ctx_query;
    grads.decoder.node_key += cg.node_key;
    grads.decoder.node_value += cg.node_value;
    grads.decoder.area_query += cg.area_query;
    grads.decoder.area_key += cg.area_key;
    grads.decoder.ph_first += cg.ph_first;
    grads.decoder.ph_last += cg.ph_last;
    grads.decoder.ph_current += cg.ph_current;
    grads.decoder.pos_embed += cg.pos_embed;
    grads.decoder.corner_embed += cg.corner_embed;
    grads.decoder.corner_key += cg.corner_key;
    grads.decoder.corner_value += cg.corner_value;
    grads.decoder.corner_query += cg.corner_query;
    grads.decoder.corner_ptr_key += cg.corner_ptr_key;
    grads.decoder.pattern_query_embed += cg.pattern_query_embed;
    grads.decoder.pattern_key_embed += cg.pattern_key_embed;
    grads.decoder.pattern_value_embed += cg.pattern_value_embed;
    grads.decoder.pattern_query += cg.pattern_query;
    grads.decoder.pattern_ptr_key += cg.pattern_ptr_key;
  }

  // Projection backward: key/value/ptr were h W^T at batch level.
  const RowMat& h_all = C.nodes.h_out;
  grads.decoder.node_key.noalias() += d_key.transpose() * h_all;
  grads.decoder.node_value.noalias() += d_value.transpose() * h_all;
  grads.decoder.area_key.noalias() += d_ptr.transpose() * h_all;
  d_node_h.noalias() += d_key * params.decoder.node_key;
  d_node_h.noalias() += d_value * params.decoder.node_value;
  d_node_h.noalias() += d_ptr * params.decoder.area_key;

  // Agents encoder backward per pass.
  if (agents_enc) {
    std::vector<const Neighbors*> agent_graph_ptrs(batch, &C.agent_graph);
    for (int p = num_passes - 1; p >= 0; --p) {
      encoder_backward(params.agents, C.agent_passes[p], agent_graph_ptrs, batch, m,
                       d_agents[p], RowMat(), grads.agents);
    }
  }

  // Nodes encoder backward.
  std::vector<const Neighbors*> graph_ptrs(batch);
  for (int b = 0; b < batch; ++b) graph_ptrs[b] = &C.node_graphs[b];
  encoder_backward(params.nodes, C.nodes, graph_ptrs, batch, n, d_node_h, RowMat(),
                   grads.nodes);
}

}  // namespace sweepnet
