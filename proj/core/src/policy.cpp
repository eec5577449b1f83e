#include "sweepnet/policy.hpp"

#include <cmath>

namespace sweepnet {

PolicyParameters init_parameters(const ModelConfig& cfg, uint64_t seed) {
  if (cfg.d < 1 || cfg.layers < 0 || cfg.heads < 1 || cfg.d % cfg.heads != 0)
    throw ValidationError("model config: d must be positive and divisible by heads");
  if (cfg.cost.pattern_count < 1)
    throw ValidationError("model config: pattern_count must be >= 1");
  if (cfg.cost.sweep_width <= 0.0)
    throw ValidationError("model config: sweep_width must be positive");
  PolicyParameters p;
  p.config = cfg;
  Rng rng(derive_seed(seed, 0xe17c0de));
  p.nodes = make_encoder_params(cfg.d, cfg.layers, 8, rng);
  p.agents = make_encoder_params(cfg.d, cfg.layers, 2, rng);
  p.decoder =
      make_decoder_params(cfg.d, cfg.heads, cfg.d_corner, cfg.d_pattern, cfg.logit_clip, rng);
  return p;
}

PolicyParameters zeros_like(const PolicyParameters& p) {
  PolicyParameters z;
  z.config = p.config;
  z.nodes = zeros_like(p.nodes);
  z.agents = zeros_like(p.agents);
  z.decoder = zeros_like(p.decoder);
  return z;
}

namespace {

void encoder_blocks(const std::string& prefix, EncoderParams& e, std::vector<BlockRef>& out,
                    bool buffers) {
  auto add = [&](const std::string& name, Eigen::MatrixXd& m) {
    out.push_back({prefix + name, m.data(), m.rows(), m.cols()});
  };
  auto addv = [&](const std::string& name, Eigen::VectorXd& v) {
    out.push_back({prefix + name, v.data(), v.size(), 1});
  };
  if (!buffers) {
    add("node_proj.W", e.node_proj.W);
    addv("node_proj.b", e.node_proj.b);
    add("edge_proj.W", e.edge_proj.W);
    addv("edge_proj.b", e.edge_proj.b);
  }
  for (size_t l = 0; l < e.layers.size(); ++l) {
    const std::string lp = "layer" + std::to_string(l) + ".";
    auto& layer = e.layers[l];
    if (buffers) {
      addv(lp + "bn_h.running_mean", layer.bn_h.running_mean);
      addv(lp + "bn_h.running_var", layer.bn_h.running_var);
      addv(lp + "bn_e.running_mean", layer.bn_e.running_mean);
      addv(lp + "bn_e.running_var", layer.bn_e.running_var);
    } else {
      add(lp + "U", layer.U);
      add(lp + "V", layer.V);
      add(lp + "A", layer.A);
      add(lp + "B", layer.B);
      add(lp + "C", layer.C);
      addv(lp + "bn_h.gamma", layer.bn_h.gamma);
      addv(lp + "bn_h.beta", layer.bn_h.beta);
      addv(lp + "bn_e.gamma", layer.bn_e.gamma);
      addv(lp + "bn_e.beta", layer.bn_e.beta);
    }
  }
}

void decoder_blocks(DecoderParams& d, std::vector<BlockRef>& out) {
  auto add = [&](const std::string& name, Eigen::MatrixXd& m) {
    out.push_back({"decoder." + name, m.data(), m.rows(), m.cols()});
  };
  auto addv = [&](const std::string& name, Eigen::VectorXd& v) {
    out.push_back({"decoder." + name, v.data(), v.size(), 1});
  };
  add("context_fuse", d.context_fuse);
  add("ctx_query", d.ctx_query);
  add("node_key", d.node_key);
  add("node_value", d.node_value);
  add("area_query", d.area_query);
  add("area_key", d.area_key);
  addv("ph_first", d.ph_first);
  addv("ph_last", d.ph_last);
  addv("ph_current", d.ph_current);
  add("pos_embed", d.pos_embed);
  add("corner_embed", d.corner_embed);
  add("corner_key", d.corner_key);
  add("corner_value", d.corner_value);
  add("corner_query", d.corner_query);
  add("corner_ptr_key", d.corner_ptr_key);
  add("pattern_query_embed", d.pattern_query_embed);
  add("pattern_key_embed", d.pattern_key_embed);
  add("pattern_value_embed", d.pattern_value_embed);
  add("pattern_query", d.pattern_query);
  add("pattern_ptr_key", d.pattern_ptr_key);
}

}  // namespace

std::vector<BlockRef> trainable_blocks(PolicyParameters& p) {
  std::vector<BlockRef> out;
  encoder_blocks("nodes.", p.nodes, out, false);
  encoder_blocks("agents.", p.agents, out, false);
  decoder_blocks(p.decoder, out);
  return out;
}

std::vector<BlockRef> buffer_blocks(PolicyParameters& p) {
  std::vector<BlockRef> out;
  encoder_blocks("nodes.", p.nodes, out, true);
  encoder_blocks("agents.", p.agents, out, true);
  return out;
}

int64_t parameter_count(PolicyParameters& p) {
  int64_t total = 0;
  for (const auto& b : trainable_blocks(p)) total += b.size();
  return total;
}

double grad_global_norm(PolicyParameters& grads) {
  double sq = 0.0;
  for (const auto& b : trainable_blocks(grads)) {
    for (Eigen::Index i = 0; i < b.size(); ++i) sq += b.data[i] * b.data[i];
  }
  return std::sqrt(sq);
}

void clip_grad_norm(PolicyParameters& grads, double max_norm) {
  const double norm = grad_global_norm(grads);
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (const auto& b : trainable_blocks(grads)) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data[i] *= scale;
  }
}

}  // namespace sweepnet
