#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sweepnet/decoder.hpp"
#include "sweepnet/encoder.hpp"

namespace sweepnet {

struct ModelConfig {
  int d = 128;          // hidden dimension of both encoders and the area network
  int layers = 3;       // gated graph-conv layers per encoder
  int heads = 8;        // attention heads in the area network
  int d_corner = 128;   // corner network width
  int d_pattern = 128;  // pattern network width
  double logit_clip = 10.0;
  bool agents_encoder = true;  // false: agent embedding slots are zeroed
  CostConfig cost;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline bool operator==(const CostConfig& a, const CostConfig& b) {
  return a.sweep_width == b.sweep_width && a.pattern_count == b.pattern_count;
}

// All learnable state of the policy: both encoders plus the decoder.
struct PolicyParameters {
  ModelConfig config;
  EncoderParams nodes;
  EncoderParams agents;
  DecoderParams decoder;
};

PolicyParameters init_parameters(const ModelConfig& cfg, uint64_t seed);
PolicyParameters zeros_like(const PolicyParameters& p);

// Named view of one parameter (or buffer) block.
struct BlockRef {
  std::string name;
  double* data = nullptr;
  Eigen::Index rows = 0, cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

// Stable enumeration of all trainable blocks (weights, biases, BN affine,
// placeholders). The order defines the flattened parameter vector.
std::vector<BlockRef> trainable_blocks(PolicyParameters& p);
// BN running statistics; saved in checkpoints but not trained.
std::vector<BlockRef> buffer_blocks(PolicyParameters& p);

int64_t parameter_count(PolicyParameters& p);
double grad_global_norm(PolicyParameters& grads);
// Scales gradients so their global norm does not exceed max_norm.
void clip_grad_norm(PolicyParameters& grads, double max_norm);

// Binary checkpoint: versioned magic header, JSON model config, then named
// blocks with shape headers and little-endian f64 payloads.
void save_checkpoint(const std::filesystem::path& path, const PolicyParameters& params);
PolicyParameters load_checkpoint(const std::filesystem::path& path);

}  // namespace sweepnet
