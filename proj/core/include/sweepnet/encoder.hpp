#pragma once

#include <span>
#include <vector>

#include "sweepnet/instance.hpp"
#include "sweepnet/nn.hpp"

namespace sweepnet {

// One gated graph-convolution layer: residual node/edge updates with
// sigmoid-gated neighbor aggregation and batch norm on both streams.
struct GatedLayerParams {
  Eigen::MatrixXd U, V, A, B, C;  // d x d
  BatchNorm bn_h, bn_e;
};

struct EncoderParams {
  int d = 0;
  int input_dim = 0;  // node feature width: 8 for areas (corner coords), 2 for agents
  Linear node_proj;   // input_dim -> d
  Linear edge_proj;   // scalar distance -> d
  std::vector<GatedLayerParams> layers;

  int num_layers() const { return static_cast<int>(layers.size()); }
};

EncoderParams make_encoder_params(int d, int num_layers, int input_dim, Rng& rng);
EncoderParams zeros_like(const EncoderParams& p);

struct NodeEmbeddings {
  RowMat h;  // n x d
  RowMat e;  // (n*n) x d, row i*n+j
  int n = 0;
};

struct AgentEmbeddings {
  RowMat h;  // m x d
  RowMat e;  // (m*m) x d
  int m = 0;
};

using Neighbors = std::vector<std::vector<int>>;

struct EncoderLayerCache {
  RowMat h_in, e_in;
  RowMat vh;  // h_in * V^T
  BatchNorm::Cache bn_h, bn_e;
};

struct EncoderCache {
  RowMat node_feats;  // inputs, kept for the projection backward
  RowMat edge_feats;
  std::vector<EncoderLayerCache> layers;
  RowMat h_out, e_out;
};

// Batched forward over `batch` graphs of n nodes each. Rows of node matrices
// are (b*n + i); rows of edge matrices are (b*n*n + i*n + j).
void encode_graph_batch(const EncoderParams& params, const RowMat& node_feats,
                        const RowMat& edge_feats,
                        std::span<const Neighbors* const> graphs, int batch, int n,
                        BnMode mode, bool update_running, RowMat& h_out, RowMat& e_out,
                        EncoderCache* cache);

// Training-mode backward; accumulates parameter gradients.
void encoder_backward(const EncoderParams& params, const EncoderCache& cache,
                      std::span<const Neighbors* const> graphs, int batch, int n,
                      const RowMat& dh_out, const RowMat& de_out, EncoderParams& grads);

// Node feature layout: the 8 corner coordinates in corner order (x0,y0,...,x3,y3).
RowMat area_features(const Instance& inst);
RowMat area_edge_features(const Instance& inst);
RowMat agent_features(std::span<const Point2> positions);
RowMat agent_edge_features(std::span<const Point2> positions);

// Projection of the raw inputs (layer-0 embeddings).
std::pair<RowMat, RowMat> init_node_embeddings(const Instance& inst, const EncoderParams& params);

NodeEmbeddings encode_nodes(const Instance& inst, const EncoderParams& params,
                            BnMode mode = BnMode::Eval);
AgentEmbeddings encode_agents(std::span<const Point2> positions, const EncoderParams& params,
                              BnMode mode = BnMode::Eval);

}  // namespace sweepnet
