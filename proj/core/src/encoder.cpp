#include "sweepnet/encoder.hpp"

#include <cmath>

namespace sweepnet {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

EncoderParams make_encoder_params(int d, int num_layers, int input_dim, Rng& rng) {
  EncoderParams p;
  p.d = d;
  p.input_dim = input_dim;
  const double range = 1.0 / std::sqrt(static_cast<double>(d));
  p.node_proj = Linear::zeros(d, input_dim);
  p.edge_proj = Linear::zeros(d, 1);
  fill_uniform(p.node_proj.W, rng, range);
  fill_uniform(p.node_proj.b, rng, range);
  fill_uniform(p.edge_proj.W, rng, range);
  fill_uniform(p.edge_proj.b, rng, range);
  p.layers.resize(num_layers);
  for (auto& layer : p.layers) {
    layer.U = Eigen::MatrixXd(d, d);
    layer.V = Eigen::MatrixXd(d, d);
    layer.A = Eigen::MatrixXd(d, d);
    layer.B = Eigen::MatrixXd(d, d);
    layer.C = Eigen::MatrixXd(d, d);
    fill_uniform(layer.U, rng, range);
    fill_uniform(layer.V, rng, range);
    fill_uniform(layer.A, rng, range);
    fill_uniform(layer.B, rng, range);
    fill_uniform(layer.C, rng, range);
    layer.bn_h = BatchNorm::identity(d);
    layer.bn_e = BatchNorm::identity(d);
  }
  return p;
}

EncoderParams zeros_like(const EncoderParams& p) {
  EncoderParams z = p;
  z.node_proj.W.setZero();
  z.node_proj.b.setZero();
  z.edge_proj.W.setZero();
  z.edge_proj.b.setZero();
  for (auto& layer : z.layers) {
    layer.U.setZero();
    layer.V.setZero();
    layer.A.setZero();
    layer.B.setZero();
    layer.C.setZero();
    layer.bn_h.gamma.setZero();
    layer.bn_h.beta.setZero();
    layer.bn_h.running_mean.setZero();
    layer.bn_h.running_var.setZero();
    layer.bn_e.gamma.setZero();
    layer.bn_e.beta.setZero();
    layer.bn_e.running_mean.setZero();
    layer.bn_e.running_var.setZero();
  }
  return z;
}

void encode_graph_batch(const EncoderParams& params, const RowMat& node_feats,
                        const RowMat& edge_feats,
                        std::span<const Neighbors* const> graphs, int batch, int n,
                        BnMode mode, bool update_running, RowMat& h_out, RowMat& e_out,
                        EncoderCache* cache) {
  const int d = params.d;
  RowMat h = params.node_proj.forward(node_feats);
  RowMat e = params.edge_proj.forward(edge_feats);
  if (cache) {
    cache->node_feats = node_feats;
    cache->edge_feats = edge_feats;
    cache->layers.clear();
    cache->layers.reserve(params.layers.size());
  }

  for (const auto& layer : params.layers) {
    EncoderLayerCache lc;
    if (cache) {
      lc.h_in = h;
      lc.e_in = e;
    }
    RowMat vh = h * layer.V.transpose();

    // Node stream: residual + ReLU(BN(U h + mean over gated neighbors)).
    RowMat pre = h * layer.U.transpose();
    for (int b = 0; b < batch; ++b) {
      const Neighbors& nbrs = *graphs[b];
      for (int i = 0; i < n; ++i) {
        const auto& list = nbrs[i];
        if (list.empty()) continue;
        const int row = b * n + i;
        Eigen::RowVectorXd agg = Eigen::RowVectorXd::Zero(d);
        for (int j : list) {
          const int erow = (b * n + i) * n + j;
          agg.array() +=
              e.row(erow).array().unaryExpr([](double v) { return sigmoid(v); }) *
              vh.row(b * n + j).array();
        }
        pre.row(row) += agg / static_cast<double>(list.size());
      }
    }
    BatchNorm::Cache* bn_h_cache = cache ? &lc.bn_h : nullptr;
    // const_cast-free: BN forward mutates running stats only when asked to.
    RowMat hn = const_cast<BatchNorm&>(layer.bn_h).forward(pre, mode, bn_h_cache, update_running);
    RowMat h_next = h + hn.cwiseMax(0.0);

    // Edge stream: residual + ReLU(BN(A e + B h_i + C h_j)).
    RowMat t = e * layer.A.transpose();
    RowMat bh = h * layer.B.transpose();
    RowMat ch = h * layer.C.transpose();
    for (int b = 0; b < batch; ++b) {
      for (int i = 0; i < n; ++i) {
        const auto bh_row = bh.row(b * n + i);
        for (int j = 0; j < n; ++j) {
          t.row((b * n + i) * n + j) += bh_row + ch.row(b * n + j);
        }
      }
    }
    BatchNorm::Cache* bn_e_cache = cache ? &lc.bn_e : nullptr;
    RowMat en = const_cast<BatchNorm&>(layer.bn_e).forward(t, mode, bn_e_cache, update_running);
    RowMat e_next = e + en.cwiseMax(0.0);

    if (cache) {
      lc.vh = std::move(vh);
      cache->layers.push_back(std::move(lc));
    }
    h = std::move(h_next);
    e = std::move(e_next);
  }
  if (cache) {
    cache->h_out = h;
    cache->e_out = e;
  }
  h_out = std::move(h);
  e_out = std::move(e);
}

void encoder_backward(const EncoderParams& params, const EncoderCache& cache,
                      std::span<const Neighbors* const> graphs, int batch, int n,
                      const RowMat& dh_out, const RowMat& de_out, EncoderParams& grads) {
  const int d = params.d;
  const int num_layers = params.num_layers();
  RowMat dh = dh_out;
  RowMat de = de_out;
  if (de.size() == 0) de = RowMat::Zero(cache.e_out.rows(), d);

  for (int l = num_layers - 1; l >= 0; --l) {
    const auto& layer = params.layers[l];
    const auto& lc = cache.layers[l];
    auto& g = grads.layers[l];
    const RowMat& h_next = (l == num_layers - 1) ? cache.h_out : cache.layers[l + 1].h_in;
    const RowMat& e_next = (l == num_layers - 1) ? cache.e_out : cache.layers[l + 1].e_in;

    // Node stream.
    RowMat dhn = ((h_next - lc.h_in).array() > 0.0).cast<double>() * dh.array();
    RowMat dpre = layer.bn_h.backward(lc.bn_h, dhn, g.bn_h);
    // dh keeps the residual contribution.
    g.U.noalias() += dpre.transpose() * lc.h_in;
    RowMat dh_prev = dh + dpre * layer.U;

    RowMat dvh = RowMat::Zero(batch * n, d);
    RowMat de_prev = de;  // residual
    for (int b = 0; b < batch; ++b) {
      const Neighbors& nbrs = *graphs[b];
      for (int i = 0; i < n; ++i) {
        const auto& list = nbrs[i];
        if (list.empty()) continue;
        const int row = b * n + i;
        const double w = 1.0 / static_cast<double>(list.size());
        for (int j : list) {
          const int erow = (b * n + i) * n + j;
          const Eigen::ArrayXd sig =
              lc.e_in.row(erow).transpose().array().unaryExpr([](double v) { return sigmoid(v); });
          dvh.row(b * n + j).array() += w * dpre.row(row).array() * sig.transpose();
          de_prev.row(erow).array() += w * dpre.row(row).array() *
                                       lc.vh.row(b * n + j).array() *
                                       (sig * (1.0 - sig)).transpose();
        }
      }
    }
    g.V.noalias() += dvh.transpose() * lc.h_in;
    dh_prev.noalias() += dvh * layer.V;

    // Edge stream.
    RowMat den = ((e_next - lc.e_in).array() > 0.0).cast<double>() * de.array();
    RowMat dt = layer.bn_e.backward(lc.bn_e, den, g.bn_e);
    g.A.noalias() += dt.transpose() * lc.e_in;
    de_prev.noalias() += dt * layer.A;

    RowMat dbh = RowMat::Zero(batch * n, d);
    RowMat dch = RowMat::Zero(batch * n, d);
    for (int b = 0; b < batch; ++b) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const auto dt_row = dt.row((b * n + i) * n + j);
          dbh.row(b * n + i) += dt_row;
          dch.row(b * n + j) += dt_row;
        }
      }
    }
    g.B.noalias() += dbh.transpose() * lc.h_in;
    g.C.noalias() += dch.transpose() * lc.h_in;
    dh_prev.noalias() += dbh * layer.B;
    dh_prev.noalias() += dch * layer.C;

    dh = std::move(dh_prev);
    de = std::move(de_prev);
  }

  params.node_proj.backward(cache.node_feats, dh, grads.node_proj);
  params.edge_proj.backward(cache.edge_feats, de, grads.edge_proj);
}

RowMat area_features(const Instance& inst) {
  const int n = inst.num_areas();
  RowMat f(n, 8);
  for (int i = 0; i < n; ++i) {
    const auto corners = inst.areas[i].corners();
    for (int k = 0; k < 4; ++k) {
      f(i, 2 * k) = corners[k].x;
      f(i, 2 * k + 1) = corners[k].y;
    }
  }
  return f;
}

RowMat area_edge_features(const Instance& inst) {
  const int n = inst.num_areas();
  RowMat f(n * n, 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      f(i * n + j, 0) = distance(inst.areas[i].center, inst.areas[j].center);
  return f;
}

RowMat agent_features(std::span<const Point2> positions) {
  const int m = static_cast<int>(positions.size());
  RowMat f(m, 2);
  for (int i = 0; i < m; ++i) {
    f(i, 0) = positions[i].x;
    f(i, 1) = positions[i].y;
  }
  return f;
}

RowMat agent_edge_features(std::span<const Point2> positions) {
  const int m = static_cast<int>(positions.size());
  RowMat f(m * m, 1);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) f(i * m + j, 0) = distance(positions[i], positions[j]);
  return f;
}

std::pair<RowMat, RowMat> init_node_embeddings(const Instance& inst,
                                               const EncoderParams& params) {
  return {params.node_proj.forward(area_features(inst)),
          params.edge_proj.forward(area_edge_features(inst))};
}

NodeEmbeddings encode_nodes(const Instance& inst, const EncoderParams& params, BnMode mode) {
  NodeEmbeddings out;
  out.n = inst.num_areas();
  const Neighbors nbrs = neighbor_lists(inst.adjacency);
  const Neighbors* g = &nbrs;
  encode_graph_batch(params, area_features(inst), area_edge_features(inst), {&g, 1}, 1, out.n,
                     mode, false, out.h, out.e, nullptr);
  return out;
}

AgentEmbeddings encode_agents(std::span<const Point2> positions, const EncoderParams& params,
                              BnMode mode) {
  AgentEmbeddings out;
  out.m = static_cast<int>(positions.size());
  const Neighbors nbrs = complete_graph(out.m);
  const Neighbors* g = &nbrs;
  encode_graph_batch(params, agent_features(positions), agent_edge_features(positions), {&g, 1},
                     1, out.m, mode, false, out.h, out.e, nullptr);
  return out;
}

}  // namespace sweepnet
