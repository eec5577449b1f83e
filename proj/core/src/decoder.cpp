#include "sweepnet/decoder.hpp"

#include <cmath>
#include <limits>

namespace sweepnet {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Stable softmax with log-probs over a dense logit vector.
void softmax(const Eigen::VectorXd& z, Eigen::VectorXd& p, Eigen::VectorXd& logp) {
  const double zmax = z.maxCoeff();
  Eigen::VectorXd ez = (z.array() - zmax).exp();
  const double sum = ez.sum();
  p = ez / sum;
  logp = z.array() - (zmax + std::log(sum));
}

int argmax_lowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

Eigen::Vector2d to_vec(const Point2& p) { return {p.x, p.y}; }

// Single-head attention: out = sum_k softmax(q . k_col / sqrt(dim))_k v_col.
// Columns of K/V are the candidates.
Eigen::VectorXd attention_cols(const Eigen::VectorXd& q, const Eigen::MatrixXd& K,
                               const Eigen::MatrixXd& V, Eigen::VectorXd& attn_out) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.size()));
  Eigen::VectorXd scores = (K.transpose() * q) * scale;
  Eigen::VectorXd logp;
  softmax(scores, attn_out, logp);
  return V * attn_out;
}

// Backward of attention_cols. Accumulates dK/dV and returns dq.
Eigen::VectorXd attention_cols_backward(const Eigen::VectorXd& q, const Eigen::MatrixXd& K,
                                        const Eigen::MatrixXd& V, const Eigen::VectorXd& attn,
                                        const Eigen::VectorXd& dout, Eigen::MatrixXd& dK,
                                        Eigen::MatrixXd& dV) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.size()));
  Eigen::VectorXd da = V.transpose() * dout;
  dV.noalias() += dout * attn.transpose();
  const double dot = attn.dot(da);
  Eigen::VectorXd ds = attn.array() * (da.array() - dot);
  dK.noalias() += (q * ds.transpose()) * scale;
  return (K * ds) * scale;
}

}  // namespace

DecoderParams make_decoder_params(int d, int heads, int d_corner, int d_pattern, double clip,
                                  Rng& rng) {
  DecoderParams p;
  p.d = d;
  p.heads = heads;
  p.d_corner = d_corner;
  p.d_pattern = d_pattern;
  p.clip = clip;
  if (d % heads != 0) throw ValidationError("decoder: heads must divide d");

  auto mat = [&](int r, int c, double range) {
    Eigen::MatrixXd m(r, c);
    fill_uniform(m, rng, range);
    return m;
  };
  auto vec = [&](int r, double range) {
    Eigen::VectorXd v(r);
    fill_uniform(v, rng, range);
    return v;
  };
  const double rd = 1.0 / std::sqrt(static_cast<double>(d));
  const double rc = 1.0 / std::sqrt(static_cast<double>(d_corner));
  const double rp = 1.0 / std::sqrt(static_cast<double>(d_pattern));

  p.context_fuse = mat(d, 6 * d, rd);
  p.ctx_query = mat(d, d, rd);
  p.node_key = mat(d, d, rd);
  p.node_value = mat(d, d, rd);
  p.area_query = mat(d, d, rd);
  p.area_key = mat(d, d, rd);
  p.ph_first = vec(d, rd);
  p.ph_last = vec(d, rd);
  p.ph_current = vec(d, rd);

  p.pos_embed = mat(d_corner, 2, rc);
  p.corner_embed = mat(d_corner, 2, rc);
  p.corner_key = mat(d_corner, d_corner, rc);
  p.corner_value = mat(d_corner, d_corner, rc);
  p.corner_query = mat(d_corner, d_corner, rc);
  p.corner_ptr_key = mat(d_corner, 2, rc);

  p.pattern_query_embed = mat(d_pattern, 2, rp);
  p.pattern_key_embed = mat(d_pattern, 2, rp);
  p.pattern_value_embed = mat(d_pattern, 2, rp);
  p.pattern_query = mat(d_pattern, d_pattern, rp);
  p.pattern_ptr_key = mat(d_pattern, 2, rp);
  return p;
}

DecoderParams zeros_like(const DecoderParams& p) {
  DecoderParams z = p;
  for (Eigen::MatrixXd* m :
       {&z.context_fuse, &z.ctx_query, &z.node_key, &z.node_value, &z.area_query, &z.area_key,
        &z.pos_embed, &z.corner_embed, &z.corner_key, &z.corner_value, &z.corner_query,
        &z.corner_ptr_key, &z.pattern_query_embed, &z.pattern_key_embed, &z.pattern_value_embed,
        &z.pattern_query, &z.pattern_ptr_key})
    m->setZero();
  z.ph_first.setZero();
  z.ph_last.setZero();
  z.ph_current.setZero();
  return z;
}

DecodingState DecodingState::init(const Instance& inst) {
  DecodingState st;
  st.assigned.assign(inst.num_areas(), 0);
  st.remaining = inst.num_areas();
  st.tours.resize(inst.num_agents());
  st.positions = inst.agents;
  st.current_area.assign(inst.num_agents(), -1);
  return st;
}

NodeProjections project_nodes(const DecoderParams& dec, const RowMat& node_h) {
  NodeProjections p;
  p.key = node_h * dec.node_key.transpose();
  p.value = node_h * dec.node_value.transpose();
  p.ptr = node_h * dec.area_key.transpose();
  return p;
}

Eigen::VectorXd build_context(const DecoderParams& dec, const RowMat& node_h,
                              const Eigen::VectorXd& h_graph,
                              const Eigen::VectorXd* agent_start,
                              const Eigen::VectorXd* agent_current,
                              std::span<const ScanAction> tour, int current_area,
                              AreaStageCache* cache) {
  const int d = dec.d;
  Eigen::VectorXd concat(6 * d);
  concat.segment(0, d) = h_graph;
  const int first = tour.empty() ? -1 : tour.front().area;
  const int last = tour.empty() ? -1 : tour.back().area;
  concat.segment(d, d) = first < 0 ? dec.ph_first : node_h.row(first).transpose();
  concat.segment(2 * d, d) = last < 0 ? dec.ph_last : node_h.row(last).transpose();
  if (agent_start)
    concat.segment(3 * d, d) = *agent_start;
  else
    concat.segment(3 * d, d).setZero();
  if (agent_current)
    concat.segment(4 * d, d) = *agent_current;
  else
    concat.segment(4 * d, d).setZero();
  concat.segment(5 * d, d) =
      current_area < 0 ? dec.ph_current : node_h.row(current_area).transpose();

  Eigen::VectorXd ctx_hat = dec.context_fuse * concat;
  if (cache) {
    cache->concat = concat;
    cache->ctx_hat = ctx_hat;
    cache->slot_first = first;
    cache->slot_last = last;
    cache->slot_cur = current_area;
  }
  return ctx_hat;
}

Eigen::VectorXd refine_context(const DecoderParams& dec, const Eigen::VectorXd& ctx_hat,
                               const RowMat& node_key, const RowMat& node_value,
                               std::span<const char> assigned, AreaStageCache* cache) {
  const int d = dec.d;
  const int heads = dec.heads;
  const int hd = d / heads;
  std::vector<int> avail;
  avail.reserve(assigned.size());
  for (size_t j = 0; j < assigned.size(); ++j)
    if (!assigned[j]) avail.push_back(static_cast<int>(j));
  if (avail.empty()) throw DecoderExhaustedError("refine_context: all areas assigned");

  Eigen::VectorXd q = dec.ctx_query * ctx_hat;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const int na = static_cast<int>(avail.size());

  Eigen::MatrixXd attn(heads, na);
  Eigen::VectorXd out(d);
  for (int h = 0; h < heads; ++h) {
    Eigen::VectorXd scores(na);
    for (int a = 0; a < na; ++a)
      scores(a) = q.segment(h * hd, hd).dot(node_key.row(avail[a]).segment(h * hd, hd)) * scale;
    Eigen::VectorXd p, logp;
    softmax(scores, p, logp);
    attn.row(h) = p.transpose();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(hd);
    for (int a = 0; a < na; ++a)
      acc += p(a) * node_value.row(avail[a]).segment(h * hd, hd).transpose();
    out.segment(h * hd, hd) = acc;
  }
  if (cache) {
    cache->avail = avail;
    cache->attn = attn;
    cache->q1 = q;
    cache->ctx_ref = out;
  }
  return out;
}

Eigen::VectorXd refine_context(const DecoderParams& dec, const Eigen::VectorXd& ctx_hat,
                               const RowMat& node_h, std::span<const char> assigned) {
  const NodeProjections proj = project_nodes(dec, node_h);
  return refine_context(dec, ctx_hat, proj.key, proj.value, assigned, nullptr);
}

StageDistribution area_logits(const DecoderParams& dec, const Eigen::VectorXd& ctx_refined,
                              const RowMat& node_ptr, std::span<const char> assigned,
                              AreaStageCache* cache) {
  const int n = static_cast<int>(assigned.size());
  std::vector<int> avail;
  for (int j = 0; j < n; ++j)
    if (!assigned[j]) avail.push_back(j);
  if (avail.empty()) throw DecoderExhaustedError("area_logits: all areas assigned");

  Eigen::VectorXd ptr_q = dec.area_query * ctx_refined;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dec.d));
  const int na = static_cast<int>(avail.size());
  Eigen::VectorXd u(na), z(na);
  for (int a = 0; a < na; ++a) {
    u(a) = ptr_q.dot(node_ptr.row(avail[a]).transpose()) * scale;
    z(a) = dec.clip * std::tanh(u(a));
  }
  Eigen::VectorXd p, logp;
  softmax(z, p, logp);

  StageDistribution dist;
  dist.probs = Eigen::VectorXd::Zero(n);
  dist.logps = Eigen::VectorXd::Constant(n, kNegInf);
  dist.logits = Eigen::VectorXd::Constant(n, kNegInf);
  for (int a = 0; a < na; ++a) {
    dist.probs(avail[a]) = p(a);
    dist.logps(avail[a]) = logp(a);
    dist.logits(avail[a]) = z(a);
  }
  if (cache) {
    cache->ptr_q = ptr_q;
    cache->u = u;
    cache->p = p;
    if (cache->avail.empty()) cache->avail = avail;
  }
  return dist;
}

StageDistribution corner_logits(const DecoderParams& dec, const Point2& position,
                                const std::array<Point2, 4>& corners, CornerStageCache* cache) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(dec.d_corner));
  Eigen::VectorXd h_st = dec.pos_embed * to_vec(position);
  Eigen::MatrixXd raw(2, 4), ec(dec.d_corner, 4);
  for (int k = 0; k < 4; ++k) raw.col(k) = to_vec(corners[k]);
  ec = dec.corner_embed * raw;
  Eigen::MatrixXd k2 = dec.corner_key * ec;
  Eigen::MatrixXd v2 = dec.corner_value * ec;
  Eigen::VectorXd attn;
  Eigen::VectorXd h_stc = attention_cols(h_st, k2, v2, attn);
  Eigen::VectorXd q2 = dec.corner_query * h_stc;

  Eigen::VectorXd u(4), z(4);
  for (int k = 0; k < 4; ++k) {
    u(k) = q2.dot(dec.corner_ptr_key * raw.col(k)) * scale;
    z(k) = dec.clip * std::tanh(u(k));
  }
  StageDistribution dist;
  softmax(z, dist.probs, dist.logps);
  dist.logits = z;
  if (cache) {
    cache->position = position;
    cache->corners = corners;
    cache->h_st = h_st;
    cache->ec = ec;
    cache->k2 = k2;
    cache->v2 = v2;
    cache->attn = attn;
    cache->h_stc = h_stc;
    cache->q2 = q2;
    cache->u = u;
    cache->p = dist.probs;
  }
  return dist;
}

StageDistribution pattern_logits(const DecoderParams& dec, const Point2& corner,
                                 std::span<const Point2> endpoints, PatternStageCache* cache) {
  const int np = static_cast<int>(endpoints.size());
  if (np < 1) throw ValidationError("pattern_logits: need at least one pattern");
  const double scale = 1.0 / std::sqrt(static_cast<double>(dec.d_pattern));
  Eigen::VectorXd q3e = dec.pattern_query_embed * to_vec(corner);
  Eigen::MatrixXd raw(2, np);
  for (int zi = 0; zi < np; ++zi) raw.col(zi) = to_vec(endpoints[zi]);
  Eigen::MatrixXd k3 = dec.pattern_key_embed * raw;
  Eigen::MatrixXd v3 = dec.pattern_value_embed * raw;
  Eigen::VectorXd attn;
  Eigen::VectorXd h_kc = attention_cols(q3e, k3, v3, attn);
  Eigen::VectorXd q3 = dec.pattern_query * h_kc;

  Eigen::VectorXd u(np), z(np);
  for (int zi = 0; zi < np; ++zi) {
    u(zi) = q3.dot(dec.pattern_ptr_key * raw.col(zi)) * scale;
    z(zi) = dec.clip * std::tanh(u(zi));
  }
  StageDistribution dist;
  softmax(z, dist.probs, dist.logps);
  dist.logits = z;
  if (cache) {
    cache->corner = corner;
    cache->endpoints.assign(endpoints.begin(), endpoints.end());
    cache->q3e = q3e;
    cache->k3 = k3;
    cache->v3 = v3;
    cache->attn = attn;
    cache->h_kc = h_kc;
    cache->q3 = q3;
    cache->u = u;
    cache->p = dist.probs;
  }
  return dist;
}

SelectedAction select_action(const DecoderParams& dec, const Instance& inst,
                             const CostConfig& cost, const DecodingState& state,
                             const StepEmbeddings& emb, const NodeProjections& proj,
                             const Eigen::VectorXd& h_graph, int agent, DecodeMode mode,
                             Rng* rng, StepCache* cache, const ScanAction* forced) {
  if (state.remaining <= 0)
    throw DecoderExhaustedError("select_action: no unassigned areas remain");
  AreaStageCache area_local;
  CornerStageCache corner_local;
  PatternStageCache pattern_local;
  AreaStageCache* ac = cache ? &cache->area : &area_local;
  CornerStageCache* cc = cache ? &cache->corner : &corner_local;
  PatternStageCache* pc = cache ? &cache->pattern : &pattern_local;
  if (cache) cache->agent = agent;

  Eigen::VectorXd start_vec, curr_vec;
  if (emb.agents_encoder && emb.agents_start)
    start_vec = emb.agents_start->row(agent).transpose();
  if (emb.agents_encoder && emb.agents_current)
    curr_vec = emb.agents_current->row(agent).transpose();

  const Eigen::VectorXd ctx_hat = build_context(
      dec, *emb.node_h, h_graph, start_vec.size() ? &start_vec : nullptr,
      curr_vec.size() ? &curr_vec : nullptr, state.tours[agent], state.current_area[agent], ac);
  const Eigen::VectorXd ctx_ref =
      refine_context(dec, ctx_hat, proj.key, proj.value, state.assigned, ac);
  const StageDistribution d1 = area_logits(dec, ctx_ref, proj.ptr, state.assigned, ac);

  auto pick = [&](const Eigen::VectorXd& probs_avail, int forced_idx) -> int {
    if (forced) return forced_idx;
    if (mode == DecodeMode::Greedy) return argmax_lowest(probs_avail);
    const int idx =
        rng->categorical({probs_avail.data(), static_cast<size_t>(probs_avail.size())});
    if (idx < 0)
      throw TrainingError("select_action: degenerate stage distribution (non-finite logits?)");
    return idx;
  };

  SelectedAction out;
  int a_idx;
  if (forced) {
    a_idx = -1;
    for (size_t i = 0; i < ac->avail.size(); ++i)
      if (ac->avail[i] == forced->area) a_idx = static_cast<int>(i);
    if (a_idx < 0) throw FeasibilityError("select_action: forced area already assigned");
  } else {
    a_idx = pick(ac->p, -1);
  }
  ac->chosen = a_idx;
  const int area = ac->avail[a_idx];
  out.action.area = area;
  out.logp_area = d1.logps(area);

  const StageDistribution d2 =
      corner_logits(dec, state.positions[agent], inst.areas[area].corners(), cc);
  const int corner = forced ? forced->corner : pick(cc->p, -1);
  cc->chosen = corner;
  out.action.corner = corner;
  out.logp_corner = d2.logps(corner);

  std::vector<Point2> endpoints(cost.pattern_count);
  for (int z = 0; z < cost.pattern_count; ++z)
    endpoints[z] = scan_path(inst.areas[area], corner, z, cost).end;
  const StageDistribution d3 =
      pattern_logits(dec, inst.areas[area].corner(corner), endpoints, pc);
  const int pattern = forced ? forced->pattern : pick(pc->p, -1);
  pc->chosen = pattern;
  out.action.pattern = pattern;
  out.logp_pattern = d3.logps(pattern);
  return out;
}

void apply_action(DecodingState& state, const Instance& inst, const CostConfig& cost, int agent,
                  const ScanAction& action) {
  const AreaSquare& area = inst.areas[action.area];
  const Point2 start = area.corner(action.corner);
  const ScanPath path = scan_path(area, action.corner, action.pattern, cost);
  state.inc_cost += distance(state.positions[agent], start) + path.length;
  state.positions[agent] = path.end;
  state.current_area[agent] = action.area;
  state.tours[agent].push_back(action);
  state.assigned[action.area] = 1;
  --state.remaining;
}

void decode_substep_backward(const DecoderParams& dec, const StepCache& sc, double w,
                             const NodeProjections& proj, int n,
                             DecoderParams& dgrad, RowMat& d_node_h, int node_row0,
                             RowMat& d_key, RowMat& d_value, RowMat& d_ptr,
                             RowMat* d_agents_start, int start_row0, RowMat* d_agents_current,
                             int current_row0) {
  const int d = dec.d;
  const int heads = dec.heads;
  const int hd = d / heads;

  // ---- Pattern stage ----
  {
    const auto& c = sc.pattern;
    const int np = static_cast<int>(c.endpoints.size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(dec.d_pattern));
    // d logp(chosen) / d z = onehot - p, weighted by w.
    Eigen::VectorXd dz = -w * c.p;
    dz(c.chosen) += w;
    Eigen::VectorXd du =
        dz.array() * dec.clip * (1.0 - c.u.array().tanh().square());
    Eigen::MatrixXd raw(2, np);
    for (int zi = 0; zi < np; ++zi) raw.col(zi) = to_vec(c.endpoints[zi]);
    // u_z = q3 . (W_K3 raw_z) * scale
    Eigen::VectorXd dq3 = Eigen::VectorXd::Zero(dec.d_pattern);
    for (int zi = 0; zi < np; ++zi) {
      const Eigen::VectorXd key = dec.pattern_ptr_key * raw.col(zi);
      dq3 += du(zi) * scale * key;
      dgrad.pattern_ptr_key.noalias() += du(zi) * scale * c.q3 * raw.col(zi).transpose();
    }
    dgrad.pattern_query.noalias() += dq3 * c.h_kc.transpose();
    Eigen::VectorXd dh_kc = dec.pattern_query.transpose() * dq3;
    Eigen::MatrixXd dk3 = Eigen::MatrixXd::Zero(dec.d_pattern, np);
    Eigen::MatrixXd dv3 = Eigen::MatrixXd::Zero(dec.d_pattern, np);
    Eigen::VectorXd dq3e =
        attention_cols_backward(c.q3e, c.k3, c.v3, c.attn, dh_kc, dk3, dv3);
    dgrad.pattern_key_embed.noalias() += dk3 * raw.transpose();
    dgrad.pattern_value_embed.noalias() += dv3 * raw.transpose();
    dgrad.pattern_query_embed.noalias() += dq3e * to_vec(c.corner).transpose();
  }

  // ---- Corner stage ----
  {
    const auto& c = sc.corner;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dec.d_corner));
    Eigen::VectorXd dz = -w * Eigen::VectorXd(c.p);
    dz(c.chosen) += w;
    Eigen::VectorXd du = dz.array() * dec.clip * (1.0 - c.u.array().tanh().square());
    Eigen::MatrixXd raw(2, 4);
    for (int k = 0; k < 4; ++k) raw.col(k) = to_vec(c.corners[k]);
    Eigen::VectorXd dq2 = Eigen::VectorXd::Zero(dec.d_corner);
    for (int k = 0; k < 4; ++k) {
      const Eigen::VectorXd key = dec.corner_ptr_key * raw.col(k);
      dq2 += du(k) * scale * key;
      dgrad.corner_ptr_key.noalias() += du(k) * scale * c.q2 * raw.col(k).transpose();
    }
    dgrad.corner_query.noalias() += dq2 * c.h_stc.transpose();
    Eigen::VectorXd dh_stc = dec.corner_query.transpose() * dq2;
    Eigen::MatrixXd dk2 = Eigen::MatrixXd::Zero(dec.d_corner, 4);
    Eigen::MatrixXd dv2 = Eigen::MatrixXd::Zero(dec.d_corner, 4);
    Eigen::VectorXd dh_st =
        attention_cols_backward(c.h_st, c.k2, c.v2, c.attn, dh_stc, dk2, dv2);
    // k2 = corner_key * ec, v2 = corner_value * ec, ec = corner_embed * raw.
    Eigen::MatrixXd dec_emb = dec.corner_key.transpose() * dk2;
    dec_emb.noalias() += dec.corner_value.transpose() * dv2;
    dgrad.corner_key.noalias() += dk2 * c.ec.transpose();
    dgrad.corner_value.noalias() += dv2 * c.ec.transpose();
    dgrad.corner_embed.noalias() += dec_emb * raw.transpose();
    dgrad.pos_embed.noalias() += dh_st * to_vec(c.position).transpose();
  }

  // ---- Area stage ----
  {
    const auto& c = sc.area;
    const int na = static_cast<int>(c.avail.size());
    const double pscale = 1.0 / std::sqrt(static_cast<double>(d));
    Eigen::VectorXd dz = -w * c.p;
    dz(c.chosen) += w;
    Eigen::VectorXd du = dz.array() * dec.clip * (1.0 - c.u.array().tanh().square());
    Eigen::VectorXd dptr_q = Eigen::VectorXd::Zero(d);
    for (int a = 0; a < na; ++a) {
      const int j = c.avail[a];
      dptr_q += du(a) * pscale * proj.ptr.row(j).transpose();
      d_ptr.row(node_row0 + j) += (du(a) * pscale * c.ptr_q).transpose();
    }
    dgrad.area_query.noalias() += dptr_q * c.ctx_ref.transpose();
    Eigen::VectorXd dctx_ref = dec.area_query.transpose() * dptr_q;

    // Multi-head attention backward.
    const double ascale = 1.0 / std::sqrt(static_cast<double>(hd));
    Eigen::VectorXd dq1 = Eigen::VectorXd::Zero(d);
    for (int h = 0; h < heads; ++h) {
      const auto dout_h = dctx_ref.segment(h * hd, hd);
      const auto q_h = c.q1.segment(h * hd, hd);
      Eigen::VectorXd da(na);
      for (int a = 0; a < na; ++a) {
        const int j = c.avail[a];
        da(a) = dout_h.dot(proj.value.row(j).segment(h * hd, hd));
        d_value.row(node_row0 + j).segment(h * hd, hd) +=
            (c.attn(h, a) * dout_h).transpose();
      }
      const double dot = c.attn.row(h).dot(da.transpose());
      for (int a = 0; a < na; ++a) {
        const int j = c.avail[a];
        const double ds = c.attn(h, a) * (da(a) - dot);
        dq1.segment(h * hd, hd) +=
            ds * ascale * proj.key.row(j).segment(h * hd, hd).transpose();
        d_key.row(node_row0 + j).segment(h * hd, hd) += (ds * ascale * q_h).transpose();
      }
    }
    dgrad.ctx_query.noalias() += dq1 * c.ctx_hat.transpose();
    Eigen::VectorXd dctx_hat = dec.ctx_query.transpose() * dq1;

    // Context fuse backward.
    dgrad.context_fuse.noalias() += dctx_hat * c.concat.transpose();
    Eigen::VectorXd dconcat = dec.context_fuse.transpose() * dctx_hat;
    // Slot 1: graph mean spreads over all node rows.
    const Eigen::RowVectorXd dmean = dconcat.segment(0, d).transpose() / static_cast<double>(n);
    for (int i = 0; i < n; ++i) d_node_h.row(node_row0 + i) += dmean;
    if (c.slot_first < 0)
      dgrad.ph_first += dconcat.segment(d, d);
    else
      d_node_h.row(node_row0 + c.slot_first) += dconcat.segment(d, d).transpose();
    if (c.slot_last < 0)
      dgrad.ph_last += dconcat.segment(2 * d, d);
    else
      d_node_h.row(node_row0 + c.slot_last) += dconcat.segment(2 * d, d).transpose();
    if (d_agents_start)
      d_agents_start->row(start_row0 + sc.agent) += dconcat.segment(3 * d, d).transpose();
    if (d_agents_current)
      d_agents_current->row(current_row0 + sc.agent) += dconcat.segment(4 * d, d).transpose();
    if (c.slot_cur < 0)
      dgrad.ph_current += dconcat.segment(5 * d, d);
    else
      d_node_h.row(node_row0 + c.slot_cur) += dconcat.segment(5 * d, d).transpose();
  }
}

}  // namespace sweepnet
