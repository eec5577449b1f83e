#include <doctest.h>

#include <algorithm>
#include <map>
#include <memory>
#include <tuple>

#include "sweepnet/rollout.hpp"
#include "testutil.hpp"

using namespace sweepnet;

namespace {

struct DecodeFixture {
  Instance inst;
  PolicyParameters params;
  NodeEmbeddings nodes;
  AgentEmbeddings agents;
  NodeProjections proj;
  Eigen::VectorXd h_graph;
  DecodingState state;
  StepEmbeddings emb;
};

std::unique_ptr<DecodeFixture> make_fixture(uint64_t seed, int n, int m, int d) {
  auto f = std::make_unique<DecodeFixture>();
  f->inst = generate_instance(seed, n, m);
  ModelConfig cfg;
  cfg.d = d;
  cfg.layers = 1;
  cfg.heads = d >= 8 ? 2 : 1;
  cfg.d_corner = d;
  cfg.d_pattern = d;
  f->params = init_parameters(cfg, derive_seed(seed, 1));
  f->nodes = encode_nodes(f->inst, f->params.nodes);
  f->agents = encode_agents(f->inst.agents, f->params.agents);
  f->proj = project_nodes(f->params.decoder, f->nodes.h);
  f->h_graph = f->nodes.h.colwise().mean().transpose();
  f->state = DecodingState::init(f->inst);
  f->emb.node_h = &f->nodes.h;
  f->emb.agents_start = &f->agents.h;
  f->emb.agents_current = &f->agents.h;
  return f;
}

void check_distribution(const StageDistribution& dist, double clip) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < dist.probs.size(); ++i) {
    const double p = dist.probs(i);
    CHECK(p >= 0.0);
    sum += p;
    if (p > 0.0) {
      CHECK(std::abs(std::exp(dist.logps(i)) - p) < 1e-9);
      CHECK(std::abs(dist.logits(i)) <= clip + 1e-12);
    } else {
      CHECK(dist.logps(i) == -std::numeric_limits<double>::infinity());
    }
  }
  CHECK(std::abs(sum - 1.0) < 1e-6);
}

}  // namespace

TEST_CASE("build_context: placeholders fill empty history slots") {
  auto f = make_fixture(3, 2, 1, 4);
  AreaStageCache cache;
  const Eigen::VectorXd agent0 = f->agents.h.row(0).transpose();
  build_context(f->params.decoder, f->nodes.h, f->h_graph, &agent0, &agent0, {}, -1, &cache);
  const int d = 4;
  CHECK(cache.concat.segment(d, d) == f->params.decoder.ph_first);
  CHECK(cache.concat.segment(2 * d, d) == f->params.decoder.ph_last);
  CHECK(cache.concat.segment(5 * d, d) == f->params.decoder.ph_current);
}

TEST_CASE("build_context: graph mean of a single area is that area") {
  auto f = make_fixture(4, 1, 1, 4);
  CHECK((f->h_graph - f->nodes.h.row(0).transpose()).norm() == doctest::Approx(0.0));
}

TEST_CASE("build_context: hand evaluation at d=2") {
  auto f = make_fixture(5, 2, 1, 2);
  DecoderParams& dec = f->params.decoder;
  // Tour already holds area 1, so slots 2, 3 and 6 read node row 1.
  std::vector<ScanAction> tour{{1, 0, 0}};
  const Eigen::VectorXd agent_start = f->agents.h.row(0).transpose();
  const Eigen::VectorXd agent_curr = 2.0 * agent_start;
  const Eigen::VectorXd got = build_context(dec, f->nodes.h, f->h_graph, &agent_start,
                                            &agent_curr, tour, 1, nullptr);

  double concat[12];
  for (int c = 0; c < 2; ++c) {
    concat[c] = 0.5 * (f->nodes.h(0, c) + f->nodes.h(1, c));
    concat[2 + c] = f->nodes.h(1, c);
    concat[4 + c] = f->nodes.h(1, c);
    concat[6 + c] = agent_start(c);
    concat[8 + c] = agent_curr(c);
    concat[10 + c] = f->nodes.h(1, c);
  }
  for (int r = 0; r < 2; ++r) {
    double expected = 0.0;
    for (int c = 0; c < 12; ++c) expected += dec.context_fuse(r, c) * concat[c];
    CHECK(got(r) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("refine_context: a single unassigned area returns its value projection") {
  auto f = make_fixture(6, 2, 1, 4);
  std::vector<char> assigned{1, 0};
  Eigen::VectorXd ctx = Eigen::VectorXd::Constant(4, 0.3);
  const Eigen::VectorXd out = refine_context(f->params.decoder, ctx, f->nodes.h, assigned);
  const Eigen::VectorXd expected = f->proj.value.row(1).transpose();
  CHECK((out - expected).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("refine_context: identical keys and values make the output query-independent") {
  auto f = make_fixture(7, 3, 1, 4);
  // Identical node embeddings -> identical keys/values.
  f->nodes.h.row(1) = f->nodes.h.row(0);
  f->nodes.h.row(2) = f->nodes.h.row(0);
  std::vector<char> assigned{0, 0, 0};
  Eigen::VectorXd q1 = Eigen::VectorXd::Constant(4, 0.9);
  Eigen::VectorXd q2 = Eigen::VectorXd::Constant(4, -1.7);
  const Eigen::VectorXd o1 = refine_context(f->params.decoder, q1, f->nodes.h, assigned);
  const Eigen::VectorXd o2 = refine_context(f->params.decoder, q2, f->nodes.h, assigned);
  CHECK((o1 - o2).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("refine_context: hand evaluation, 2 areas, 1 head, d=2") {
  auto f = make_fixture(8, 2, 1, 2);
  const DecoderParams& dec = f->params.decoder;
  Eigen::VectorXd ctx(2);
  ctx << 0.4, -0.2;
  std::vector<char> assigned{0, 0};
  const Eigen::VectorXd out = refine_context(dec, ctx, f->nodes.h, assigned);

  // Scalar evaluation of single-head attention.
  double q[2] = {0, 0}, k[2][2], v[2][2], s[2];
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) q[r] += dec.ctx_query(r, c) * ctx(c);
  for (int j = 0; j < 2; ++j)
    for (int r = 0; r < 2; ++r) {
      k[j][r] = v[j][r] = 0.0;
      for (int c = 0; c < 2; ++c) {
        k[j][r] += dec.node_key(r, c) * f->nodes.h(j, c);
        v[j][r] += dec.node_value(r, c) * f->nodes.h(j, c);
      }
    }
  for (int j = 0; j < 2; ++j) s[j] = (q[0] * k[j][0] + q[1] * k[j][1]) / std::sqrt(2.0);
  const double m = std::max(s[0], s[1]);
  const double w0 = std::exp(s[0] - m), w1 = std::exp(s[1] - m);
  for (int r = 0; r < 2; ++r) {
    const double expected = (w0 * v[0][r] + w1 * v[1][r]) / (w0 + w1);
    CHECK(out(r) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("area_logits: uniform over equal logits and exact zeros on the mask") {
  auto f = make_fixture(9, 4, 1, 4);
  f->params.decoder.area_query.setZero();  // all pointer logits zero
  std::vector<char> assigned{0, 0, 0, 0};
  Eigen::VectorXd ctx = Eigen::VectorXd::Constant(4, 0.5);
  const StageDistribution d0 =
      area_logits(f->params.decoder, ctx, f->proj.ptr, assigned, nullptr);
  for (int j = 0; j < 4; ++j) CHECK(d0.probs(j) == doctest::Approx(0.25).epsilon(1e-12));

  assigned[2] = 1;
  const StageDistribution d1 =
      area_logits(f->params.decoder, ctx, f->proj.ptr, assigned, nullptr);
  CHECK(d1.probs(2) == 0.0);
  CHECK(d1.logps(2) == -std::numeric_limits<double>::infinity());
  CHECK(d1.probs.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("area_logits: logits stay inside the clip range") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    auto f = make_fixture(100 + seed, 5, 2, 8);
    std::vector<char> assigned(5, 0);
    assigned[seed % 5] = 1;
    Eigen::VectorXd ctx(8);
    Rng rng(seed);
    for (int i = 0; i < 8; ++i) ctx(i) = rng.uniform(-3.0, 3.0);
    const StageDistribution dist =
        area_logits(f->params.decoder, ctx, f->proj.ptr, assigned, nullptr);
    check_distribution(dist, f->params.decoder.clip);
  }
}

TEST_CASE("area_logits: exhausted mask throws") {
  auto f = make_fixture(10, 2, 1, 4);
  std::vector<char> assigned{1, 1};
  Eigen::VectorXd ctx = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(area_logits(f->params.decoder, ctx, f->proj.ptr, assigned, nullptr),
                  DecoderExhaustedError);
}

TEST_CASE("corner_logits: zero weights give the uniform distribution") {
  auto f = make_fixture(11, 2, 1, 4);
  f->params.decoder.corner_query.setZero();
  const StageDistribution dist = corner_logits(f->params.decoder, {0.5, 0.5},
                                               f->inst.areas[0].corners(), nullptr);
  REQUIRE(dist.probs.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(dist.probs(k) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(dist.probs.sum() == doctest::Approx(1.0));
}

TEST_CASE("corner_logits: hand evaluation at d_corner=2") {
  auto f = make_fixture(12, 2, 1, 2);
  const DecoderParams& dec = f->params.decoder;
  const Point2 pos{0.3, 0.8};
  const auto corners = f->inst.areas[1].corners();
  const StageDistribution dist = corner_logits(dec, pos, corners, nullptr);

  auto matvec2 = [](const Eigen::MatrixXd& W, double x, double y, double* out) {
    out[0] = W(0, 0) * x + W(0, 1) * y;
    out[1] = W(1, 0) * x + W(1, 1) * y;
  };
  double h_st[2];
  matvec2(dec.pos_embed, pos.x, pos.y, h_st);
  double ec[4][2], k2[4][2], v2[4][2], scores[4];
  for (int k = 0; k < 4; ++k) {
    matvec2(dec.corner_embed, corners[k].x, corners[k].y, ec[k]);
    for (int r = 0; r < 2; ++r) {
      k2[k][r] = dec.corner_key(r, 0) * ec[k][0] + dec.corner_key(r, 1) * ec[k][1];
      v2[k][r] = dec.corner_value(r, 0) * ec[k][0] + dec.corner_value(r, 1) * ec[k][1];
    }
    scores[k] = (h_st[0] * k2[k][0] + h_st[1] * k2[k][1]) / std::sqrt(2.0);
  }
  double mx = *std::max_element(scores, scores + 4), wsum = 0.0, attn[4];
  for (int k = 0; k < 4; ++k) {
    attn[k] = std::exp(scores[k] - mx);
    wsum += attn[k];
  }
  double h_stc[2] = {0, 0};
  for (int k = 0; k < 4; ++k)
    for (int r = 0; r < 2; ++r) h_stc[r] += attn[k] / wsum * v2[k][r];
  double q2[2];
  q2[0] = dec.corner_query(0, 0) * h_stc[0] + dec.corner_query(0, 1) * h_stc[1];
  q2[1] = dec.corner_query(1, 0) * h_stc[0] + dec.corner_query(1, 1) * h_stc[1];
  double z[4];
  for (int k = 0; k < 4; ++k) {
    double key[2];
    matvec2(dec.corner_ptr_key, corners[k].x, corners[k].y, key);
    const double u = (q2[0] * key[0] + q2[1] * key[1]) / std::sqrt(2.0);
    z[k] = dec.clip * std::tanh(u);
  }
  double zmax = *std::max_element(z, z + 4), esum = 0.0;
  for (int k = 0; k < 4; ++k) esum += std::exp(z[k] - zmax);
  for (int k = 0; k < 4; ++k)
    CHECK(dist.probs(k) == doctest::Approx(std::exp(z[k] - zmax) / esum).epsilon(1e-10));
}

TEST_CASE("pattern_logits: singleton and identical endpoints") {
  auto f = make_fixture(13, 2, 1, 4);
  const Point2 corner = f->inst.areas[0].corner(0);
  std::vector<Point2> single{{0.4, 0.4}};
  const StageDistribution one = pattern_logits(f->params.decoder, corner, single, nullptr);
  CHECK(one.probs(0) == doctest::Approx(1.0));

  std::vector<Point2> same{{0.4, 0.4}, {0.4, 0.4}};
  const StageDistribution two = pattern_logits(f->params.decoder, corner, same, nullptr);
  CHECK(two.probs(0) == doctest::Approx(two.probs(1)).epsilon(1e-12));
}

TEST_CASE("pattern_logits: both patterns of an odd-lane square share an endpoint") {
  // Side 0.04, sweep width 0.015 -> three lanes; both patterns end at the
  // diagonally opposite corner.
  AreaSquare area{{0.5, 0.5}, 0.02};
  CostConfig cfg{0.015, 2};
  const Point2 e0 = scan_path(area, 0, 0, cfg).end;
  const Point2 e1 = scan_path(area, 0, 1, cfg).end;
  CHECK(e0 == e1);
  auto f = make_fixture(14, 2, 1, 4);
  const StageDistribution dist =
      pattern_logits(f->params.decoder, area.corner(0), std::vector<Point2>{e0, e1}, nullptr);
  CHECK(dist.probs(0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("pattern_logits: hand evaluation at d_pattern=2, p=2") {
  auto f = make_fixture(15, 2, 1, 2);
  const DecoderParams& dec = f->params.decoder;
  const Point2 corner{0.22, 0.91};
  const std::vector<Point2> eps{{0.1, 0.2}, {0.8, 0.7}};
  const StageDistribution dist = pattern_logits(dec, corner, eps, nullptr);

  auto matvec2 = [](const Eigen::MatrixXd& W, double x, double y, double* out) {
    out[0] = W(0, 0) * x + W(0, 1) * y;
    out[1] = W(1, 0) * x + W(1, 1) * y;
  };
  double q3e[2];
  matvec2(dec.pattern_query_embed, corner.x, corner.y, q3e);
  double k3[2][2], v3[2][2], s[2];
  for (int z = 0; z < 2; ++z) {
    matvec2(dec.pattern_key_embed, eps[z].x, eps[z].y, k3[z]);
    matvec2(dec.pattern_value_embed, eps[z].x, eps[z].y, v3[z]);
    s[z] = (q3e[0] * k3[z][0] + q3e[1] * k3[z][1]) / std::sqrt(2.0);
  }
  const double sm = std::max(s[0], s[1]);
  const double a0 = std::exp(s[0] - sm), a1 = std::exp(s[1] - sm);
  double hkc[2];
  for (int r = 0; r < 2; ++r) hkc[r] = (a0 * v3[0][r] + a1 * v3[1][r]) / (a0 + a1);
  double q3[2];
  q3[0] = dec.pattern_query(0, 0) * hkc[0] + dec.pattern_query(0, 1) * hkc[1];
  q3[1] = dec.pattern_query(1, 0) * hkc[0] + dec.pattern_query(1, 1) * hkc[1];
  double z[2];
  for (int zi = 0; zi < 2; ++zi) {
    double key[2];
    matvec2(dec.pattern_ptr_key, eps[zi].x, eps[zi].y, key);
    z[zi] = dec.clip * std::tanh((q3[0] * key[0] + q3[1] * key[1]) / std::sqrt(2.0));
  }
  const double zm = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - zm), e1 = std::exp(z[1] - zm);
  CHECK(dist.probs(0) == doctest::Approx(e0 / (e0 + e1)).epsilon(1e-10));
  CHECK(dist.probs(1) == doctest::Approx(e1 / (e0 + e1)).epsilon(1e-10));
}

TEST_CASE("select_action: greedy is deterministic and ties break to the lowest index") {
  auto f = make_fixture(16, 3, 1, 4);
  const SelectedAction a =
      select_action(f->params.decoder, f->inst, f->params.config.cost, f->state, f->emb,
                    f->proj, f->h_graph, 0, DecodeMode::Greedy, nullptr, nullptr);
  const SelectedAction b =
      select_action(f->params.decoder, f->inst, f->params.config.cost, f->state, f->emb,
                    f->proj, f->h_graph, 0, DecodeMode::Greedy, nullptr, nullptr);
  CHECK(a.action == b.action);
  CHECK(a.logp_area == b.logp_area);

  // All-zero decoder weights make every stage uniform; greedy picks index 0.
  PolicyParameters zero = zeros_like(f->params);
  const NodeProjections zproj = project_nodes(zero.decoder, f->nodes.h);
  const SelectedAction t =
      select_action(zero.decoder, f->inst, f->params.config.cost, f->state, f->emb, zproj,
                    f->h_graph, 0, DecodeMode::Greedy, nullptr, nullptr);
  CHECK(t.action.area == 0);
  CHECK(t.action.corner == 0);
  CHECK(t.action.pattern == 0);
}

TEST_CASE("select_action: joint log-probability is the sum of stage log-probs") {
  auto f = make_fixture(17, 4, 2, 8);
  Rng rng(3);
  const SelectedAction sel =
      select_action(f->params.decoder, f->inst, f->params.config.cost, f->state, f->emb,
                    f->proj, f->h_graph, 0, DecodeMode::Sample, &rng, nullptr);
  const double joint = std::exp(sel.logp());
  const double product =
      std::exp(sel.logp_area) * std::exp(sel.logp_corner) * std::exp(sel.logp_pattern);
  CHECK(joint == doctest::Approx(product).epsilon(1e-12));
  CHECK(sel.logp() == doctest::Approx(sel.logp_area + sel.logp_corner + sel.logp_pattern));
}

TEST_CASE("select_action: sampling frequencies match the joint distribution") {
  auto f = make_fixture(18, 2, 1, 8);
  const auto& dec = f->params.decoder;
  const auto& cost = f->params.config.cost;

  // Exact joint table p(j) * p(k|j) * p(z|j,k) from the stage distributions.
  AreaStageCache ac;
  const Eigen::VectorXd agent0 = f->agents.h.row(0).transpose();
  const Eigen::VectorXd ctx_hat =
      build_context(dec, f->nodes.h, f->h_graph, &agent0, &agent0, {}, -1, &ac);
  const Eigen::VectorXd ctx =
      refine_context(dec, ctx_hat, f->proj.key, f->proj.value, f->state.assigned, &ac);
  const StageDistribution d1 = area_logits(dec, ctx, f->proj.ptr, f->state.assigned, &ac);
  std::map<std::tuple<int, int, int>, double> joint;
  for (int j = 0; j < 2; ++j) {
    const StageDistribution d2 =
        corner_logits(dec, f->inst.agents[0], f->inst.areas[j].corners(), nullptr);
    for (int k = 0; k < 4; ++k) {
      std::vector<Point2> eps(cost.pattern_count);
      for (int z = 0; z < cost.pattern_count; ++z)
        eps[z] = scan_path(f->inst.areas[j], k, z, cost).end;
      const StageDistribution d3 =
          pattern_logits(dec, f->inst.areas[j].corner(k), eps, nullptr);
      for (int z = 0; z < cost.pattern_count; ++z)
        joint[{j, k, z}] = d1.probs(j) * d2.probs(k) * d3.probs(z);
    }
  }

  const int draws = 10000;
  Rng rng(2024);
  std::map<std::tuple<int, int, int>, int> counts;
  for (int i = 0; i < draws; ++i) {
    const SelectedAction sel = select_action(dec, f->inst, cost, f->state, f->emb, f->proj,
                                             f->h_graph, 0, DecodeMode::Sample, &rng, nullptr);
    counts[{sel.action.area, sel.action.corner, sel.action.pattern}]++;
  }
  for (const auto& [key, p] : joint) {
    const double freq = counts[key] / static_cast<double>(draws);
    const double sigma = std::sqrt(p * (1.0 - p) / draws);
    CHECK(std::abs(freq - p) <= 3.0 * sigma + 1e-9);
  }
}

TEST_CASE("select_action: exhausted state propagates the decoder error") {
  auto f = make_fixture(19, 2, 1, 4);
  f->state.assigned = {1, 1};
  f->state.remaining = 0;
  CHECK_THROWS_AS(select_action(f->params.decoder, f->inst, f->params.config.cost, f->state,
                                f->emb, f->proj, f->h_graph, 0, DecodeMode::Greedy, nullptr,
                                nullptr),
                  DecoderExhaustedError);
}

TEST_CASE("decoder gradients match finite differences for one full step") {
  auto f = make_fixture(20, 3, 1, 4);
  PolicyParameters& params = f->params;
  const ScanAction forced{1, 2, 1};

  auto loss = [&]() {
    const NodeProjections proj = project_nodes(params.decoder, f->nodes.h);
    const Eigen::VectorXd h_graph = f->nodes.h.colwise().mean().transpose();
    const SelectedAction sel =
        select_action(params.decoder, f->inst, params.config.cost, f->state, f->emb, proj,
                      h_graph, 0, DecodeMode::Greedy, nullptr, nullptr, &forced);
    return sel.logp();
  };

  PolicyParameters grads = zeros_like(params);
  {
    const NodeProjections proj = project_nodes(params.decoder, f->nodes.h);
    const Eigen::VectorXd h_graph = f->nodes.h.colwise().mean().transpose();
    StepCache cache;
    select_action(params.decoder, f->inst, params.config.cost, f->state, f->emb, proj, h_graph,
                  0, DecodeMode::Greedy, nullptr, &cache, &forced);
    const int n = 3;
    RowMat d_node_h = RowMat::Zero(n, 4);
    RowMat d_key = RowMat::Zero(n, 4), d_value = RowMat::Zero(n, 4), d_ptr = RowMat::Zero(n, 4);
    RowMat d_astart = RowMat::Zero(1, 4), d_acurr = RowMat::Zero(1, 4);
    decode_substep_backward(params.decoder, cache, 1.0, proj, n, grads.decoder, d_node_h, 0,
                            d_key, d_value, d_ptr, &d_astart, 0, &d_acurr, 0);
    // Projection weights: key/value/ptr columns were produced from node_h.
    grads.decoder.node_key += d_key.transpose() * f->nodes.h;
    grads.decoder.node_value += d_value.transpose() * f->nodes.h;
    grads.decoder.area_key += d_ptr.transpose() * f->nodes.h;
  }

  const auto res =
      sweepnet::testing::finite_diff_check(params, grads, loss, 1e-6, "decoder.");
  INFO("worst: " << res.worst_block << " a=" << res.analytic << " n=" << res.numeric);
  CHECK(res.max_rel_err < 1e-4);
}
