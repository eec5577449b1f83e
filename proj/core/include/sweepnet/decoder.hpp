#pragma once

#include <array>
#include <optional>

#include "sweepnet/encoder.hpp"
#include "sweepnet/solution.hpp"

namespace sweepnet {

// Parameters of the three chained decoder networks: area selection (masked
// multi-head attention + clipped-tanh pointer), start-corner selection and
// scan-pattern selection (single-head attention over raw coordinates).
struct DecoderParams {
  int d = 0;
  int heads = 8;
  int d_corner = 0;   // hidden width of the corner network
  int d_pattern = 0;  // hidden width of the pattern network
  double clip = 10.0;

  // Area network.
  Eigen::MatrixXd context_fuse;              // d x 6d
  Eigen::MatrixXd ctx_query;                 // d x d, query projection of the fused context
  Eigen::MatrixXd node_key, node_value;      // d x d, attention projections of node embeddings
  Eigen::MatrixXd area_query, area_key;      // d x d, pointer projections
  Eigen::VectorXd ph_first, ph_last, ph_current;  // learned placeholders for empty history

  // Corner network.
  Eigen::MatrixXd pos_embed;                 // d_corner x 2
  Eigen::MatrixXd corner_embed;              // d_corner x 2
  Eigen::MatrixXd corner_key, corner_value;  // d_corner x d_corner
  Eigen::MatrixXd corner_query;              // d_corner x d_corner
  Eigen::MatrixXd corner_ptr_key;            // d_corner x 2

  // Pattern network.
  Eigen::MatrixXd pattern_query_embed;                 // d_pattern x 2
  Eigen::MatrixXd pattern_key_embed, pattern_value_embed;  // d_pattern x 2
  Eigen::MatrixXd pattern_query;                       // d_pattern x d_pattern
  Eigen::MatrixXd pattern_ptr_key;                     // d_pattern x 2
};

DecoderParams make_decoder_params(int d, int heads, int d_corner, int d_pattern, double clip,
                                  Rng& rng);
DecoderParams zeros_like(const DecoderParams& p);

// Probabilities over the candidates of one stage. Masked entries are exactly
// zero (log-prob -inf).
struct StageDistribution {
  Eigen::VectorXd probs;
  Eigen::VectorXd logps;
  Eigen::VectorXd logits;  // clipped-tanh pointer logits; -inf at masked entries
};

enum class DecodeMode { Greedy, Sample };

// Mutable per-rollout assignment state.
struct DecodingState {
  std::vector<char> assigned;  // per area
  int remaining = 0;
  std::vector<std::vector<ScanAction>> tours;  // per agent
  std::vector<Point2> positions;               // per agent, current
  std::vector<int> current_area;               // per agent, -1 = none yet
  double inc_cost = 0.0;

  static DecodingState init(const Instance& inst);
};

// Read-only embedding inputs for one sub-step.
struct StepEmbeddings {
  const RowMat* node_h = nullptr;          // n x d
  const RowMat* agents_start = nullptr;    // m x d, encoding of start positions
  const RowMat* agents_current = nullptr;  // m x d, encoding of current positions
  bool agents_encoder = true;              // false: agent slots are zero vectors
};

// Projections of the node embeddings reused across sub-steps of one rollout.
struct NodeProjections {
  RowMat key, value, ptr;  // each n x d
};
NodeProjections project_nodes(const DecoderParams& dec, const RowMat& node_h);

// --- Forward caches (retained for the analytic backward pass) ---

struct AreaStageCache {
  Eigen::VectorXd concat, ctx_hat, q1, ctx_ref, ptr_q;
  std::vector<int> avail;   // unassigned area indices
  Eigen::MatrixXd attn;     // heads x avail
  Eigen::VectorXd u, p;     // pointer pre-tanh values and probs over avail
  int chosen = -1;          // index into avail
  int slot_first = -1, slot_last = -1, slot_cur = -1;  // -1 = placeholder
};
struct CornerStageCache {
  Point2 position;
  std::array<Point2, 4> corners{};
  Eigen::VectorXd h_st, h_stc, q2;
  Eigen::MatrixXd ec, k2, v2;  // d_corner x 4
  Eigen::Vector4d attn, u, p;
  int chosen = -1;
};
struct PatternStageCache {
  Point2 corner;
  std::vector<Point2> endpoints;
  Eigen::VectorXd q3e, h_kc, q3;
  Eigen::MatrixXd k3, v3;  // d_pattern x p
  Eigen::VectorXd attn, u, p;
  int chosen = -1;
};
struct StepCache {
  int agent = -1;
  int round = 0;  // index of the agents-encoder pass that produced slot 5
  AreaStageCache area;
  CornerStageCache corner;
  PatternStageCache pattern;
};

// --- Stage operations ---

// Fused context: W_F [h_G, h_first, h_last, h_agent_start, h_agent_current,
// h_current_area], with learned placeholders for slots that have no history
// yet. Null agent vectors (encoder disabled) contribute zeros.
Eigen::VectorXd build_context(const DecoderParams& dec, const RowMat& node_h,
                              const Eigen::VectorXd& h_graph,
                              const Eigen::VectorXd* agent_start,
                              const Eigen::VectorXd* agent_current,
                              std::span<const ScanAction> tour, int current_area,
                              AreaStageCache* cache);

// Multi-head attention refinement of the context over unassigned areas.
Eigen::VectorXd refine_context(const DecoderParams& dec, const Eigen::VectorXd& ctx_hat,
                               const RowMat& node_key, const RowMat& node_value,
                               std::span<const char> assigned, AreaStageCache* cache);
// Convenience overload projecting raw node embeddings.
Eigen::VectorXd refine_context(const DecoderParams& dec, const Eigen::VectorXd& ctx_hat,
                               const RowMat& node_h, std::span<const char> assigned);

// Clipped-tanh pointer logits over unassigned areas; assigned areas get
// probability exactly zero.
StageDistribution area_logits(const DecoderParams& dec, const Eigen::VectorXd& ctx_refined,
                              const RowMat& node_ptr, std::span<const char> assigned,
                              AreaStageCache* cache);

StageDistribution corner_logits(const DecoderParams& dec, const Point2& position,
                                const std::array<Point2, 4>& corners, CornerStageCache* cache);

StageDistribution pattern_logits(const DecoderParams& dec, const Point2& corner,
                                 std::span<const Point2> endpoints, PatternStageCache* cache);

struct SelectedAction {
  ScanAction action;
  double logp_area = 0.0, logp_corner = 0.0, logp_pattern = 0.0;
  double logp() const { return logp_area + logp_corner + logp_pattern; }
};

// Runs the three stages for one agent. `forced` replays a fixed action
// (computing its log-probabilities); otherwise greedy takes the argmax at
// every stage (ties to the lowest index) and sampling draws from `rng`.
SelectedAction select_action(const DecoderParams& dec, const Instance& inst,
                             const CostConfig& cost, const DecodingState& state,
                             const StepEmbeddings& emb, const NodeProjections& proj,
                             const Eigen::VectorXd& h_graph, int agent, DecodeMode mode,
                             Rng* rng, StepCache* cache, const ScanAction* forced = nullptr);

// Appends the action to the agent's tour and advances its position to the
// scan end point; updates the incremental cost.
void apply_action(DecodingState& state, const Instance& inst, const CostConfig& cost, int agent,
                  const ScanAction& action);

// --- Backward ---

// Accumulates d(loss)/d(params) and upstream gradients for one sub-step given
// weight w on the step's total log-probability. Row offsets locate this
// instance inside batched matrices.
void decode_substep_backward(const DecoderParams& dec, const StepCache& sc, double w,
                             const NodeProjections& proj, int n,
                             DecoderParams& dgrad, RowMat& d_node_h, int node_row0,
                             RowMat& d_key, RowMat& d_value, RowMat& d_ptr,
                             RowMat* d_agents_start, int start_row0, RowMat* d_agents_current,
                             int current_row0);

}  // namespace sweepnet
