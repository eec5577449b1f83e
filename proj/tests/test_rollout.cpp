#include <doctest.h>

#include "sweepnet/rollout.hpp"
#include "testutil.hpp"

using namespace sweepnet;

namespace {

PolicyParameters small_params(uint64_t seed) {
  ModelConfig cfg;
  cfg.d = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.d_corner = 8;
  cfg.d_pattern = 8;
  return init_parameters(cfg, seed);
}

void check_feasible_rollout(const Instance& inst, const Solution& sol) {
  CHECK_NOTHROW(check_feasible(inst, sol));
}

}  // namespace

TEST_CASE("rollout: n == m gives one round with one area per agent") {
  const Instance inst = generate_instance(50, 4, 4);
  const PolicyParameters params = small_params(1);
  Rng rng(0);
  const auto [sol, trace] = rollout(inst, params, DecodeMode::Greedy, rng);
  for (const auto& tour : sol.tours) CHECK(tour.size() == 1);
  CHECK(trace.steps.size() == 4);
  check_feasible_rollout(inst, sol);
}

TEST_CASE("rollout: 40 areas over 5 agents gives 8 rounds of 8 areas each") {
  const Instance inst = generate_instance(7, 40, 5);
  const PolicyParameters params = small_params(2);
  Rng rng(0);
  const auto [sol, trace] = rollout(inst, params, DecodeMode::Greedy, rng);
  for (const auto& tour : sol.tours) CHECK(tour.size() == 8);
  check_feasible_rollout(inst, sol);
  // Round-robin order: step t belongs to agent t mod 5.
  for (size_t t = 0; t < trace.steps.size(); ++t)
    CHECK(trace.steps[t].agent == static_cast<int>(t % 5));
}

TEST_CASE("rollout: single agent sequences all areas") {
  const Instance inst = generate_instance(51, 3, 1);
  const PolicyParameters params = small_params(3);
  Rng rng(1);
  const auto [sol, trace] = rollout(inst, params, DecodeMode::Sample, rng);
  CHECK(sol.tours[0].size() == 3);
  check_feasible_rollout(inst, sol);
}

TEST_CASE("rollout: more agents than areas leaves trailing agents idle") {
  const Instance inst = generate_instance(52, 2, 5);
  const PolicyParameters params = small_params(4);
  Rng rng(2);
  const auto [sol, trace] = rollout(inst, params, DecodeMode::Greedy, rng);
  CHECK(sol.tours[0].size() == 1);
  CHECK(sol.tours[1].size() == 1);
  for (int a = 2; a < 5; ++a) CHECK(sol.tours[a].empty());
  check_feasible_rollout(inst, sol);
}

TEST_CASE("rollout: uneven division keeps round-robin order") {
  const Instance inst = generate_instance(53, 7, 3);
  const PolicyParameters params = small_params(5);
  Rng rng(3);
  const auto [sol, trace] = rollout(inst, params, DecodeMode::Sample, rng);
  // floor(7/3)=2, ceil=3: agents 0 gets 3, agents 1..2 get 2.
  CHECK(sol.tours[0].size() == 3);
  CHECK(sol.tours[1].size() == 2);
  CHECK(sol.tours[2].size() == 2);
  for (size_t t = 0; t < trace.steps.size(); ++t)
    CHECK(trace.steps[t].agent == static_cast<int>(t % 3));
  check_feasible_rollout(inst, sol);
}

TEST_CASE("rollout: feasibility holds over 1000 random rollouts") {
  int trial = 0;
  for (uint64_t seed = 0; seed < 250; ++seed) {
    for (auto [n, m] : std::initializer_list<std::pair<int, int>>{
             {3, 1}, {6, 2}, {12, 3}, {5, 4}}) {
      const Instance inst = generate_instance(seed * 7 + n, n, m);
      const PolicyParameters params = small_params(seed);
      Rng rng(seed);
      const auto [sol, trace] =
          rollout(inst, params, seed % 2 ? DecodeMode::Sample : DecodeMode::Greedy, rng);
      check_feasible_rollout(inst, sol);
      ++trial;
    }
  }
  CHECK(trial == 1000);
}

TEST_CASE("rollout: trace log-prob sums match and costs are recomputed") {
  const Instance inst = generate_instance(54, 6, 2);
  const PolicyParameters params = small_params(6);
  Rng rng(4);
  const auto [sol, trace] = rollout(inst, params, DecodeMode::Sample, rng);
  CHECK(sol.total_cost ==
        doctest::Approx(cost_of_solution(inst, sol, params.config.cost)).epsilon(1e-12));
  double sum = 0.0;
  for (const auto& s : trace.steps) sum += s.logp_area + s.logp_corner + s.logp_pattern;
  CHECK(trace.total_logp() == doctest::Approx(sum).epsilon(1e-12));
  CHECK(trace.total_cost == sol.total_cost);
}

TEST_CASE("batch_rollout: batch of one equals a single rollout") {
  const Instance inst = generate_instance(55, 6, 2);
  const PolicyParameters params = small_params(7);
  const uint64_t seed = 99;
  auto batch = batch_rollout({&inst, 1}, params, DecodeMode::Sample, seed);
  Rng rng(derive_seed(seed, 0));
  const auto [sol, trace] = rollout(inst, params, DecodeMode::Sample, rng);
  CHECK(batch[0].first.tours == sol.tours);
  CHECK(batch[0].first.total_cost == sol.total_cost);
}

TEST_CASE("batch_rollout: identical seeds give identical traces") {
  std::vector<Instance> insts;
  for (uint64_t s = 0; s < 6; ++s) insts.push_back(generate_instance(s, 6, 2));
  const PolicyParameters params = small_params(8);
  auto a = batch_rollout(insts, params, DecodeMode::Sample, 7);
  auto b = batch_rollout(insts, params, DecodeMode::Sample, 7);
  for (size_t i = 0; i < insts.size(); ++i) {
    CHECK(a[i].first.tours == b[i].first.tours);
    CHECK(a[i].first.total_cost == b[i].first.total_cost);
  }
}

TEST_CASE("batch_rollout: eval results are independent of the batch partition") {
  std::vector<Instance> insts;
  for (uint64_t s = 0; s < 16; ++s) insts.push_back(generate_instance(100 + s, 8, 2));
  const PolicyParameters params = small_params(9);
  auto whole = batch_rollout(insts, params, DecodeMode::Greedy, 0, BnMode::Eval);
  auto first = batch_rollout(std::span(insts).subspan(0, 8), params, DecodeMode::Greedy, 0,
                             BnMode::Eval);
  auto second = batch_rollout(std::span(insts).subspan(8, 8), params, DecodeMode::Greedy, 0,
                              BnMode::Eval);
  for (int i = 0; i < 8; ++i) {
    CHECK(std::abs(whole[i].first.total_cost - first[i].first.total_cost) < 1e-9);
    CHECK(std::abs(whole[8 + i].first.total_cost - second[i].first.total_cost) < 1e-9);
  }
}

TEST_CASE("batch_rollout: training mode rejects mixed sizes") {
  std::vector<Instance> insts{generate_instance(1, 6, 2), generate_instance(2, 8, 2)};
  const PolicyParameters params = small_params(10);
  CHECK_THROWS_AS(batch_rollout(insts, params, DecodeMode::Sample, 0, BnMode::Train),
                  ValidationError);
}

TEST_CASE("rollout: agents encoder disabled still yields feasible tours") {
  ModelConfig cfg;
  cfg.d = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.d_corner = 8;
  cfg.d_pattern = 8;
  cfg.agents_encoder = false;
  const PolicyParameters params = init_parameters(cfg, 77);
  const Instance inst = generate_instance(56, 6, 3);
  Rng rng(5);
  const auto [sol, trace] = rollout(inst, params, DecodeMode::Sample, rng);
  check_feasible_rollout(inst, sol);
}

TEST_CASE("rollout: per-substep re-encoding is available and changes nothing structural") {
  const Instance inst = generate_instance(57, 6, 2);
  const PolicyParameters params = small_params(11);
  Rng rng1(6), rng2(6);
  const auto [sol_round, t1] = rollout(inst, params, DecodeMode::Greedy, rng1, {});
  const auto [sol_step, t2] =
      rollout(inst, params, DecodeMode::Greedy, rng2, {.reencode_each_substep = true});
  check_feasible_rollout(inst, sol_round);
  check_feasible_rollout(inst, sol_step);
  // First-round first step sees identical embeddings either way.
  CHECK(t1.steps[0].action == t2.steps[0].action);
}
