#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sweepnet/policy.hpp"

namespace sweepnet::testing {

// Central finite differences over every trainable block. `loss` must be a
// pure function of the parameters (BN running stats untouched). Returns the
// worst relative error across all coordinates, where the denominator is
// floored at 1e-5 * max(1, largest gradient magnitude) to absorb the FD
// noise floor on exactly-zero gradients.
struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_block;
  double analytic = 0.0, numeric = 0.0;
};

inline GradCheckResult finite_diff_check(PolicyParameters& params, PolicyParameters& grads,
                                         const std::function<double()>& loss,
                                         double step = 1e-6,
                                         const std::string& block_prefix = "") {
  auto pblocks = trainable_blocks(params);
  auto gblocks = trainable_blocks(grads);
  if (!block_prefix.empty()) {
    std::vector<BlockRef> fp, fg;
    for (size_t i = 0; i < pblocks.size(); ++i) {
      if (pblocks[i].name.rfind(block_prefix, 0) == 0) {
        fp.push_back(pblocks[i]);
        fg.push_back(gblocks[i]);
      }
    }
    pblocks = fp;
    gblocks = fg;
  }
  double max_abs = 0.0;
  for (const auto& g : gblocks)
    for (Eigen::Index i = 0; i < g.size(); ++i) max_abs = std::max(max_abs, std::abs(g.data[i]));
  const double floor = 1e-5 * std::max(1.0, max_abs);

  GradCheckResult res;
  for (size_t bi = 0; bi < pblocks.size(); ++bi) {
    for (Eigen::Index i = 0; i < pblocks[bi].size(); ++i) {
      double& w = pblocks[bi].data[i];
      const double saved = w;
      w = saved + step;
      const double up = loss();
      w = saved - step;
      const double down = loss();
      w = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = gblocks[bi].data[i];
      const double rel =
          std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_block = pblocks[bi].name + "[" + std::to_string(i) + "]";
        res.analytic = analytic;
        res.numeric = numeric;
      }
    }
  }
  return res;
}

inline Instance make_instance(uint64_t seed, int n, int m) {
  return generate_instance(seed, n, m);
}

}  // namespace sweepnet::testing
