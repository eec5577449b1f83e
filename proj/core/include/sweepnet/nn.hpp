#pragma once

#include <Eigen/Dense>

#include "sweepnet/common.hpp"

namespace sweepnet {

// Feature matrices are row-major: one row per entity, one column per channel.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class BnMode { Train, Eval };

// y = x W^T + b, rows are independent samples.
struct Linear {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out

  static Linear zeros(int out, int in);

  RowMat forward(const RowMat& x) const;
  // Accumulates dW/db and returns dx.
  RowMat backward(const RowMat& x, const RowMat& dy, Linear& grad) const;
};

// Batch normalization over the row axis (each column is a channel). Training
// mode normalizes with batch statistics and optionally updates the running
// averages (momentum 0.9); eval mode uses the running averages.
struct BatchNorm {
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.9;

  Eigen::VectorXd gamma, beta;
  Eigen::VectorXd running_mean, running_var;

  static BatchNorm identity(int d);

  struct Cache {
    RowMat xhat;
    Eigen::VectorXd inv_std;
  };

  RowMat forward(const RowMat& x, BnMode mode, Cache* cache, bool update_running);
  // Training-mode backward. Accumulates dgamma/dbeta and returns dx.
  RowMat backward(const Cache& cache, const RowMat& dy, BatchNorm& grad) const;
};

inline void fill_uniform(Eigen::MatrixXd& m, Rng& rng, double range) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-range, range);
}
inline void fill_uniform(Eigen::VectorXd& v, Rng& rng, double range) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-range, range);
}

}  // namespace sweepnet
