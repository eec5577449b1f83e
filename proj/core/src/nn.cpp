#include "sweepnet/nn.hpp"

namespace sweepnet {

Linear Linear::zeros(int out, int in) {
  Linear l;
  l.W = Eigen::MatrixXd::Zero(out, in);
  l.b = Eigen::VectorXd::Zero(out);
  return l;
}

RowMat Linear::forward(const RowMat& x) const {
  RowMat y = x * W.transpose();
  y.rowwise() += b.transpose();
  return y;
}

RowMat Linear::backward(const RowMat& x, const RowMat& dy, Linear& grad) const {
  grad.W.noalias() += dy.transpose() * x;
  grad.b.noalias() += dy.colwise().sum().transpose();
  return dy * W;
}

BatchNorm BatchNorm::identity(int d) {
  BatchNorm bn;
  bn.gamma = Eigen::VectorXd::Ones(d);
  bn.beta = Eigen::VectorXd::Zero(d);
  bn.running_mean = Eigen::VectorXd::Zero(d);
  bn.running_var = Eigen::VectorXd::Ones(d);
  return bn;
}

RowMat BatchNorm::forward(const RowMat& x, BnMode mode, Cache* cache, bool update_running) {
  if (mode == BnMode::Eval) {
    RowMat y = x;
    const Eigen::ArrayXd scale = gamma.array() / (running_var.array() + kEps).sqrt();
    y.array().rowwise() -= running_mean.transpose().array();
    y.array().rowwise() *= scale.transpose();
    y.array().rowwise() += beta.transpose().array();
    return y;
  }
  const Eigen::VectorXd mean = x.colwise().mean();
  RowMat centered = x;
  centered.rowwise() -= mean.transpose();
  const Eigen::VectorXd var = centered.array().square().colwise().mean();
  const Eigen::ArrayXd inv_std = 1.0 / (var.array() + kEps).sqrt();

  RowMat xhat = centered;
  xhat.array().rowwise() *= inv_std.transpose();

  if (update_running) {
    running_mean = kMomentum * running_mean + (1.0 - kMomentum) * mean;
    running_var = kMomentum * running_var + (1.0 - kMomentum) * var;
  }

  RowMat y = xhat;
  y.array().rowwise() *= gamma.transpose().array();
  y.array().rowwise() += beta.transpose().array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std.matrix();
  }
  return y;
}

RowMat BatchNorm::backward(const Cache& cache, const RowMat& dy, BatchNorm& grad) const {
  grad.beta.noalias() += dy.colwise().sum().transpose();
  grad.gamma.noalias() += (dy.array() * cache.xhat.array()).colwise().sum().matrix().transpose();

  // dx = gamma * inv_std * (dy - mean(dy) - xhat * mean(dy .* xhat))
  const Eigen::ArrayXd mean_dy = dy.colwise().mean().transpose();
  const Eigen::ArrayXd mean_dy_xhat =
      (dy.array() * cache.xhat.array()).colwise().mean().transpose();
  RowMat dx = dy;
  dx.array().rowwise() -= mean_dy.transpose();
  dx.array() -= cache.xhat.array().rowwise() * mean_dy_xhat.transpose();
  dx.array().rowwise() *= (gamma.array() * cache.inv_std.array()).transpose();
  return dx;
}

}  // namespace sweepnet
