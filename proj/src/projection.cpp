#include "manyboot/projection.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace manyboot {

ProjectionContext build_projection(const Eigen::MatrixXd& W,
                                   const ProjectionOptions& opts) {
  ProjectionContext ctx;
  ctx.n = W.rows();
  ctx.opts = opts;

  if (W.cols() == 0) {
    // No controls: the annihilator is the identity.
    ctx.q = 0;
    ctx.Q.resize(ctx.n, 0);
    ctx.leverage = Eigen::VectorXd::Ones(ctx.n);
    ctx.min_leverage = 1.0;
    return ctx;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W);
  qr.setThreshold(opts.rank_rtol);
  long rank = qr.rank();
  ctx.q = rank;

  const auto& perm = qr.colsPermutation().indices();
  for (long j = 0; j < W.cols(); ++j) {
    if (j < rank) {
      ctx.kept_columns.push_back(perm[j]);
    } else {
      ctx.dropped_columns.push_back(perm[j]);
    }
  }
  std::sort(ctx.dropped_columns.begin(), ctx.dropped_columns.end());

  // Thin orthonormal basis: the first `rank` columns of the pivoted QR's Q
  // span col(W).
  ctx.Q = qr.householderQ() * Eigen::MatrixXd::Identity(ctx.n, rank);

  ctx.leverage.resize(ctx.n);
  for (long i = 0; i < ctx.n; ++i) {
    double h = ctx.Q.row(i).squaredNorm();
    ctx.leverage[i] = std::max(0.0, 1.0 - h);
  }
  ctx.min_leverage = ctx.n ? ctx.leverage.minCoeff() : 1.0;

  if (opts.enforce_leverage && ctx.min_leverage < opts.leverage_floor) {
    std::vector<int> bad;
    for (long i = 0; i < ctx.n; ++i) {
      if (ctx.leverage[i] < opts.leverage_floor) bad.push_back(int(i));
    }
    throw LeverageDegenerate(bad, ctx.min_leverage);
  }
  return ctx;
}

Eigen::MatrixXd apply_annihilator(const ProjectionContext& ctx,
                                  const Eigen::MatrixXd& V) {
  if (ctx.q == 0) return V;
  return V - ctx.Q * (ctx.Q.transpose() * V);
}

Eigen::VectorXd apply_annihilator(const ProjectionContext& ctx,
                                  const Eigen::VectorXd& v) {
  if (ctx.q == 0) return v;
  return v - ctx.Q * (ctx.Q.transpose() * v);
}

Eigen::MatrixXd annihilator_matrix(const ProjectionContext& ctx) {
  if (ctx.n > ctx.opts.dense_threshold) {
    throw InputError("dense annihilator requested for n = " +
                     std::to_string(ctx.n) + " > threshold " +
                     std::to_string(ctx.opts.dense_threshold));
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(ctx.n, ctx.n);
  if (ctx.q > 0) M -= ctx.Q * ctx.Q.transpose();
  return M;
}

PartialledRegressors partial_out(const ProjectionContext& ctx,
                                 const Eigen::MatrixXd& X, double cond_limit) {
  PartialledRegressors pr;
  pr.vhat = apply_annihilator(ctx, X);
  pr.gram = pr.vhat.transpose() * pr.vhat;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pr.gram);
  double lo = es.eigenvalues().minCoeff();
  double hi = es.eigenvalues().maxCoeff();
  // Gauge the smallest partialled eigenvalue against the raw regressor scale
  // too: a regressor absorbed by the controls leaves a tiny but positive
  // gram whose own condition number looks perfect (always 1 when d = 1).
  double x_scale = 0.0;
  for (long j = 0; j < X.cols(); ++j) {
    x_scale = std::max(x_scale, X.col(j).squaredNorm());
  }
  double top = std::max(hi, x_scale);
  pr.gram_cond = (lo > 0.0) ? top / lo : std::numeric_limits<double>::infinity();
  if (!(lo > 0.0) || pr.gram_cond > cond_limit) {
    throw SingularGram(pr.gram_cond);
  }
  pr.gram_inverse = es.eigenvectors() *
                    es.eigenvalues().cwiseInverse().asDiagonal() *
                    es.eigenvectors().transpose();
  return pr;
}

Eigen::VectorXd restricted_gamma(const Dataset& data,
                                 const Eigen::VectorXd& beta0) {
  if (beta0.size() != data.d()) {
    throw InputError("restricted_gamma: beta0 has length " +
                     std::to_string(beta0.size()) + ", expected " +
                     std::to_string(data.d()));
  }
  Eigen::VectorXd r = data.y - data.X * beta0;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(data.W);
  return cod.solve(r);
}

Eigen::VectorXd constrained_ols(const Dataset& data,
                                const ProjectionContext& ctx,
                                const PartialledRegressors& pr,
                                const Eigen::VectorXd& c, double lambda) {
  (void)ctx;
  long d = data.d();
  if (c.size() != d) {
    throw InputError("constraint vector length mismatch");
  }
  double cnorm2 = c.squaredNorm();
  if (!(cnorm2 > 0.0)) {
    throw InputError("constraint vector must be nonzero");
  }
  // Particular solution of c^T beta = lambda plus a basis of the null space.
  Eigen::VectorXd beta_p = (lambda / cnorm2) * c;
  if (d == 1) return beta_p;

  Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qr(c);
  Eigen::MatrixXd Qc = qr.matrixQ();          // d x d orthogonal, col 0 ~ c
  Eigen::MatrixXd N = Qc.rightCols(d - 1);    // orthonormal null-space basis

  // Minimize || M(y - X beta_p) - vhat N theta ||^2.
  Eigen::VectorXd target = pr.vhat.transpose() * (data.y - data.X * beta_p);
  Eigen::MatrixXd A = N.transpose() * pr.gram * N;
  Eigen::VectorXd theta = A.ldlt().solve(N.transpose() * target);
  return beta_p + N * theta;
}

}  // namespace manyboot
