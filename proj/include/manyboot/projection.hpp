#pragma once

#include <Eigen/Dense>
#include <vector>

#include "manyboot/errors.hpp"

namespace manyboot {

// A regression problem: y on X (regressors of interest) with controls W
// partialled out.  W may be rank-deficient; redundant columns are dropped.
struct Dataset {
  Eigen::MatrixXd W;  // n x q0 controls (including any intercept)
  Eigen::MatrixXd X;  // n x d regressors of interest
  Eigen::VectorXd y;  // n outcomes

  long n() const { return y.size(); }
  long d() const { return X.cols(); }
};

struct ProjectionOptions {
  double rank_rtol = 1e-10;      // relative pivot tolerance for effective rank
  double leverage_floor = 1e-8;  // minimum admissible annihilator leverage
  long dense_threshold = 512;    // max n for materializing the annihilator
  bool enforce_leverage = true;  // throw LeverageDegenerate below the floor
};

// Orthonormal basis of the control column space plus leverages of the
// annihilator M = I - Q Q^T.  M itself is never materialized here; it is
// applied implicitly as v -> v - Q (Q^T v).
struct ProjectionContext {
  long n = 0;
  long q = 0;                      // effective rank of W
  Eigen::MatrixXd Q;               // n x q, orthonormal columns spanning col(W)
  Eigen::VectorXd leverage;        // m_i = 1 - ||Q row i||^2, clamped at 0
  double min_leverage = 1.0;
  std::vector<int> kept_columns;   // original W columns retained (pivot order)
  std::vector<int> dropped_columns;  // redundant W columns dropped
  ProjectionOptions opts;
};

// Column-pivoted Householder QR of W; effective rank via relative pivot
// tolerance.  Throws LeverageDegenerate (with row indices) if any leverage
// falls below the floor and enforcement is on.
ProjectionContext build_projection(const Eigen::MatrixXd& W,
                                   const ProjectionOptions& opts = {});

// v -> v - Q (Q^T v), column-wise for matrices.
Eigen::MatrixXd apply_annihilator(const ProjectionContext& ctx,
                                  const Eigen::MatrixXd& V);
Eigen::VectorXd apply_annihilator(const ProjectionContext& ctx,
                                  const Eigen::VectorXd& v);

// Dense annihilator I - Q Q^T.  Only permitted for n <= dense_threshold;
// larger problems must use the implicit form (throws InputError otherwise).
Eigen::MatrixXd annihilator_matrix(const ProjectionContext& ctx);

// Partialled regressors vhat = M X and their Gram matrix S = vhat^T vhat.
struct PartialledRegressors {
  Eigen::MatrixXd vhat;   // n x d
  Eigen::MatrixXd gram;   // d x d, symmetric positive definite
  Eigen::MatrixXd gram_inverse;  // d x d
  double gram_cond = 1.0;        // eigenvalue ratio of gram

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return gram_inverse * b; }
};

// Throws SingularGram when the Gram condition estimate exceeds the limit
// (regressors numerically collinear with the controls or each other).
PartialledRegressors partial_out(const ProjectionContext& ctx,
                                 const Eigen::MatrixXd& X,
                                 double cond_limit = 1e12);

// Minimum-norm least-squares coefficient of W in a regression of
// (y - X beta0) on W.  Dropped/redundant columns receive the minimum-norm
// split (via complete orthogonal decomposition).
Eigen::VectorXd restricted_gamma(const Dataset& data,
                                 const Eigen::VectorXd& beta0);

// OLS of y on (X, W) subject to c^T beta = lambda, via null-space
// reparametrization.  Returns the constrained beta (length d).
Eigen::VectorXd constrained_ols(const Dataset& data,
                                const ProjectionContext& ctx,
                                const PartialledRegressors& pr,
                                const Eigen::VectorXd& c, double lambda);

}  // namespace manyboot
