#pragma once

#include <Eigen/Dense>
#include <string>

#include "manyboot/projection.hpp"

namespace manyboot {

enum class Method { HC0, HCK, HCA, WildG, WildR };

std::string method_name(Method m);
bool parse_method(const std::string& token, Method* out);
bool method_is_bootstrap(Method m);

// OLS fit after partialling out the controls.
struct FitResult {
  Eigen::VectorXd beta;  // d
  Eigen::VectorXd uhat;  // n residuals
  Eigen::VectorXd uacc;  // n leave-one-out scaled residuals uhat_i / m_i
};

FitResult fit_ols(const Dataset& data, const ProjectionContext& ctx,
                  const PartialledRegressors& pr);
// Convenience form; builds the projection internally.
FitResult fit_ols(const Dataset& data);

// Sandwich variance of beta-hat: S^{-1} (sum_i vhat_i vhat_i^T uhat_i^2) S^{-1}.
Eigen::MatrixXd variance_hc0(const PartialledRegressors& pr, const FitResult& fit);

// Variance with the unbiased per-observation variance reconstruction:
// solve K sigma = uhat^2 where K_ij = M_ij^2, then sandwich with sigma.
// K is frequently singular (structurally so for large q/n); availability is
// gated on the eigenvalue ratio, with fallback to HC0.
struct HckResult {
  Eigen::MatrixXd omega;    // the HCK value, or the HC0 value when fellback
  bool available = true;    // false when the gate or positivity check failed
  bool fellback = false;    // omega holds the HC0 fallback value
  std::string reason;       // why unavailable: "singular", "nonpositive", "size"
};

HckResult variance_hck(const ProjectionContext& ctx, const PartialledRegressors& pr,
                       const FitResult& fit, long max_dense_n = 2048);

// Cross-fit variance: S^{-1} (sum_i vhat_i vhat_i^T y_i uacc_i) S^{-1}.
// The meat is unbiased but not positive semidefinite by construction; callers
// testing a single coordinate take the magnitude of the quadratic form (see
// hca_quadform) and flag the event.
Eigen::MatrixXd variance_hca(const PartialledRegressors& pr, const FitResult& fit,
                             const Eigen::VectorXd& y);

// |c^T omega c| with a flag when the raw quadratic form was negative.
double hca_quadform(const Eigen::MatrixXd& omega, const Eigen::VectorXd& c,
                    bool* was_negative);

struct TestResult {
  double estimate = 0.0;   // beta_hat for the tested coordinate
  double se = 0.0;
  double t = 0.0;
  double p = 0.0;          // two-sided normal p-value
  bool reject = false;     // p < level
  bool clamped = false;    // HCA quadratic form was negative (magnitude used)
  bool hck_fellback = false;
};

// Two-sided test of beta_j = beta0 using normal critical values.
TestResult t_test(const Dataset& data, const ProjectionContext& ctx,
                  const PartialledRegressors& pr, const FitResult& fit,
                  Method method, double beta0, int coord = 0,
                  double level = 0.05);

// Two-sided standard normal p-value.
double normal_p_value(double t);

}  // namespace manyboot
