#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "manyboot/estimators.hpp"
#include "manyboot/projection.hpp"
#include "manyboot/rng.hpp"

namespace manyboot {

enum class WeightScheme { Gaussian, Rademacher, Mammen };
enum class BootstrapMode { PercentileT, Percentile, Score };

std::string weight_scheme_name(WeightScheme w);
bool parse_weight_scheme(const std::string& token, WeightScheme* out);
std::string bootstrap_mode_name(BootstrapMode m);
bool parse_bootstrap_mode(const std::string& token, BootstrapMode* out);

struct BootstrapConfig {
  int B = 199;
  WeightScheme weights = WeightScheme::Gaussian;
  BootstrapMode mode = BootstrapMode::PercentileT;
  double level = 0.05;
  std::uint64_t seed = 0;   // stream key for the weight draws
  bool keep_draws = false;  // record per-replication draws in the outcome
  // Test hook: when non-null, column b supplies the weights for replication b
  // (n x B) and no weights are drawn.  Lets tests inject degenerate schemes
  // and share draws with reference pipelines.
  const Eigen::MatrixXd* forced_weights = nullptr;
};

// Scale adjustment for the bootstrap residuals at the null.
struct AdjustmentFactor {
  double sigma_acute = 0.0;  // cross-fit meat at the null: sum vhat^2 y uacc(b0)
  double sigma_hat = 0.0;    // plug-in meat at the null: sum vhat^2 utilde^2
  double a_n = 1.0;          // sqrt(max(sigma_acute, 1/n) / sigma_hat)
  bool guard_active = false; // sigma_acute < 1/n (floor engaged)
};

struct BootstrapOutcome {
  double p_value = 1.0;
  double stat_obs = 0.0;       // plug-in |t| at the null (percentile-t) or
                               // sqrt(n)|beta-hat - b0| (percentile/score)
  bool reject = false;         // p_value < level
  AdjustmentFactor adjustment;
  bool observed_clamped = false;  // observed-side variance was clamped
  int star_clamp_events = 0;      // starred-side variance clamp count
  // Recorded only when config.keep_draws:
  Eigen::VectorXd beta_star;  // B replication estimates
  Eigen::VectorXd stat_star;  // B replication statistics, same formula as
                              // stat_obs evaluated on the starred sample
};

// Residuals with the null imposed on the (scalar) regressor of interest:
// utilde(b0) = M (y - x b0).  Requires d == 1.
Eigen::VectorXd restricted_residuals(const Dataset& data,
                                     const ProjectionContext& ctx, double beta0);

// The bootstrap scale factor at the null.  Requires d == 1.
// Throws DegenerateResiduals when the plug-in meat underflows.
AdjustmentFactor adjustment_factor(const Dataset& data,
                                   const ProjectionContext& ctx,
                                   const PartialledRegressors& pr, double beta0);

// Shared bootstrap p-value: p = (1/B) sum_b 1{ stat_star_b >= stat_obs },
// the fraction of starred statistics at least as extreme as the observed one.
// Ties count toward p (evidence against rejection); rejection is p < level.
double bootstrap_p_value(double stat_obs, const Eigen::VectorXd& stat_star);

// Wild bootstrap test of beta = beta0 with studentized comparison
// (percentile-t).  Both sides use the restricted plug-in t-statistic
// t(z) = |beta-hat(z) - b0| * S / sqrt(sum_i vhat_i^2 (M(z - x b0))_i^2),
// evaluated on the observed sample and on each starred sample, so the
// comparison is exactly "the same statistic recomputed on starred data".
// Requires d == 1.
BootstrapOutcome wild_bootstrap_test(const Dataset& data,
                                     const ProjectionContext& ctx,
                                     const PartialledRegressors& pr,
                                     const FitResult& fit, double beta0,
                                     const BootstrapConfig& config);

// Unstudentized (percentile) variant comparing sqrt(n)|beta* - beta0| draws.
BootstrapOutcome percentile_bootstrap_test(const Dataset& data,
                                           const ProjectionContext& ctx,
                                           const PartialledRegressors& pr,
                                           const FitResult& fit, double beta0,
                                           const BootstrapConfig& config);

// Score bootstrap of c^T beta = lambda (any d >= 1).  Scalar problems with
// c = 1 coincide with the percentile variant draw-for-draw.
BootstrapOutcome score_bootstrap_test(const Dataset& data,
                                      const ProjectionContext& ctx,
                                      const PartialledRegressors& pr,
                                      const FitResult& fit,
                                      const Eigen::VectorXd& c, double lambda,
                                      const BootstrapConfig& config);

// Convenience overloads that build the projection internally.
BootstrapOutcome wild_bootstrap_test(const Dataset& data, double beta0,
                                     const BootstrapConfig& config);
BootstrapOutcome percentile_bootstrap_test(const Dataset& data, double beta0,
                                           const BootstrapConfig& config);
BootstrapOutcome score_bootstrap_test(const Dataset& data,
                                      const Eigen::VectorXd& c, double lambda,
                                      const BootstrapConfig& config);

// Max-abs deviation between the two routes to the leave-one-out starred
// residuals: the implicit route (annihilate, subtract the fitted part, divide
// by leverage) versus the dense linear map A = diag(1/m) (M - vhat vhat^T / S)
// applied to ustar.  Requires d == 1 and dense-permitted n.
double appendix_identity_check(const Dataset& data, const ProjectionContext& ctx,
                               const PartialledRegressors& pr,
                               const Eigen::VectorXd& ustar);

// Rewrites a test of c^T beta = lambda as a scalar problem: the tested
// combination becomes the single regressor of interest and the orthogonal
// complement of c joins the controls.  Returns the new dataset and the null
// value for its scalar coefficient.
std::pair<Dataset, double> scalarize_constraint(const Dataset& data,
                                                const Eigen::VectorXd& c,
                                                double lambda);

}  // namespace manyboot
