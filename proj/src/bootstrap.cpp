#include "manyboot/bootstrap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>

namespace manyboot {

std::string weight_scheme_name(WeightScheme w) {
  switch (w) {
    case WeightScheme::Gaussian: return "gaussian";
    case WeightScheme::Rademacher: return "rademacher";
    case WeightScheme::Mammen: return "mammen";
  }
  return "?";
}

bool parse_weight_scheme(const std::string& token, WeightScheme* out) {
  std::string t;
  for (char ch : token) t.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
  if (t == "gaussian" || t == "normal") *out = WeightScheme::Gaussian;
  else if (t == "rademacher") *out = WeightScheme::Rademacher;
  else if (t == "mammen") *out = WeightScheme::Mammen;
  else return false;
  return true;
}

std::string bootstrap_mode_name(BootstrapMode m) {
  switch (m) {
    case BootstrapMode::PercentileT: return "percentile-t";
    case BootstrapMode::Percentile: return "percentile";
    case BootstrapMode::Score: return "score";
  }
  return "?";
}

bool parse_bootstrap_mode(const std::string& token, BootstrapMode* out) {
  std::string t;
  for (char ch : token) t.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
  if (t == "percentile-t" || t == "percentilet") *out = BootstrapMode::PercentileT;
  else if (t == "percentile") *out = BootstrapMode::Percentile;
  else if (t == "score") *out = BootstrapMode::Score;
  else return false;
  return true;
}

namespace {

void require_scalar(const Dataset& data, const char* who) {
  if (data.d() != 1) {
    throw InputError(std::string(who) +
                     ": requires a single regressor of interest "
                     "(reduce a linear constraint with scalarize_constraint)");
  }
}

// Weight block for replications [b0, b0+cols): one keyed substream per
// replication, so any chunking or threading yields identical draws.
Eigen::MatrixXd draw_weight_block(long n, int b0, int cols, WeightScheme scheme,
                                  StreamKey base) {
  Eigen::MatrixXd Om(n, cols);
  for (int j = 0; j < cols; ++j) {
    Stream s(derive(base, Purpose::Weights, std::uint64_t(b0 + j)));
    switch (scheme) {
      case WeightScheme::Gaussian:
        for (long i = 0; i < n; ++i) Om(i, j) = s.normal();
        break;
      case WeightScheme::Rademacher:
        for (long i = 0; i < n; ++i) Om(i, j) = s.rademacher();
        break;
      case WeightScheme::Mammen:
        for (long i = 0; i < n; ++i) Om(i, j) = s.mammen();
        break;
    }
  }
  return Om;
}

// Columns per chunk so the working set stays a few dozen MB.
int chunk_columns(long n, int B) {
  long cols = std::max<long>(1, (4L << 20) / std::max<long>(1, n));
  return int(std::min<long>(B, cols));
}

// Weights for replications [b0, b0+cols): drawn from the configured scheme,
// or copied from the injected matrix when the test hook is set.
Eigen::MatrixXd weight_block(const BootstrapConfig& config, long n, int b0,
                             int cols, StreamKey base) {
  if (config.forced_weights != nullptr) {
    const Eigen::MatrixXd& W = *config.forced_weights;
    if (W.rows() != n || W.cols() < b0 + cols) {
      throw InputError("forced_weights must be n x B");
    }
    return W.middleCols(b0, cols);
  }
  return draw_weight_block(n, b0, cols, config.weights, base);
}

// Numerically-zero test for projected residuals: an exact fit leaves only
// rounding residue in utilde, tiny relative to the unprojected vector.
bool residuals_degenerate(const Eigen::VectorXd& utilde,
                          const Eigen::VectorXd& unprojected) {
  return utilde.norm() <= 1e-12 * unprojected.norm();
}

AdjustmentFactor adjustment_from(const Dataset& data,
                                 const ProjectionContext& ctx,
                                 const PartialledRegressors& pr,
                                 const Eigen::VectorXd& utilde, double beta0) {
  AdjustmentFactor adj;
  long n = ctx.n;
  if (residuals_degenerate(utilde,
                           Eigen::VectorXd(data.y - data.X.col(0) * beta0))) {
    throw DegenerateResiduals();
  }
  Eigen::ArrayXd v2 = pr.vhat.col(0).array().square();
  Eigen::ArrayXd uacc0 = utilde.array() / ctx.leverage.array();
  adj.sigma_acute = (v2 * data.y.array() * uacc0).sum();
  adj.sigma_hat = (v2 * utilde.array().square()).sum();
  if (adj.sigma_hat <= 1e-300) throw DegenerateResiduals();
  double floor = 1.0 / double(n);
  adj.guard_active = adj.sigma_acute < floor;
  adj.a_n = std::sqrt(std::max(adj.sigma_acute, floor) / adj.sigma_hat);
  return adj;
}

}  // namespace

Eigen::VectorXd restricted_residuals(const Dataset& data,
                                     const ProjectionContext& ctx,
                                     double beta0) {
  require_scalar(data, "restricted_residuals");
  return apply_annihilator(
      ctx, Eigen::VectorXd(data.y - data.X.col(0) * beta0));
}

AdjustmentFactor adjustment_factor(const Dataset& data,
                                   const ProjectionContext& ctx,
                                   const PartialledRegressors& pr,
                                   double beta0) {
  require_scalar(data, "adjustment_factor");
  return adjustment_from(data, ctx, pr, restricted_residuals(data, ctx, beta0),
                         beta0);
}

double bootstrap_p_value(double stat_obs, const Eigen::VectorXd& stat_star) {
  long B = stat_star.size();
  long count = 0;
  for (long b = 0; b < B; ++b) {
    if (stat_star[b] >= stat_obs) ++count;
  }
  return B ? double(count) / double(B) : 1.0;
}

namespace {

// Shared engine for the percentile-t and percentile variants (d == 1).
//
// Percentile-t studentizes both sides by the restricted plug-in scale:
//   t(z) = |beta-hat(z) - b0| S / sqrt(sum_i vhat_i^2 (M(z - x b0))_i^2),
// evaluated at z = y and z = y*_b.  The same formula on both sides keeps the
// comparison a genuine "recompute the statistic on starred data"; it also
// makes t* invariant to a_n (the factor scales the numerator and the scale's
// square root identically), while a_n still shapes the beta* draws that the
// percentile variant and keep_draws consumers see.
BootstrapOutcome wild_engine(const Dataset& data, const ProjectionContext& ctx,
                             const PartialledRegressors& pr,
                             const FitResult& fit, double beta0,
                             const BootstrapConfig& config, bool studentize) {
  require_scalar(data, "wild bootstrap");
  const long n = ctx.n;
  const int B = config.B;
  if (B < 1) throw InputError("bootstrap replication count must be >= 1");

  const Eigen::VectorXd v = pr.vhat.col(0);
  const double S = pr.gram(0, 0);
  const Eigen::ArrayXd v2 = v.array().square();

  BootstrapOutcome out;
  Eigen::VectorXd utilde = restricted_residuals(data, ctx, beta0);
  out.adjustment = adjustment_from(data, ctx, pr, utilde, beta0);
  const double a = out.adjustment.a_n;

  // y* = (y - utilde) + a * (w ∘ utilde).
  const Eigen::VectorXd base = data.y - utilde;

  Eigen::VectorXd beta_star(B);
  Eigen::VectorXd stat_star(B);

  StreamKey wkey{config.seed};
  const int bc = chunk_columns(n, B);
  for (int b0 = 0; b0 < B; b0 += bc) {
    const int cols = std::min(bc, B - b0);
    Eigen::MatrixXd Om = weight_block(config, n, b0, cols, wkey);
    // U column b = w_b ∘ utilde
    Eigen::MatrixXd U = (Om.array().colwise() * utilde.array()).matrix();
    Eigen::MatrixXd Ystar = (a * U).colwise() + base;
    Eigen::RowVectorXd bstar = (v.transpose() * Ystar) / S;

    if (studentize) {
      // Restricted starred residuals come cheap: M(y* - x b0) = a M U_b,
      // because M(base - x b0) = utilde - utilde = 0.  The starred plug-in
      // scale is then sum_i vhat_i^2 (a M U_b)_i^2, the exact analog of the
      // observed-side sum_i vhat_i^2 utilde_i^2.
      Eigen::MatrixXd MU = apply_annihilator(ctx, U);
      Eigen::RowVectorXd scale =
          (a * a) * (v2.matrix().transpose() * MU.cwiseAbs2());
      for (int j = 0; j < cols; ++j) {
        beta_star[b0 + j] = bstar[j];
        double num = std::abs(bstar[j] - beta0) * S;
        // scale == 0 forces U_b inside the control space, hence num == 0 too;
        // define the statistic as 0 there (a tie against any positive t).
        stat_star[b0 + j] =
            scale[j] > 0.0 ? num / std::sqrt(scale[j]) : 0.0;
      }
    } else {
      for (int j = 0; j < cols; ++j) {
        beta_star[b0 + j] = bstar[j];
        stat_star[b0 + j] = std::sqrt(double(n)) * std::abs(bstar[j] - beta0);
      }
    }
  }

  if (studentize) {
    out.stat_obs = std::abs(fit.beta[0] - beta0) * S /
                   std::sqrt(out.adjustment.sigma_hat);
  } else {
    out.stat_obs = std::sqrt(double(n)) * std::abs(fit.beta[0] - beta0);
  }

  out.p_value = bootstrap_p_value(out.stat_obs, stat_star);
  out.reject = out.p_value < config.level;
  if (config.keep_draws) {
    out.beta_star = std::move(beta_star);
    out.stat_star = std::move(stat_star);
  }
  return out;
}

}  // namespace

BootstrapOutcome wild_bootstrap_test(const Dataset& data,
                                     const ProjectionContext& ctx,
                                     const PartialledRegressors& pr,
                                     const FitResult& fit, double beta0,
                                     const BootstrapConfig& config) {
  return wild_engine(data, ctx, pr, fit, beta0, config, /*studentize=*/true);
}

BootstrapOutcome percentile_bootstrap_test(const Dataset& data,
                                           const ProjectionContext& ctx,
                                           const PartialledRegressors& pr,
                                           const FitResult& fit, double beta0,
                                           const BootstrapConfig& config) {
  return wild_engine(data, ctx, pr, fit, beta0, config, /*studentize=*/false);
}

BootstrapOutcome score_bootstrap_test(const Dataset& data,
                                      const ProjectionContext& ctx,
                                      const PartialledRegressors& pr,
                                      const FitResult& fit,
                                      const Eigen::VectorXd& c, double lambda,
                                      const BootstrapConfig& config) {
  const long n = ctx.n;
  const long d = data.d();
  const int B = config.B;
  if (c.size() != d) throw InputError("score bootstrap: constraint length mismatch");
  if (B < 1) throw InputError("bootstrap replication count must be >= 1");

  BootstrapOutcome out;

  // Null-restricted estimate and residuals.
  Eigen::VectorXd beta_tilde = constrained_ols(data, ctx, pr, c, lambda);
  Eigen::VectorXd unprojected = data.y - data.X * beta_tilde;
  Eigen::VectorXd utilde = apply_annihilator(ctx, unprojected);
  if (residuals_degenerate(utilde, unprojected)) throw DegenerateResiduals();
  Eigen::ArrayXd uacc0 = utilde.array() / ctx.leverage.array();

  Eigen::VectorXd w_acute = (data.y.array() * uacc0).matrix();
  Eigen::MatrixXd sig_acute =
      pr.vhat.transpose() * w_acute.asDiagonal() * pr.vhat;
  Eigen::VectorXd w_hat = utilde.array().square().matrix();
  Eigen::MatrixXd sig_hat = pr.vhat.transpose() * w_hat.asDiagonal() * pr.vhat;

  const double floor = 1.0 / double(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_hat(sig_hat);
  if (es_hat.eigenvalues().minCoeff() <= 1e-300) throw DegenerateResiduals();
  Eigen::MatrixXd hat_inv_sqrt =
      es_hat.eigenvectors() *
      es_hat.eigenvalues().array().rsqrt().matrix().asDiagonal() *
      es_hat.eigenvectors().transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_acute(sig_acute);
  Eigen::ArrayXd lam = es_acute.eigenvalues().array();
  bool floored = (lam < floor).any();
  Eigen::MatrixXd acute_sqrt =
      es_acute.eigenvectors() *
      lam.max(floor).sqrt().matrix().asDiagonal() *
      es_acute.eigenvectors().transpose();

  Eigen::MatrixXd A_n = acute_sqrt * hat_inv_sqrt;

  out.adjustment.sigma_acute = c.dot(sig_acute * c);
  out.adjustment.sigma_hat = c.dot(sig_hat * c);
  out.adjustment.guard_active = floored;
  out.adjustment.a_n = std::sqrt(
      std::max(out.adjustment.sigma_acute, floor) / out.adjustment.sigma_hat);

  // T*_b = c^T (S/n)^{-1} A_n ( n^{-1/2} vhat^T (w_b ∘ utilde) ).
  Eigen::VectorXd coef =
      std::sqrt(double(n)) * (A_n.transpose() * (pr.gram_inverse * c));
  out.stat_obs = std::sqrt(double(n)) * std::abs(c.dot(fit.beta) - lambda);

  Eigen::VectorXd beta_star(B);
  Eigen::VectorXd stat_star(B);
  StreamKey wkey{config.seed};
  const int bc = chunk_columns(n, B);
  for (int b0 = 0; b0 < B; b0 += bc) {
    const int cols = std::min(bc, B - b0);
    Eigen::MatrixXd Om = weight_block(config, n, b0, cols, wkey);
    Eigen::MatrixXd U = (Om.array().colwise() * utilde.array()).matrix();
    Eigen::MatrixXd scores = pr.vhat.transpose() * U;  // d x cols
    for (int j = 0; j < cols; ++j) {
      double tstar = coef.dot(scores.col(j));
      stat_star[b0 + j] = std::abs(tstar);
      beta_star[b0 + j] = lambda + tstar / std::sqrt(double(n));
    }
  }

  out.p_value = bootstrap_p_value(out.stat_obs, stat_star);
  out.reject = out.p_value < config.level;
  if (config.keep_draws) {
    out.beta_star = std::move(beta_star);
    out.stat_star = std::move(stat_star);
  }
  return out;
}

BootstrapOutcome wild_bootstrap_test(const Dataset& data, double beta0,
                                     const BootstrapConfig& config) {
  ProjectionContext ctx = build_projection(data.W);
  PartialledRegressors pr = partial_out(ctx, data.X);
  FitResult fit = fit_ols(data, ctx, pr);
  return wild_bootstrap_test(data, ctx, pr, fit, beta0, config);
}

BootstrapOutcome percentile_bootstrap_test(const Dataset& data, double beta0,
                                           const BootstrapConfig& config) {
  ProjectionContext ctx = build_projection(data.W);
  PartialledRegressors pr = partial_out(ctx, data.X);
  FitResult fit = fit_ols(data, ctx, pr);
  return percentile_bootstrap_test(data, ctx, pr, fit, beta0, config);
}

BootstrapOutcome score_bootstrap_test(const Dataset& data,
                                      const Eigen::VectorXd& c, double lambda,
                                      const BootstrapConfig& config) {
  ProjectionContext ctx = build_projection(data.W);
  PartialledRegressors pr = partial_out(ctx, data.X);
  FitResult fit = fit_ols(data, ctx, pr);
  return score_bootstrap_test(data, ctx, pr, fit, c, lambda, config);
}

double appendix_identity_check(const Dataset& data, const ProjectionContext& ctx,
                               const PartialledRegressors& pr,
                               const Eigen::VectorXd& ustar) {
  require_scalar(data, "appendix_identity_check");
  const Eigen::VectorXd v = pr.vhat.col(0);
  const double S = pr.gram(0, 0);

  // Implicit route: annihilate, remove the fitted starred part, divide by m.
  double beta_star = v.dot(ustar) / S;
  Eigen::VectorXd u_imp = apply_annihilator(ctx, ustar) - v * beta_star;
  Eigen::VectorXd uacc_imp = u_imp.cwiseQuotient(ctx.leverage);

  // Dense route: the explicit linear map A = diag(1/m) (M - v v^T / S).
  Eigen::MatrixXd H = annihilator_matrix(ctx) - (v * v.transpose()) / S;
  Eigen::VectorXd uacc_dense =
      ctx.leverage.cwiseInverse().asDiagonal() * (H * ustar);

  return (uacc_imp - uacc_dense).cwiseAbs().maxCoeff();
}

std::pair<Dataset, double> scalarize_constraint(const Dataset& data,
                                                const Eigen::VectorXd& c,
                                                double lambda) {
  long d = data.d();
  if (c.size() != d) throw InputError("constraint vector length mismatch");
  double cnorm2 = c.squaredNorm();
  if (!(cnorm2 > 0.0)) throw InputError("constraint vector must be nonzero");

  Dataset reduced;
  reduced.y = data.y;
  reduced.X = data.X * (c / cnorm2);
  if (d == 1) {
    reduced.W = data.W;
    return {reduced, lambda};
  }
  Eigen::FullPivHouseholderQR<Eigen::MatrixXd> qr(c);
  Eigen::MatrixXd Qc = qr.matrixQ();
  Eigen::MatrixXd N = Qc.rightCols(d - 1);
  reduced.W.resize(data.n(), data.W.cols() + d - 1);
  reduced.W << data.W, data.X * N;
  return {reduced, lambda};
}

}  // namespace manyboot
