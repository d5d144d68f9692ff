#include "manyboot/estimators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>

namespace manyboot {

std::string method_name(Method m) {
  switch (m) {
    case Method::HC0: return "HC0";
    case Method::HCK: return "HCK";
    case Method::HCA: return "HCA";
    case Method::WildG: return "Wild-G";
    case Method::WildR: return "Wild-R";
  }
  return "?";
}

bool parse_method(const std::string& token, Method* out) {
  std::string t;
  for (char ch : token) t.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
  if (t == "hc0") *out = Method::HC0;
  else if (t == "hck") *out = Method::HCK;
  else if (t == "hca") *out = Method::HCA;
  else if (t == "wild-g" || t == "wildg") *out = Method::WildG;
  else if (t == "wild-r" || t == "wildr") *out = Method::WildR;
  else return false;
  return true;
}

bool method_is_bootstrap(Method m) {
  return m == Method::WildG || m == Method::WildR;
}

FitResult fit_ols(const Dataset& data, const ProjectionContext& ctx,
                  const PartialledRegressors& pr) {
  FitResult fit;
  fit.beta = pr.solve(pr.vhat.transpose() * data.y);
  Eigen::VectorXd My = apply_annihilator(ctx, data.y);
  fit.uhat = My - pr.vhat * fit.beta;
  fit.uacc = fit.uhat.cwiseQuotient(ctx.leverage);
  return fit;
}

FitResult fit_ols(const Dataset& data) {
  ProjectionContext ctx = build_projection(data.W);
  PartialledRegressors pr = partial_out(ctx, data.X);
  return fit_ols(data, ctx, pr);
}

Eigen::MatrixXd variance_hc0(const PartialledRegressors& pr,
                             const FitResult& fit) {
  Eigen::MatrixXd meat =
      pr.vhat.transpose() *
      fit.uhat.array().square().matrix().asDiagonal() * pr.vhat;
  return pr.gram_inverse * meat * pr.gram_inverse;
}

HckResult variance_hck(const ProjectionContext& ctx,
                       const PartialledRegressors& pr, const FitResult& fit,
                       long max_dense_n) {
  HckResult res;
  long n = ctx.n;
  if (n > max_dense_n) {
    res.available = false;
    res.fellback = true;
    res.reason = "size";
    res.omega = variance_hc0(pr, fit);
    return res;
  }

  // K_ij = M_ij^2 elementwise on the dense annihilator.
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
  if (ctx.q > 0) M -= ctx.Q * ctx.Q.transpose();
  Eigen::MatrixXd K = M.cwiseProduct(M);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  const Eigen::VectorXd& lam = es.eigenvalues();
  double lo = lam.minCoeff();
  double hi = lam.maxCoeff();
  if (!(hi > 0.0) || lo / hi < 1e-12) {
    res.available = false;
    res.fellback = true;
    res.reason = "singular";
    res.omega = variance_hc0(pr, fit);
    return res;
  }

  Eigen::VectorXd u2 = fit.uhat.array().square().matrix();
  Eigen::VectorXd sigma = es.eigenvectors() *
                          (es.eigenvectors().transpose() * u2)
                              .cwiseQuotient(lam);
  Eigen::MatrixXd meat =
      pr.vhat.transpose() * sigma.asDiagonal() * pr.vhat;
  res.omega = pr.gram_inverse * meat * pr.gram_inverse;

  // Guard against a formally valid but nonpositive variance on the diagonal.
  for (long j = 0; j < res.omega.rows(); ++j) {
    if (!(res.omega(j, j) > 0.0)) {
      res.available = false;
      res.fellback = true;
      res.reason = "nonpositive";
      res.omega = variance_hc0(pr, fit);
      return res;
    }
  }
  return res;
}

Eigen::MatrixXd variance_hca(const PartialledRegressors& pr,
                             const FitResult& fit, const Eigen::VectorXd& y) {
  Eigen::VectorXd w = y.cwiseProduct(fit.uacc);
  Eigen::MatrixXd meat = pr.vhat.transpose() * w.asDiagonal() * pr.vhat;
  return pr.gram_inverse * meat * pr.gram_inverse;
}

double hca_quadform(const Eigen::MatrixXd& omega, const Eigen::VectorXd& c,
                    bool* was_negative) {
  double v = c.dot(omega * c);
  if (was_negative) *was_negative = v < 0.0;
  return std::abs(v);
}

double normal_p_value(double t) {
  return std::erfc(std::abs(t) / std::sqrt(2.0));
}

TestResult t_test(const Dataset& data, const ProjectionContext& ctx,
                  const PartialledRegressors& pr, const FitResult& fit,
                  Method method, double beta0, int coord, double level) {
  TestResult res;
  res.estimate = fit.beta[coord];
  double var = 0.0;
  switch (method) {
    case Method::HC0: {
      var = variance_hc0(pr, fit)(coord, coord);
      break;
    }
    case Method::HCK: {
      HckResult h = variance_hck(ctx, pr, fit);
      var = h.omega(coord, coord);
      res.hck_fellback = h.fellback;
      break;
    }
    case Method::HCA: {
      Eigen::MatrixXd omega = variance_hca(pr, fit, data.y);
      Eigen::VectorXd c = Eigen::VectorXd::Zero(fit.beta.size());
      c[coord] = 1.0;
      var = hca_quadform(omega, c, &res.clamped);
      break;
    }
    default:
      throw InputError("t_test: bootstrap methods use the bootstrap entry points");
  }
  res.se = std::sqrt(var);
  res.t = (res.estimate - beta0) / res.se;
  res.p = normal_p_value(res.t);
  res.reject = res.p < level;
  return res;
}

}  // namespace manyboot
