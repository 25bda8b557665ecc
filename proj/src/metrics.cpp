#include "srreg/metrics.hpp"

#include "srreg/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace srreg::metrics {

double eta_g(double pobj, double dobj) { return std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj)); }

namespace {

struct ResidualParts {
  Vec grad_loss;  // Xᵀr/‖r‖
};

ResidualParts loss_gradient(const ProblemData& data, const Eigen::Ref<const Vec>& beta) {
  if (beta.size() != data.n()) throw DimensionError("coefficient length does not match the design");
  const Vec r = data.X * beta - data.b;
  const double rn = r.norm();
  if (rn == 0.0) throw OverfitError("residual Xβ - b vanishes; KKT residual undefined");
  return {data.X.transpose() * r / rn};
}

double relative_residual(const Eigen::Ref<const Vec>& beta, const Vec& fixed, const Vec& g) {
  return (beta - fixed).norm() / (1.0 + beta.norm() + g.norm());
}

}  // namespace

double eta_kkt(const ProblemData& data, const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta) {
  const auto parts = loss_gradient(data, beta);
  const Vec fixed = prox::l1(beta - parts.grad_loss, spec.l1_weight());
  return relative_residual(beta, fixed, parts.grad_loss);
}

double eta_kkt_nonconvex(const ProblemData& data, const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta) {
  const auto parts = loss_gradient(data, beta);
  const Vec fixed = reg::nonconvex_prox(beta - parts.grad_loss, 1.0, spec);
  return relative_residual(beta, fixed, parts.grad_loss);
}

int nnz(const Eigen::Ref<const Vec>& beta) {
  std::vector<double> mags(static_cast<std::size_t>(beta.size()));
  for (Eigen::Index i = 0; i < beta.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(beta[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double total = 0.0;
  for (double v : mags) total += v;
  if (total == 0.0) return 0;
  const double target = 0.9999 * total;
  double acc = 0.0;
  int k = 0;
  for (double v : mags) {
    acc += v;
    ++k;
    if (acc >= target) break;
  }
  return k;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

namespace {

// Acklam's rational approximation, relative error ~1e-9.
double acklam(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01,  -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  constexpr double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) return -acklam(1.0 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// p ≤ 0.5 only, so Φ(x) is evaluated through erfc of a non-negative argument.
double lower_quantile(double p) {
  double x = acklam(p);
  for (int it = 0; it < 3; ++it) {
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    const double step = u / (1.0 + 0.5 * x * u);  // Halley
    x -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("normal_quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return lower_quantile(p);
  return -lower_quantile(1.0 - p);  // exact subtraction for p ≥ 0.5
}

double normal_upper_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error("normal_upper_quantile: q must lie in (0, 1)");
  return -normal_quantile(q);
}

double lambda_scale(long n) {
  if (n < 1) throw Error("lambda_scale: n must be positive");
  return 1.1 * normal_upper_quantile(0.05 / (2.0 * static_cast<double>(n)));
}

double lambda_from_c(double lambda_c, long n) {
  if (!(lambda_c > 0.0)) throw Error("lambda_c must be positive");
  return lambda_c * lambda_scale(n);
}

double test_error(const Mat& X_test, const Eigen::Ref<const Vec>& b_test, const Eigen::Ref<const Vec>& beta) {
  if (X_test.cols() != beta.size() || X_test.rows() != b_test.size()) {
    throw DimensionError("test_error: dimension mismatch");
  }
  if (X_test.rows() == 0) throw DimensionError("test_error: empty test set");
  return (X_test * beta - b_test).squaredNorm() / static_cast<double>(X_test.rows());
}

double feasible_dual_objective(const ProblemData& data, const RegularizerSpec& spec, const Eigen::Ref<const Vec>& u) {
  if (u.size() != data.m()) throw DimensionError("dual point must have length m");
  const double scale =
      std::max({1.0, u.norm(), (data.X.transpose() * u).lpNorm<Eigen::Infinity>() / spec.l1_weight()});
  return -u.dot(data.b) / scale;
}

void finalize(SolveResult& res, const ProblemData& data, const RegularizerSpec& spec) {
  res.pobj = reg::full_objective(data, spec, res.beta);
  res.nnz = nnz(res.beta);
  try {
    res.eta_kkt_nc = eta_kkt_nonconvex(data, spec, res.beta);
    res.eta_kkt = spec.is_convex() ? res.eta_kkt_nc : eta_kkt(data, spec, res.beta);
  } catch (const OverfitError&) {
    res.eta_kkt = res.eta_kkt_nc = std::numeric_limits<double>::infinity();
  }
  if (spec.is_convex() && res.u.size() == data.m()) {
    res.dobj = feasible_dual_objective(data, spec, res.u);
    res.eta_g = eta_g(res.pobj, res.dobj);
  } else {
    res.dobj = std::numeric_limits<double>::quiet_NaN();
    res.eta_g = std::numeric_limits<double>::quiet_NaN();
  }
}

OracleDiagnostics oracle_diagnostics(const ProblemData& data, const RegularizerSpec& spec,
                                     const Eigen::Ref<const Vec>& beta_hat, const Truth& truth, double sigma,
                                     double tau) {
  if (spec.kind != PenaltyKind::L1) throw Error("oracle diagnostics are defined for the l1 penalty");
  if (beta_hat.size() != data.n() || truth.beta_star.size() != data.n() || truth.noise.size() != data.m()) {
    throw DimensionError("oracle_diagnostics: dimension mismatch");
  }
  if (!(sigma >= 0.0) || !(tau >= 0.0)) throw Error("oracle_diagnostics: sigma and tau must be non-negative");
  const double eps_norm = truth.noise.norm();
  if (eps_norm == 0.0) throw Error("oracle_diagnostics: noise vector is zero");
  const Vec eps_hat = data.b - data.X * beta_hat;
  const double eps_hat_norm = eps_hat.norm();
  if (eps_hat_norm == 0.0) throw OverfitError("oracle_diagnostics: estimator interpolates the data");

  OracleDiagnostics d;
  const double lam = spec.lambda;
  const Vec& bs = truth.beta_star;
  const double p_bs = bs.lpNorm<1>();
  const double pstar_bs = bs.lpNorm<Eigen::Infinity>();
  const Vec xte = data.X.transpose() * truth.noise;

  double on_s = 0.0, off_s = 0.0, beta_on = 0.0, beta_off = 0.0;
  for (Eigen::Index j = 0; j < bs.size(); ++j) {
    if (bs[j] != 0.0) {
      on_s = std::max(on_s, std::abs(xte[j]));
      beta_on = std::max(beta_on, std::abs(bs[j]));
    } else {
      off_s = std::max(off_s, std::abs(xte[j]));
      beta_off = std::max(beta_off, std::abs(bs[j]));
    }
  }

  d.lambda = lam;
  d.n_p = lam * p_bs / eps_norm;
  d.lambda0 = xte.lpNorm<Eigen::Infinity>() / eps_norm;
  d.lambda_m = std::max({off_s / eps_norm, on_s / eps_norm, beta_off, beta_on});
  d.t1 = 1.0 + 0.5 * tau * eps_norm + sigma * pstar_bs * p_bs / (2.0 * eps_norm);
  d.t2 = 2.0 + tau + sigma * pstar_bs * p_bs / eps_norm;
  d.c_u = d.t1 + d.n_p;
  d.a = (d.lambda0 + sigma * pstar_bs * d.c_u) * d.t1 / lam;
  const double margin = d.a + 2.0 * d.lambda0 * d.n_p / lam;
  d.assumption_holds = margin < 1.0;
  d.c_l = (1.0 - margin) / (2.0 + (1.0 + sigma * pstar_bs / lam) * d.n_p);
  d.ratio = eps_hat_norm / eps_norm;

  auto holds = [](double lhs, double rhs) { return lhs <= rhs + 1e-10 * (1.0 + std::abs(rhs)); };

  d.inner_bound_lhs = eps_hat.dot(data.X * (bs - beta_hat));
  d.inner_bound_rhs = (lam * p_bs + sigma * pstar_bs * beta_hat.lpNorm<1>()) / (tau + 1.0 / eps_hat_norm);
  d.inner_bound_ok = holds(d.inner_bound_lhs, d.inner_bound_rhs);
  d.ratio_upper_ok = holds(d.ratio, d.c_u);
  d.ratio_bounds_ok = d.ratio_upper_ok && holds(d.c_l, d.ratio);
  d.lambda_m_ok = holds(d.lambda0, d.lambda_m) && holds(pstar_bs, d.lambda_m);
  return d;
}

}  // namespace srreg::metrics
