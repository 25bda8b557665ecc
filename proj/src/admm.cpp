#include "srreg/admm.hpp"

#include "srreg/prox.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace srreg::admm {

void AdmmConfig::validate() const {
  if (!(zeta > 0.0)) throw Error("ADMM: zeta must be positive");
  if (!(step_rho > 0.0 && step_rho < 1.6180339887)) throw Error("ADMM: step_rho must lie in (0, (1+sqrt 5)/2)");
  if (maxit < 1) throw Error("ADMM: maxit must be positive");
  if (!(tol > 0.0)) throw Error("ADMM: tol must be positive");
  if (adapt_every < 1) throw Error("ADMM: adapt_every must be positive");
}

namespace {

using Clock = std::chrono::steady_clock;

Vec pick(const AdmmStart* s, Vec AdmmStart::*field, Eigen::Index len) {
  if (s && (s->*field).size() > 0) {
    if ((s->*field).size() != len) throw DimensionError("ADMM warm start has the wrong length");
    return s->*field;
  }
  return Vec::Zero(len);
}

// η from a precomputed residual r = Xβ − b.
double eta_from_residual(const ProblemData& data, const RegularizerSpec& spec, const Vec& beta, const Vec& r,
                         bool nonconvex) {
  const double rn = r.norm();
  if (rn == 0.0) return std::numeric_limits<double>::infinity();
  const Vec g = data.X.transpose() * r / rn;
  const Vec z = beta - g;
  const Vec fixed = nonconvex ? reg::nonconvex_prox(z, 1.0, spec) : prox::l1(z, spec.l1_weight());
  return (beta - fixed).norm() / (1.0 + beta.norm() + g.norm());
}

double initial_zeta(const AdmmConfig& cfg, const ProblemData& data, bool dual) {
  if (cfg.zeta_rule != ZetaRule::Scaled) return cfg.zeta;
  const double c = data.b.norm() / std::sqrt(static_cast<double>(data.m()));
  if (c == 0.0) return cfg.zeta;
  return dual ? cfg.zeta * c : cfg.zeta / c;
}

double pcg_tol(int k) { return std::min(1e-2, 1.0 / (static_cast<double>(k) * k)); }

void adapt(double& zeta, double rp, double rd) {
  if (rp > 10.0 * rd) zeta = std::min(zeta * 2.0, 1e6);
  else if (rd > 10.0 * rp) zeta = std::max(zeta / 2.0, 1e-6);
}

SolveResult primal_admm(const ProblemData& data, const RegularizerSpec& spec, const AdmmConfig& cfg,
                        const AdmmStart* start, AdmmStats* stats, bool nonconvex) {
  const auto t0 = Clock::now();
  const Mat& X = data.X;
  const Vec& b = data.b;
  const Eigen::Index m = data.m(), n = data.n();
  const linalg::CachedFactorization fac(X, cfg.linear_mode);

  Vec beta = pick(start, &AdmmStart::beta, n);
  Vec y = pick(start, &AdmmStart::y, m);
  Vec z = pick(start, &AdmmStart::z, n);
  Vec u = pick(start, &AdmmStart::u, m);
  Vec v = pick(start, &AdmmStart::v, n);
  const double rho = nonconvex ? 1.0 : cfg.step_rho;
  double zeta = initial_zeta(cfg, data, false);

  SolveResult res;
  res.solver_tag = nonconvex ? "admm-nc" : "padmm";
  double best_eta = std::numeric_limits<double>::infinity();
  Vec best_beta = beta, best_u = u, best_y = y;
  AdmmStats st;
  int k = 0;
  double eta = std::numeric_limits<double>::infinity();
  while (k < cfg.maxit) {
    ++k;
    const Vec rhs = z - v / zeta + X.transpose() * (y + b - u / zeta);
    int pit = 0;
    beta = fac.solve(linalg::NormalSystem::Primal, rhs, beta, pcg_tol(k), &pit);
    st.pcg_iters_total += pit;
    const Vec xb = X * beta;
    const Vec y_old = y, z_old = z;
    y = prox::euclidean_norm(xb - b + u / zeta, 1.0 / zeta);
    z = nonconvex ? reg::nonconvex_prox(beta + v / zeta, zeta, spec) : prox::l1(beta + v / zeta, spec.l1_weight() / zeta);
    const Vec r1 = xb - y - b;
    const Vec r2 = beta - z;
    u += rho * zeta * r1;
    v += rho * zeta * r2;

    st.primal_residual = std::sqrt(r1.squaredNorm() + r2.squaredNorm());
    st.dual_residual = zeta * (X.transpose() * (y - y_old) + (z - z_old)).norm();
    eta = eta_from_residual(data, spec, z, linalg::times_sparse(X, z) - b, nonconvex);
    if (eta < best_eta) {
      best_eta = eta;
      best_beta = z;
      best_u = u;
      best_y = y;
    }
    if (eta < cfg.tol) break;
    if (cfg.zeta_rule == ZetaRule::Balance && k % cfg.adapt_every == 0) adapt(zeta, st.primal_residual, st.dual_residual);
  }
  st.final_zeta = zeta;
  if (stats) *stats = st;

  if (nonconvex) {
    res.beta = best_beta;
    res.u = best_u;
    res.y = best_y;
  } else {
    res.beta = z;
    res.u = u;
    res.y = y;
  }
  res.iters = k;
  metrics::finalize(res, data, spec);
  res.converged = (nonconvex ? res.eta_kkt_nc : res.eta_kkt) < cfg.tol;
  res.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

}  // namespace

SolveResult padmm_solve(const ProblemData& data, const RegularizerSpec& spec, const AdmmConfig& cfg,
                        const AdmmStart* start, AdmmStats* stats) {
  cfg.validate();
  spec.validate();
  if (spec.kind != PenaltyKind::L1) throw Error("pADMM solves the convex l1 problem only");
  return primal_admm(data, spec, cfg, start, stats, false);
}

SolveResult admm_nonconvex_solve(const ProblemData& data, const RegularizerSpec& spec, const AdmmConfig& cfg,
                                 const AdmmStart* start, AdmmStats* stats) {
  cfg.validate();
  spec.validate();
  return primal_admm(data, spec, cfg, start, stats, true);
}

SolveResult dadmm_solve(const ProblemData& data, const RegularizerSpec& spec, const AdmmConfig& cfg,
                        const AdmmStart* start, AdmmStats* stats) {
  cfg.validate();
  spec.validate();
  if (spec.kind != PenaltyKind::L1) throw Error("dADMM solves the convex l1 problem only");
  const auto t0 = Clock::now();
  const Mat& X = data.X;
  const Vec& b = data.b;
  const Eigen::Index m = data.m(), n = data.n();
  const double lam = spec.l1_weight();
  const linalg::CachedFactorization fac(X, cfg.linear_mode);

  Vec u = pick(start, &AdmmStart::u, m);
  Vec v = pick(start, &AdmmStart::v, n);
  Vec w = pick(start, &AdmmStart::w, m);
  Vec beta = pick(start, &AdmmStart::beta, n);
  Vec y = pick(start, &AdmmStart::y, m);
  double zeta = initial_zeta(cfg, data, true);
  const double rho = cfg.step_rho;

  AdmmStats st;
  int k = 0;
  while (k < cfg.maxit) {
    ++k;
    const Vec rhs = w - y / zeta + X * (beta / zeta - v) - b / zeta;
    int pit = 0;
    u = fac.solve(linalg::NormalSystem::Dual, rhs, u, pcg_tol(k), &pit);
    st.pcg_iters_total += pit;
    const Vec xtu = X.transpose() * u;
    const Vec v_old = v, w_old = w;
    v = prox::project_linf(beta / zeta - xtu, lam);
    w = prox::project_ball(y / zeta + u, 1.0);
    const Vec r1 = xtu + v;
    const Vec r2 = w - u;
    beta -= rho * zeta * r1;
    y -= rho * zeta * r2;

    st.primal_residual = std::sqrt(r1.squaredNorm() + r2.squaredNorm());
    st.dual_residual = zeta * (X * (v - v_old) - (w - w_old)).norm();
    const double eta = eta_from_residual(data, spec, beta, X * beta - b, false);
    if (eta < cfg.tol) break;
    if (cfg.zeta_rule == ZetaRule::Balance && k % cfg.adapt_every == 0) adapt(zeta, st.primal_residual, st.dual_residual);
  }
  st.final_zeta = zeta;
  if (stats) *stats = st;

  SolveResult res;
  res.solver_tag = "dadmm";
  res.beta = beta;
  res.u = u;
  res.y = y;
  res.iters = k;
  metrics::finalize(res, data, spec);
  res.converged = res.eta_kkt < cfg.tol;
  res.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

}  // namespace srreg::admm
