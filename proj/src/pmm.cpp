#include "srreg/pmm.hpp"

#include "srreg/prox.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

namespace srreg::pmm {

void PmmConfig::validate() const {
  if (!(rho_k > 0.0 && rho_k < 1.0)) throw Error("PMM: rho_k must lie in (0, 1)");
  if (!(stage1_tol > 0.0) || !(stage2_tol > 0.0)) throw Error("PMM: tolerances must be positive");
  if (stage1_maxit < 1 || stage2_maxit < 0) throw Error("PMM: iteration limits out of range");
  if (!(continuation_start > 0.0)) throw Error("PMM: continuation_start must be positive");
  if (!(continuation_shrink > 0.0 && continuation_shrink < 1.0)) throw Error("PMM: continuation_shrink in (0, 1)");
  if (!(sigma_floor >= 0.0) || !(tau_floor >= 0.0)) throw Error("PMM: floors must be non-negative");
  if (!(stage2_floor_ratio >= 0.0 && stage2_floor_ratio < 1.0)) throw Error("PMM: stage2_floor_ratio in [0, 1)");
  if (!(stage1_floor_ratio >= 0.0 && stage1_floor_ratio < 1.0)) throw Error("PMM: stage1_floor_ratio in [0, 1)");
  if (!(stage1_ssn_tol > 0.0) || !(inner_tol_floor > 0.0)) throw Error("PMM: SSN tolerances must be positive");
  ssn.validate();
}

double default_sigma0(const Mat& X) { return 1.0 / (1.0 + X.cwiseAbs().colwise().sum().maxCoeff()); }

namespace {

std::string format_sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double eta_or_inf(const ProblemData& data, const RegularizerSpec& spec, const Vec& beta, bool nonconvex) {
  try {
    return nonconvex ? metrics::eta_kkt_nonconvex(data, spec, beta) : metrics::eta_kkt(data, spec, beta);
  } catch (const OverfitError&) {
    return std::numeric_limits<double>::infinity();
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::optional<Mat> maybe_gram(const ProblemData& data, const PmmConfig& cfg) {
  if (data.n() > data.m() || data.n() > cfg.gram_max_n) return std::nullopt;
  Mat G = Mat::Zero(data.n(), data.n());
  G.selfadjointView<Eigen::Lower>().rankUpdate(data.X.transpose());
  return Mat(G.selfadjointView<Eigen::Lower>());
}

const Mat* ptr(const std::optional<Mat>& g) { return g ? &*g : nullptr; }

Stage1Result stage_one_impl(const ProblemData& data, const RegularizerSpec& spec, const PmmConfig& cfg,
                            const Mat* gram) {
  if (data.b.norm() == 0.0) throw OverfitError("stage one: b = 0, every residual metric is undefined");
  Stage1Result out;
  ssn::SsnConfig scfg = cfg.ssn;
  scfg.grad_tol = cfg.stage1_ssn_tol * (1.0 + data.b.norm());

  Vec u = Vec::Zero(data.m());
  Vec beta_c = Vec::Zero(data.n());
  Vec b_c = data.b;
  double best_eta = std::numeric_limits<double>::infinity();
  double s = cfg.continuation_start;
  bool backed_off = false;
  double floor = std::max({cfg.sigma_floor, cfg.tau_floor,
                           cfg.stage1_recenter ? cfg.stage1_floor_ratio * cfg.continuation_start : 0.0});

  for (int it = 0; it < cfg.stage1_maxit; ++it) {
    ssn::SubproblemParams p(data, spec, s, s, beta_c, Vec::Zero(data.n()), b_c);
    p.gram = gram;
    const auto r = ssn::solve(p, u, scfg);
    u = r.u;
    out.ssn_iters_total += r.newton_iters;
    Stage1Step st;
    st.sigma = st.tau = s;
    st.h_value = ssn::primal_value(p, r.beta);
    st.eta_kkt = eta_or_inf(data, spec, r.beta, false);
    st.grad_norm = r.grad_norm;
    st.ssn_iters = r.newton_iters;
    out.steps.push_back(st);
    const bool improved = st.eta_kkt < best_eta || out.beta.size() == 0;
    if (improved) {
      best_eta = st.eta_kkt;
      out.beta = r.beta;
      out.u = r.u;
    }
    if (st.eta_kkt < cfg.stage1_tol) break;
    if (cfg.stage1_recenter) {
      if (!improved && !backed_off && s < cfg.continuation_start) {
        backed_off = true;
        // rounding dominates at this σ: back off one level and stay there
        floor = std::max(floor, s / cfg.continuation_shrink);
        u = out.u;
      }
      beta_c = out.beta;
      b_c = data.X * out.beta;
    }
    const double next = std::max(s * cfg.continuation_shrink, floor);
    if (next == s) {
      // At the floor: only a tighter inner solve can still help.
      if (scfg.grad_tol <= cfg.inner_tol_floor * (1.0 + data.b.norm())) break;
      scfg.grad_tol *= 0.1;
    }
    s = next;
  }
  out.eta_kkt = best_eta;
  out.converged = best_eta < cfg.stage1_tol;
  return out;
}

PmmOutcome stage_two_impl(const ProblemData& data, const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta0,
                          const Eigen::Ref<const Vec>& u0, const PmmConfig& cfg, const Mat* gram);

}  // namespace

Stage1Result stage_one(const ProblemData& data, const RegularizerSpec& spec, const PmmConfig& cfg) {
  cfg.validate();
  spec.validate();
  return stage_one_impl(data, spec, cfg, ptr(maybe_gram(data, cfg)));
}

Vec compute_delta_k(const ssn::SubproblemParams& p, const Eigen::Ref<const Vec>& u_next) {
  const ssn::DualPoint pt = ssn::evaluate(p, u_next);
  const Vec res = p.X() * pt.beta - p.b();
  const double rn = res.norm();
  if (rn == 0.0) throw OverfitError("subproblem iterate interpolates the data (Xβ = b)");
  // ∂‖·‖ element at y, read off the prox optimality condition of y.
  const Vec g_y = prox::project_ball(pt.u + p.tau * (p.b_tilde - p.b()), 1.0);
  return p.X().transpose() * (g_y - res / rn + p.tau * pt.grad);
}

PmmOutcome stage_two(const ProblemData& data, const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta0,
                     const Eigen::Ref<const Vec>& u0, const PmmConfig& cfg) {
  cfg.validate();
  spec.validate();
  if (beta0.size() != data.n() || u0.size() != data.m()) throw DimensionError("stage two: warm start sizes");
  return stage_two_impl(data, spec, beta0, u0, cfg,
                        spec.is_convex() ? nullptr : ptr(maybe_gram(data, cfg)));
}

namespace {

PmmOutcome stage_two_impl(const ProblemData& data, const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta0,
                          const Eigen::Ref<const Vec>& u0, const PmmConfig& cfg, const Mat* gram) {
  PmmOutcome out;
  SolveResult& res = out.result;
  res.solver_tag = "pmm";
  Vec beta = beta0;
  Vec u = u0;

  if (spec.is_convex()) {
    res.beta = beta;
    res.u = u;
    metrics::finalize(res, data, spec);
    res.converged = res.eta_kkt < cfg.stage2_tol;
    return out;
  }

  double sigma = cfg.sigma0 > 0.0 ? cfg.sigma0 : default_sigma0(data.X);
  double tau = cfg.tau0 > 0.0 ? cfg.tau0 : default_sigma0(data.X);
  const double sigma_floor = std::max(cfg.sigma_floor, cfg.stage2_floor_ratio * sigma);
  const double tau_floor = std::max(cfg.tau_floor, cfg.stage2_floor_ratio * tau);
  double g = reg::full_objective(data, spec, beta);
  double eta = eta_or_inf(data, spec, beta, true);

  for (int k = 0; k < cfg.stage2_maxit && !(eta < cfg.stage2_tol); ++k) {
    ssn::SubproblemParams p(data, spec, sigma, tau, beta, reg::q_grad(spec, beta), data.X * beta);
    p.gram = gram;
    ssn::SsnConfig scfg = cfg.ssn;
    scfg.grad_tol = std::max(1e-6, 0.1 * eta);

    PmmIteration rec;
    rec.k = k;
    rec.sigma = sigma;
    rec.tau = tau;
    rec.g_prev = g;
    Vec u_try = u;
    Vec beta_next;
    bool accepted = false;
    for (;;) {
      const auto r = ssn::solve(p, u_try, scfg);
      u_try = r.u;
      rec.ssn_iters += r.newton_iters;
      beta_next = r.beta;
      Vec delta;
      try {
        delta = compute_delta_k(p, u_try);
      } catch (const OverfitError& e) {
        out.trace.aborted = true;
        out.trace.abort_reason = e.what();
        break;
      }
      const Vec step = beta_next - beta;
      rec.step_norm = step.norm();
      rec.x_step_norm = (data.X * step).norm();
      rec.delta_norm = delta.norm();
      rec.accuracy_rhs = rec.step_norm > 0.0
                             ? 0.25 * sigma * rec.step_norm + tau * rec.x_step_norm * rec.x_step_norm /
                                                                  (2.0 * rec.step_norm)
                             : 0.0;
      rec.inner_tol = scfg.grad_tol;
      if (rec.delta_norm <= rec.accuracy_rhs) {
        accepted = true;
        break;
      }
      scfg.grad_tol *= 0.1;
      if (scfg.grad_tol < cfg.inner_tol_floor) {
        out.trace.aborted = true;
        out.trace.abort_reason = "inner tolerance fell below " + format_sci(cfg.inner_tol_floor) +
                                 " without meeting the accuracy condition";
        break;
      }
      ++rec.tightenings;
    }
    if (!accepted) break;

    rec.accuracy_ok = true;
    const double g_next = reg::full_objective(data, spec, beta_next);
    rec.g_next = g_next;
    rec.descent_lhs = g - g_next;
    rec.descent_rhs = 0.25 * sigma * rec.step_norm * rec.step_norm;
    rec.descent_ok = rec.descent_lhs >= rec.descent_rhs - 1e-10 * (1.0 + std::abs(g));
    beta = std::move(beta_next);
    u = u_try;
    g = g_next;
    eta = eta_or_inf(data, spec, beta, true);
    rec.eta_nc = eta;
    out.trace.iterations.push_back(rec);

    sigma = std::max(cfg.rho_k * sigma, sigma_floor);
    tau = std::max(cfg.rho_k * tau, tau_floor);
  }

  res.beta = beta;
  res.u = u;
  res.iters = static_cast<int>(out.trace.iterations.size());
  metrics::finalize(res, data, spec);
  res.converged = res.eta_kkt_nc < cfg.stage2_tol;
  return out;
}

}  // namespace

PmmOutcome solve(const ProblemData& data, const RegularizerSpec& spec, const PmmConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  spec.validate();
  PmmConfig c1 = cfg;
  if (spec.is_convex()) c1.stage1_tol = cfg.stage2_tol;
  const auto gram = maybe_gram(data, cfg);
  const Stage1Result s1 = stage_one_impl(data, spec, c1, ptr(gram));
  PmmOutcome out = stage_two_impl(data, spec, s1.beta, s1.u, cfg, ptr(gram));
  out.trace.stage1 = s1.steps;
  if (spec.is_convex()) {
    out.result.iters = static_cast<int>(s1.steps.size());
    out.result.converged = s1.converged;
  }
  out.result.wall_time = seconds_since(t0);
  return out;
}

Vec proximal_estimator(const ProblemData& data, const RegularizerSpec& spec, double sigma, double tau, double tol) {
  const auto p = ssn::SubproblemParams::centered(data, spec, sigma, tau);
  ssn::SsnConfig cfg;
  cfg.grad_tol = tol * (1.0 + data.b.norm());
  cfg.max_newton = 200;
  const auto r = ssn::solve(p, Vec::Zero(data.m()), cfg);
  if (!r.converged) {
    throw Error("proximal estimator: SSN stopped at gradient norm " + format_sci(r.grad_norm));
  }
  return r.beta;
}

}  // namespace srreg::pmm
