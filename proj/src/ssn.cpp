#include "srreg/ssn.hpp"

#include "srreg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace srreg::ssn {

SubproblemParams::SubproblemParams(const ProblemData& d, const RegularizerSpec& s, double sigma_, double tau_,
                                   Vec beta_tilde_, Vec v_tilde_, Vec b_tilde_)
    : data(&d),
      spec(s),
      sigma(sigma_),
      tau(tau_),
      beta_tilde(std::move(beta_tilde_)),
      v_tilde(std::move(v_tilde_)),
      b_tilde(std::move(b_tilde_)) {
  if (!(sigma > 0.0) || !(tau > 0.0)) throw Error("subproblem requires sigma > 0 and tau > 0");
  if (beta_tilde.size() != d.n() || v_tilde.size() != d.n()) {
    throw DimensionError("subproblem: beta_tilde and v_tilde must have length n");
  }
  if (b_tilde.size() != d.m()) throw DimensionError("subproblem: b_tilde must have length m");
  spec.validate();
}

SubproblemParams SubproblemParams::centered(const ProblemData& d, const RegularizerSpec& s, double sigma, double tau) {
  return SubproblemParams(d, s, sigma, tau, Vec::Zero(d.n()), Vec::Zero(d.n()), d.b);
}

double primal_value(const SubproblemParams& p, const Eigen::Ref<const Vec>& beta) {
  const Vec xb = p.X() * beta;
  return (xb - p.b()).norm() + p.l1_weight() * beta.lpNorm<1>() - p.v_tilde.dot(beta - p.beta_tilde) +
         0.5 * p.sigma * (beta - p.beta_tilde).squaredNorm() + 0.5 * p.tau * (xb - p.b_tilde).squaredNorm();
}

DualPoint evaluate(const SubproblemParams& p, const Eigen::Ref<const Vec>& u) {
  if (u.size() != p.data->m()) throw DimensionError("dual point must have length m");
  DualPoint pt;
  pt.u = u;
  pt.u_tilde = u / p.tau + p.b_tilde - p.b();
  pt.w = p.beta_tilde + (p.v_tilde - p.X().transpose() * u) / p.sigma;
  pt.y = prox::euclidean_norm(pt.u_tilde, 1.0 / p.tau);
  pt.beta = prox::l1(pt.w, p.l1_weight() / p.sigma);
  pt.grad = pt.y - linalg::times_sparse(p.X(), pt.beta) + p.b();
  // For a norm f, (t/2)‖x‖² minus the Moreau envelope of f/t at x equals
  // (t/2)‖Prox(x)‖², which collapses the conjugate form of φ to three terms.
  pt.phi = u.dot(p.b()) + 0.5 * p.tau * pt.y.squaredNorm() + 0.5 * p.sigma * pt.beta.squaredNorm();
  return pt;
}

double phi_value(const Eigen::Ref<const Vec>& u, const SubproblemParams& p) { return evaluate(p, u).phi; }

Vec phi_grad(const Eigen::Ref<const Vec>& u, const SubproblemParams& p) { return evaluate(p, u).grad; }

namespace {

// H + εI restricted to the active columns: αI + c·ddᵀ + σ⁻¹X_J X_Jᵀ.
struct ReducedHessian {
  const Mat* X;
  std::vector<Eigen::Index> active;
  Mat XJ;
  double alpha = 0.0;       // scale/τ + ε
  double rank1 = 0.0;       // rank1_coeff/τ
  const Vec* direction = nullptr;
  double inv_sigma = 0.0;
  const Mat* gram = nullptr;

  Vec apply(const Eigen::Ref<const Vec>& v) const {
    Vec out = alpha * v;
    if (rank1 != 0.0 && direction) out += (rank1 * direction->dot(v)) * *direction;
    if (!active.empty()) out.noalias() += inv_sigma * (XJ * (XJ.transpose() * v));
    return out;
  }

  Vec diagonal() const {
    Vec d = Vec::Constant(X->rows(), alpha);
    if (rank1 != 0.0 && direction) d += rank1 * direction->cwiseAbs2();
    if (!active.empty()) d += inv_sigma * XJ.rowwise().squaredNorm();
    return d;
  }
};

ReducedHessian build_hessian(const SubproblemParams& p, const prox::JacobianL1& jl1, const prox::JacobianNorm& jn,
                             double eps) {
  ReducedHessian h;
  h.X = &p.X();
  h.active = jl1.active_indices();
  if (!h.active.empty()) h.XJ = p.X()(Eigen::all, h.active);
  h.alpha = jn.scale / p.tau + eps;
  h.rank1 = jn.rank1_coeff / p.tau;
  h.direction = jn.direction ? &*jn.direction : nullptr;
  h.inv_sigma = 1.0 / p.sigma;
  h.gram = p.gram;
  return h;
}

// Direct solve of (αI + WWᵀ)x = r with W = [X_J/√σ, √c·d]: Woodbury on the
// k×k side when k ≤ m, otherwise Cholesky of the assembled m×m matrix.
Vec solve_direct(const ReducedHessian& h, const Eigen::Ref<const Vec>& rhs) {
  const Eigen::Index m = rhs.size();
  const bool has_rank1 = h.rank1 != 0.0 && h.direction != nullptr;
  const Eigen::Index k = static_cast<Eigen::Index>(h.active.size()) + (has_rank1 ? 1 : 0);
  if (k == 0) return rhs / h.alpha;
  Mat W(m, k);
  if (!h.active.empty()) W.leftCols(static_cast<Eigen::Index>(h.active.size())) = h.XJ * std::sqrt(h.inv_sigma);
  if (has_rank1) W.col(k - 1) = std::sqrt(h.rank1) * *h.direction;
  if (k > m) {
    Mat H(m, m);
    H.setZero();
    H.selfadjointView<Eigen::Lower>().rankUpdate(W);
    H.diagonal().array() += h.alpha;
    return H.selfadjointView<Eigen::Lower>().llt().solve(rhs);
  }
  Mat G(k, k);
  G.setZero();
  const auto nj = static_cast<Eigen::Index>(h.active.size());
  if (h.gram && nj > 0) {
    G.topLeftCorner(nj, nj) = h.inv_sigma * (*h.gram)(h.active, h.active);
    if (has_rank1) {
      G.row(k - 1).head(nj) = (W.leftCols(nj).transpose() * W.col(k - 1)).transpose();
      G(k - 1, k - 1) = W.col(k - 1).squaredNorm();
    }
  } else {
    G.selfadjointView<Eigen::Lower>().rankUpdate(W.transpose());
  }
  G.diagonal().array() += h.alpha;
  const Vec s = G.selfadjointView<Eigen::Lower>().llt().solve(W.transpose() * rhs);
  return (rhs - W * s) / h.alpha;
}

struct CgOutcome {
  Vec x;
  double residual = 0.0;
  int iters = 0;
};

CgOutcome solve_cg(const ReducedHessian& h, const Eigen::Ref<const Vec>& rhs, const Vec& x0, double tol, int max_iter) {
  const Vec dinv = h.diagonal().cwiseInverse();
  CgOutcome out;
  out.x = x0;
  Vec r = rhs - h.apply(out.x);
  Vec z = dinv.cwiseProduct(r);
  Vec d = z;
  double rz = r.dot(z);
  out.residual = r.norm();
  while (out.residual > tol && out.iters < max_iter) {
    const Vec hd = h.apply(d);
    const double dhd = d.dot(hd);
    if (!(dhd > 0.0)) break;
    const double step = rz / dhd;
    out.x += step * d;
    r -= step * hd;
    out.residual = r.norm();
    ++out.iters;
    if (out.residual <= tol) break;
    z = dinv.cwiseProduct(r);
    const double rz_new = r.dot(z);
    d = z + (rz_new / rz) * d;
    rz = rz_new;
  }
  return out;
}

}  // namespace

Vec apply_generalized_hessian(const SubproblemParams& p, const prox::JacobianL1& jl1, const prox::JacobianNorm& jn,
                              const Eigen::Ref<const Vec>& v) {
  if (jl1.size() != p.data->n() || v.size() != p.data->m()) throw DimensionError("apply_generalized_hessian: sizes");
  return build_hessian(p, jl1, jn, 0.0).apply(v);
}

void SsnConfig::validate() const {
  if (!(mu > 0.0 && mu < 0.5)) throw Error("SSN: mu must lie in (0, 1/2)");
  if (!(eta_bar > 0.0 && eta_bar < 1.0)) throw Error("SSN: eta_bar must lie in (0, 1)");
  if (!(rho_exp > 0.0 && rho_exp <= 1.0)) throw Error("SSN: rho_exp must lie in (0, 1]");
  if (!(ls_shrink > 0.0 && ls_shrink < 1.0)) throw Error("SSN: ls_shrink must lie in (0, 1)");
  if (max_newton < 0 || cg_max < 1 || ls_max < 0) throw Error("SSN: iteration limits must be non-negative");
  if (!(grad_tol > 0.0)) throw Error("SSN: grad_tol must be positive");
  if (!(damping_eps >= 0.0)) throw Error("SSN: damping_eps must be non-negative");
}

NewtonStep newton_direction(const DualPoint& point, const SubproblemParams& p, const SsnConfig& cfg) {
  NewtonStep step;
  const double gnorm = point.grad.norm();
  step.damping = std::min(cfg.damping_eps, 0.1 * gnorm);
  step.tolerance = std::min(cfg.eta_bar, std::pow(gnorm, 1.0 + cfg.rho_exp));

  const auto jl1 = prox::jacobian_l1(point.w, p.l1_weight() / p.sigma);
  const auto jn = prox::jacobian_norm(point.u_tilde, p.tau);
  const ReducedHessian h = build_hessian(p, jl1, jn, step.damping);
  const Vec rhs = -point.grad;
  const auto m = static_cast<double>(p.data->m());
  const auto k = static_cast<double>(h.active.size());

  bool direct = cfg.linear_solver == LinearSolver::Direct ||
                (cfg.linear_solver == LinearSolver::Automatic && std::min(k, m) <= cfg.direct_max);
  Vec x0 = Vec::Zero(rhs.size());
  if (direct && h.alpha > 0.0) {
    step.direction = solve_direct(h, rhs);
    step.residual = (h.apply(step.direction) - rhs).norm();
    step.direct = true;
    if (step.residual <= step.tolerance) return step;
    // Woodbury lost accuracy; polish iteratively from the direct solution.
    x0 = step.direction;
  }
  const CgOutcome cg = solve_cg(h, rhs, x0, step.tolerance, cfg.cg_max);
  step.cg_iters = cg.iters;
  if (cg.residual <= step.tolerance) {
    step.direction = cg.x;
    step.residual = cg.residual;
    return step;
  }
  step.direction = rhs;
  step.residual = (h.apply(rhs) - rhs).norm();
  step.steepest_fallback = true;
  return step;
}

namespace {

// Rounding floor of φ: its terms are each computed to relative precision.
double phi_noise(const SubproblemParams& p, const DualPoint& pt) {
  const double mag = std::abs(pt.u.dot(p.b())) + 0.5 * p.tau * pt.y.squaredNorm() +
                     0.5 * p.sigma * pt.beta.squaredNorm();
  return 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + mag);
}

}  // namespace

SsnResult solve(const SubproblemParams& p, const Eigen::Ref<const Vec>& u0, const SsnConfig& cfg) {
  cfg.validate();
  if (p.gram && (p.gram->rows() != p.data->n() || p.gram->cols() != p.data->n())) {
    throw DimensionError("SSN: cached Gram matrix must be n×n");
  }
  DualPoint cur = evaluate(p, u0);
  SsnResult res;
  res.grad_history.push_back(cur.grad.norm());
  res.phi_history.push_back(cur.phi);

  for (;;) {
    const double gnorm = cur.grad.norm();
    if (gnorm <= cfg.grad_tol) {
      res.converged = true;
      break;
    }
    if (res.newton_iters >= cfg.max_newton) break;

    const NewtonStep dir = newton_direction(cur, p, cfg);
    res.cg_iters_total += dir.cg_iters;
    if (dir.steepest_fallback) ++res.steepest_fallbacks;

    const double slope = cur.grad.dot(dir.direction);
    const double slack = phi_noise(p, cur);
    double alpha = 1.0;
    bool accepted = false;
    DualPoint best;
    double best_alpha = 0.0;
    for (int t = 0; t <= cfg.ls_max; ++t) {
      DualPoint trial = evaluate(p, cur.u + alpha * dir.direction);
      const double rhs = cur.phi + cfg.mu * alpha * slope;
      if (trial.phi <= rhs + slack) {
        res.steps.push_back({alpha, trial.phi, rhs, false});
        cur = std::move(trial);
        accepted = true;
        break;
      }
      if (best.u.size() == 0 || trial.phi < best.phi) {
        best = std::move(trial);
        best_alpha = alpha;
      }
      alpha *= cfg.ls_shrink;
    }
    if (!accepted) {
      // Stagnation at the rounding floor: nothing probed improves φ.
      if (best.u.size() == 0 || best.phi > cur.phi) break;
      res.steps.push_back({best_alpha, best.phi, cur.phi + cfg.mu * best_alpha * slope, true});
      cur = std::move(best);
    }
    ++res.newton_iters;
    res.grad_history.push_back(cur.grad.norm());
    res.phi_history.push_back(cur.phi);
  }

  res.grad_norm = cur.grad.norm();
  res.phi = cur.phi;
  res.u = std::move(cur.u);
  res.beta = std::move(cur.beta);
  res.y = std::move(cur.y);
  res.grad = std::move(cur.grad);
  return res;
}

}  // namespace srreg::ssn
