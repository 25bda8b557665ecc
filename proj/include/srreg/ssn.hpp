#pragma once

#include "srreg/prox.hpp"
#include "srreg/regularizer.hpp"
#include "srreg/types.hpp"

namespace srreg::ssn {

/// Data of one majorized convex subproblem
///
///   min_β ‖Xβ − b‖ + λp1(β) − ⟨ṽ, β − β̃⟩ + (σ/2)‖β − β̃‖² + (τ/2)‖Xβ − b̃‖²
///
/// (the constant −q(β̃) is carried separately by callers that need h itself).
/// Only λ and p1 of the regularizer are used here; the concave part enters
/// through ṽ.
struct SubproblemParams {
  const ProblemData* data = nullptr;
  RegularizerSpec spec;
  double sigma = 1.0;
  double tau = 1.0;
  Vec beta_tilde;
  Vec v_tilde;
  Vec b_tilde;
  // Optional XᵀX of data->X; when set, the Woodbury side gathers X_JᵀX_J
  // from it instead of forming the product each Newton step.
  const Mat* gram = nullptr;

  SubproblemParams(const ProblemData& d, const RegularizerSpec& s, double sigma_, double tau_,
                   Vec beta_tilde_, Vec v_tilde_, Vec b_tilde_);

  /// Stage-one form h(β; σ, τ, 0, 0, b).
  static SubproblemParams centered(const ProblemData& d, const RegularizerSpec& s, double sigma, double tau);

  const Mat& X() const { return data->X; }
  const Vec& b() const { return data->b; }
  double l1_weight() const { return spec.l1_weight(); }
};

/// Primal objective h(β) of the subproblem, without the −q(β̃) constant.
double primal_value(const SubproblemParams& p, const Eigen::Ref<const Vec>& beta);

/// Everything the dual objective φ and its gradient need at one u.
struct DualPoint {
  Vec u;
  Vec u_tilde;  // τ⁻¹u + b̃ − b
  Vec w;        // β̃ + σ⁻¹(ṽ − Xᵀu)
  Vec y;        // Prox_{τ⁻¹‖·‖}(u_tilde)
  Vec beta;     // Prox_{σ⁻¹λp1}(w)
  Vec grad;     // y − Xβ + b
  double phi = 0.0;
};

DualPoint evaluate(const SubproblemParams& p, const Eigen::Ref<const Vec>& u);

double phi_value(const Eigen::Ref<const Vec>& u, const SubproblemParams& p);
Vec phi_grad(const Eigen::Ref<const Vec>& u, const SubproblemParams& p);

/// H·v for H = σ⁻¹X·U·Xᵀ + τ⁻¹V, using only the active columns of X.
Vec apply_generalized_hessian(const SubproblemParams& p, const prox::JacobianL1& jl1,
                              const prox::JacobianNorm& jn, const Eigen::Ref<const Vec>& v);

enum class LinearSolver { Automatic, Direct, CG };

struct SsnConfig {
  double mu = 1e-4;
  double eta_bar = 0.1;
  double rho_exp = 0.5;
  double ls_shrink = 0.5;
  int max_newton = 50;
  double grad_tol = 1e-6;
  double damping_eps = 1e-4;  // cap of the vanishing damping min(cap, 0.1‖∇φ‖)
  LinearSolver linear_solver = LinearSolver::Automatic;
  int cg_max = 500;
  double direct_max = 3000.0;  // Automatic: direct when min(|active|, m) ≤ this
  int ls_max = 50;

  void validate() const;
};

struct NewtonStep {
  Vec direction;
  double residual = 0.0;   // ‖(H + εI)Δu + ∇φ‖
  double tolerance = 0.0;  // min(η̄, ‖∇φ‖^{1+ϱ})
  double damping = 0.0;
  int cg_iters = 0;
  bool direct = false;
  bool steepest_fallback = false;
};

NewtonStep newton_direction(const DualPoint& point, const SubproblemParams& p, const SsnConfig& cfg);

/// One accepted line-search step, both sides of the sufficient-decrease test.
struct StepRecord {
  double alpha = 1.0;
  double phi_new = 0.0;
  double armijo_rhs = 0.0;  // φ(u) + μα⟨∇φ(u), Δu⟩
  bool flagged = false;     // line search exhausted; best probe accepted
};

struct SsnResult {
  Vec u;
  Vec beta;
  Vec y;
  Vec grad;
  double grad_norm = 0.0;
  double phi = 0.0;
  int newton_iters = 0;
  int cg_iters_total = 0;
  int steepest_fallbacks = 0;
  bool converged = false;
  std::vector<double> grad_history;  // ‖∇φ(u^j)‖, j = 0..newton_iters
  std::vector<double> phi_history;
  std::vector<StepRecord> steps;
};

/// Semismooth Newton on ∇φ(u) = 0 with Armijo backtracking.
SsnResult solve(const SubproblemParams& p, const Eigen::Ref<const Vec>& u0, const SsnConfig& cfg);

}  // namespace srreg::ssn
