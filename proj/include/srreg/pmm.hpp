#pragma once

#include "srreg/metrics.hpp"
#include "srreg/regularizer.hpp"
#include "srreg/ssn.hpp"
#include "srreg/types.hpp"

#include <string>
#include <vector>

namespace srreg::pmm {

struct PmmConfig {
  double sigma0 = 0.0;  // ≤ 0 selects 1/(1 + max column ℓ1 norm of X)
  double tau0 = 0.0;
  double rho_k = 0.7;
  double stage1_tol = 1e-4;
  double stage2_tol = 1e-6;
  int stage1_maxit = 20;  // continuation steps
  int stage2_maxit = 200;
  double continuation_start = 1.0;
  double continuation_shrink = 0.1;
  double sigma_floor = 1e-8;
  double tau_floor = 1e-8;
  // Stage II never decays σ, τ below ratio·(σ⁰, τ⁰) either: the primal point
  // recovered from u carries rounding error ~ε‖X‖²/σ, and below that level
  // the accuracy condition can no longer be met. 0 disables.
  double stage2_floor_ratio = 1e-2;
  // Stage I centres each continuation step at the previous iterate
  // (β̃ = β, b̃ = Xβ) instead of at (0, b); a proximal-point variant.
  bool stage1_recenter = true;
  // With recentring, stage I stops shrinking σ = τ at ratio·continuation_start
  // and keeps taking proximal-point steps there; smaller values only add
  // rounding error to the recovered β. A step that fails to improve η also
  // raises the floor back one level. Ignored without recentring.
  double stage1_floor_ratio = 1e-5;
  // SSN gradient tolerance of stage I, relative to (1 + ‖b‖).
  double stage1_ssn_tol = 1e-9;
  double inner_tol_floor = 1e-14;
  // Cache XᵀX for the Newton systems when n ≤ min(m, gram_max_n); 0 disables.
  Eigen::Index gram_max_n = 4000;
  ssn::SsnConfig ssn;

  void validate() const;
};

struct Stage1Step {
  double sigma = 0.0;
  double tau = 0.0;
  double h_value = 0.0;  // h at the recovered β
  double eta_kkt = 0.0;
  double grad_norm = 0.0;
  int ssn_iters = 0;
};

struct Stage1Result {
  Vec beta;
  Vec u;
  double eta_kkt = 0.0;
  bool converged = false;
  int ssn_iters_total = 0;
  std::vector<Stage1Step> steps;
};

/// Convex warm start: minimises ‖Xβ − b‖ + λp1(β) (q ignored) by SSN on a
/// decreasing sequence σ = τ, stopping once η_kkt < stage1_tol.
Stage1Result stage_one(const ProblemData& data, const RegularizerSpec& spec, const PmmConfig& cfg);

/// δ such that the β recovered from u_next is the exact minimiser of
/// h + ⟨δ, ·⟩. Throws OverfitError when Xβ = b.
Vec compute_delta_k(const ssn::SubproblemParams& p, const Eigen::Ref<const Vec>& u_next);

struct PmmIteration {
  int k = 0;
  double sigma = 0.0;
  double tau = 0.0;
  double g_prev = 0.0;
  double g_next = 0.0;
  double step_norm = 0.0;    // ‖β^{k+1} − β^k‖
  double x_step_norm = 0.0;  // ‖X(β^{k+1} − β^k)‖
  double delta_norm = 0.0;
  double accuracy_rhs = 0.0;
  bool accuracy_ok = false;
  double descent_lhs = 0.0;  // g(β^k) − g(β^{k+1})
  double descent_rhs = 0.0;  // (σ/4)‖β^{k+1} − β^k‖²
  bool descent_ok = false;
  double eta_nc = 0.0;       // η̃ at β^{k+1}
  double inner_tol = 0.0;
  int tightenings = 0;
  int ssn_iters = 0;
};

struct PmmTrace {
  std::vector<Stage1Step> stage1;
  std::vector<PmmIteration> iterations;
  bool aborted = false;
  std::string abort_reason;
};

struct PmmOutcome {
  SolveResult result;
  PmmTrace trace;
};

/// Majorization loop from (β⁰, u⁰). For L1 it returns β⁰ unchanged.
PmmOutcome stage_two(const ProblemData& data, const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta0,
                     const Eigen::Ref<const Vec>& u0, const PmmConfig& cfg);

/// Both stages. For L1 stage I runs to stage2_tol and is the whole solve.
PmmOutcome solve(const ProblemData& data, const RegularizerSpec& spec, const PmmConfig& cfg);

/// 1/(1 + max_j ‖X_{:,j}‖₁).
double default_sigma0(const Mat& X);

/// Minimiser of ‖Xβ − b‖ + λp1(β) + (σ/2)‖β‖² + (τ/2)‖Xβ − b‖² by SSN from
/// u = 0, to ‖∇φ‖ ≤ tol·(1 + ‖b‖). Throws Error if SSN does not get there.
Vec proximal_estimator(const ProblemData& data, const RegularizerSpec& spec, double sigma, double tau,
                       double tol = 1e-12);

}  // namespace srreg::pmm
