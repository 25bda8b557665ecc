#pragma once

#include "srreg/regularizer.hpp"
#include "srreg/types.hpp"

#include <string>

namespace srreg {

/// Output of any solver in the library.
struct SolveResult {
  Vec beta;
  Vec u;
  Vec y;
  double pobj = 0.0;  // g(β) (equals ‖Xβ − b‖ + λ‖β‖₁ for L1)
  double dobj = 0.0;  // −⟨u, b⟩ (convex solvers only)
  double eta_g = 0.0;
  double eta_kkt = 0.0;
  double eta_kkt_nc = 0.0;
  int nnz = 0;
  int iters = 0;
  double wall_time = 0.0;
  bool converged = false;
  std::string solver_tag;
};

namespace metrics {

/// |pobj − dobj| / (1 + |pobj| + |dobj|).
double eta_g(double pobj, double dobj);

/// Relative KKT residual of min ‖Xβ − b‖ + λp1(β), built on the
/// soft-thresholding fixed point. Throws OverfitError when Xβ = b.
double eta_kkt(const ProblemData& data, const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta);

/// Same residual with the prox of the full nonconvex penalty λp1 − q.
double eta_kkt_nonconvex(const ProblemData& data, const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta);

/// Smallest k whose k largest |β_i| carry 99.99% of ‖β‖₁.
int nnz(const Eigen::Ref<const Vec>& beta);

double normal_cdf(double z);
/// Φ⁻¹(p) for p in (0, 1), refined against erfc to ~1e-15 relative.
double normal_quantile(double p);
/// Φ⁻¹(1 − q) computed without forming 1 − q.
double normal_upper_quantile(double q);

/// Λ = 1.1·Φ⁻¹(1 − 0.05/(2n)).
double lambda_scale(long n);
/// λ = λ_c·Λ(n).
double lambda_from_c(double lambda_c, long n);

/// ‖X_test β − b_test‖² / m_test.
double test_error(const Mat& X_test, const Eigen::Ref<const Vec>& b_test, const Eigen::Ref<const Vec>& beta);

/// −⟨u, b⟩ after scaling u into {‖u‖ ≤ 1, ‖Xᵀu‖∞ ≤ λp1-weight}.
double feasible_dual_objective(const ProblemData& data, const RegularizerSpec& spec, const Eigen::Ref<const Vec>& u);

/// Fills pobj, eta_kkt / eta_kkt_nc and nnz of a result from its β.
void finalize(SolveResult& res, const ProblemData& data, const RegularizerSpec& spec);

}  // namespace metrics

/// Ground truth of a synthetic instance: b = Xβ* + ε.
struct Truth {
  Vec beta_star;
  Vec noise;  // ε, the vector actually added to Xβ*
};

/// Quantities from the oracle analysis of the proximal-regularized convex
/// estimator, specialised to p = ‖·‖₁ (p* = ‖·‖∞; on the complement of the
/// support S, p^{S̄} = ‖·‖₁ and its dual ‖·‖∞).
struct OracleDiagnostics {
  double lambda = 0.0;
  double lambda0 = 0.0;
  double lambda_m = 0.0;
  double n_p = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  double a = 0.0;
  double c_l = 0.0;
  double c_u = 0.0;
  double ratio = 0.0;  // ‖ε̂‖/‖ε‖
  bool assumption_holds = false;
  double inner_bound_lhs = 0.0;
  double inner_bound_rhs = 0.0;
  bool inner_bound_ok = false;
  bool ratio_upper_ok = false;
  bool ratio_bounds_ok = false;  // c_l ≤ ratio ≤ c_u (lower bound only meaningful under the assumption)
  bool lambda_m_ok = false;  // λ₀ ≤ λ_m and ‖β*‖∞ ≤ λ_m
};

namespace metrics {

/// beta_hat must minimise ‖Xβ − b‖ + λ‖β‖₁ + (σ/2)‖β‖² + (τ/2)‖Xβ − b‖².
OracleDiagnostics oracle_diagnostics(const ProblemData& data, const RegularizerSpec& spec,
                                     const Eigen::Ref<const Vec>& beta_hat, const Truth& truth, double sigma,
                                     double tau);

}  // namespace metrics
}  // namespace srreg
