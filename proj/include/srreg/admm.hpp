#pragma once

#include "srreg/linalg.hpp"
#include "srreg/metrics.hpp"
#include "srreg/regularizer.hpp"
#include "srreg/types.hpp"


namespace srreg::admm {

/// Fixed: ζ as given. Balance: start at ζ and every adapt_every iterations
/// double (halve) it when the primal residual exceeds 10× the dual residual
/// (and vice versa). Scaled: ζ is multiplied (dADMM) or divided (primal
/// solvers) by the response scale ‖b‖/√m and then kept fixed.
enum class ZetaRule { Fixed, Balance, Scaled };

struct AdmmConfig {
  double zeta = 1.0;
  double step_rho = 1.618;
  int maxit = 10000;
  double tol = 1e-6;
  linalg::NormalMode linear_mode = linalg::NormalMode::Auto;
  ZetaRule zeta_rule = ZetaRule::Fixed;
  int adapt_every = 10;

  void validate() const;
};

/// Optional warm start; absent blocks start at zero.
/// pADMM / nonconvex ADMM: β, y, z, u (multiplier of Xβ − y = b), v (of β = z).
/// dADMM: u, v, w and the multipliers β, y.
struct AdmmStart {
  Vec beta, y, z, u, v, w;
};

/// Per-run residual history (last values are also in the result).
struct AdmmStats {
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double final_zeta = 0.0;
  int pcg_iters_total = 0;
};

/// pADMM and nonconvex ADMM report the z block (the prox output) as β.
SolveResult padmm_solve(const ProblemData& data, const RegularizerSpec& spec, const AdmmConfig& cfg,
                        const AdmmStart* start = nullptr, AdmmStats* stats = nullptr);

SolveResult dadmm_solve(const ProblemData& data, const RegularizerSpec& spec, const AdmmConfig& cfg,
                        const AdmmStart* start = nullptr, AdmmStats* stats = nullptr);

/// Unit-step pADMM with the z-update replaced by the nonconvex prox; returns
/// the iterate with the smallest η̃ seen.
SolveResult admm_nonconvex_solve(const ProblemData& data, const RegularizerSpec& spec, const AdmmConfig& cfg,
                                 const AdmmStart* start = nullptr, AdmmStats* stats = nullptr);

}  // namespace srreg::admm
