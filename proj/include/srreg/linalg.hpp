#pragma once

#include "srreg/types.hpp"

#include <memory>

namespace srreg::linalg {

/// X·β that skips zero coefficients when β is sparse.
Vec times_sparse(const Mat& X, const Eigen::Ref<const Vec>& beta);

/// Operator norm estimate ‖X‖₂ by power iteration on XᵀX.
double spectral_norm(const Mat& X, int iters = 50);

enum class NormalMode { Auto, CholN, CholM, PCG };

/// Which system solve_regularized_normal solves.
enum class NormalSystem { Primal /* I_n + XᵀX */, Dual /* I_m + XXᵀ */ };

/// Cached Cholesky factor of I_n + XᵀX or I_m + XXᵀ. Either system can be
/// solved from either factor through the Sherman-Morrison-Woodbury identities
///
///   (I_n + XᵀX)⁻¹ = I_n − Xᵀ(I_m + XXᵀ)⁻¹X
///   (I_m + XXᵀ)⁻¹ = I_m − X(I_n + XᵀX)⁻¹Xᵀ
///
/// In PCG mode nothing is factored; systems are solved by diagonally
/// preconditioned conjugate gradients to a caller-provided relative tolerance.
class CachedFactorization {
 public:
  CachedFactorization(const Mat& X, NormalMode mode);

  NormalMode mode() const { return mode_; }
  /// True when the requested system is answered through the other factor.
  bool uses_smw(NormalSystem system) const;

  Vec solve(NormalSystem system, const Eigen::Ref<const Vec>& rhs) const;
  /// PCG variant with warm start; falls back to the factor when one exists.
  Vec solve(NormalSystem system, const Eigen::Ref<const Vec>& rhs, const Vec& x0, double rel_tol,
            int* iters = nullptr) const;

 private:
  const Mat* X_;
  NormalMode mode_;
  Eigen::LLT<Mat> llt_;
  Vec diag_n_;  // diagonal of I_n + XᵀX
  Vec diag_m_;  // diagonal of I_m + XXᵀ
};

/// Solves (I + XᵀX)x = rhs or (I + XXᵀ)x = rhs through the smaller factor.
Vec solve_regularized_normal(const Mat& X, NormalSystem system, const Eigen::Ref<const Vec>& rhs,
                             NormalMode mode = NormalMode::Auto);

}  // namespace srreg::linalg
