#pragma once

#include "srreg/types.hpp"

#include <optional>

namespace srreg::prox {

/// Element of the generalized Jacobian of soft-thresholding: a 0/1 diagonal.
struct JacobianL1 {
  std::vector<bool> active;  // |z_i| > t

  Eigen::Index size() const { return static_cast<Eigen::Index>(active.size()); }
  std::vector<Eigen::Index> active_indices() const;
  Vec apply(const Eigen::Ref<const Vec>& v) const;
};

/// Element of the generalized Jacobian of Prox_{t‖·‖}, stored as
/// scale·I + rank1_coeff·d·dᵀ with ‖d‖ = 1.
struct JacobianNorm {
  double scale = 0.0;
  std::optional<Vec> direction;
  double rank1_coeff = 0.0;

  bool is_zero() const { return scale == 0.0 && rank1_coeff == 0.0; }
  Vec apply(const Eigen::Ref<const Vec>& v) const;
  Mat dense(Eigen::Index m) const;
};

// Prox_{t‖·‖}(x) = (1 − t/‖x‖)₊ x
Vec euclidean_norm(const Eigen::Ref<const Vec>& x, double t);

// Projection onto {‖x‖ ≤ r}.
Vec project_ball(const Eigen::Ref<const Vec>& x, double r);

// Soft-thresholding, Prox_{t‖·‖₁}.
Vec l1(const Eigen::Ref<const Vec>& x, double t);

// Componentwise clamp to [−r, r]; the prox of the conjugate of r‖·‖₁.
Vec project_linf(const Eigen::Ref<const Vec>& x, double r);

/// Clarke Jacobian element of l1(·, t) at z. Ties |z_i| = t map to 0.
JacobianL1 jacobian_l1(const Eigen::Ref<const Vec>& z, double t);

/// Jacobian element of euclidean_norm(·, 1/tau) at u_tilde. Returns the zero
/// element when ‖u_tilde‖ ≤ 1/tau.
JacobianNorm jacobian_norm(const Eigen::Ref<const Vec>& u_tilde, double tau);

}  // namespace srreg::prox
