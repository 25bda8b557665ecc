#pragma once

#include "srreg/types.hpp"

#include <string_view>

namespace srreg {

enum class PenaltyKind { L1, SCAD, MCP };

std::string_view to_string(PenaltyKind kind);
PenaltyKind parse_penalty(std::string_view name);  // "l1" | "scad" | "mcp"

/// λ together with the penalty family. The penalty is written as the
/// difference λ·p1(β) − q(β), with p1 = ‖·‖₁ (L1, SCAD) or 2‖·‖₁ (MCP)
/// and q a smooth convex function (q ≡ 0 for L1).
struct RegularizerSpec {
  PenaltyKind kind = PenaltyKind::L1;
  double lambda = 1.0;
  double a_s = 3.7;
  double a_m = 3.7;

  static RegularizerSpec l1(double lambda) { return {PenaltyKind::L1, lambda, 3.7, 3.7}; }
  static RegularizerSpec scad(double lambda, double a = 3.7) { return {PenaltyKind::SCAD, lambda, a, 3.7}; }
  static RegularizerSpec mcp(double lambda, double a = 3.7) { return {PenaltyKind::MCP, lambda, 3.7, a}; }

  void validate() const;

  /// Multiplier c in p1 = c‖·‖₁.
  double p1_scale() const { return kind == PenaltyKind::MCP ? 2.0 : 1.0; }
  /// λ·p1(β) = l1_weight()·‖β‖₁.
  double l1_weight() const { return lambda * p1_scale(); }
  bool is_convex() const { return kind == PenaltyKind::L1; }
};

namespace reg {

double p1_value(const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta);

// Scalar pieces, one coordinate.
double q_scalar(const RegularizerSpec& spec, double t);
double q_grad_scalar(const RegularizerSpec& spec, double t);
double penalty_scalar(const RegularizerSpec& spec, double t);

double q_value(const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta);
Vec q_grad(const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta);

/// λ·p1(β) − q(β).
double penalty_value(const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta);

/// g(β) = ‖Xβ − b‖ + λ·p1(β) − q(β).
double full_objective(const ProblemData& data, const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta);

/// Global minimizer of penalty(t) + (zeta/2)(t − z)² for one coordinate.
/// Each piece of the penalty is a quadratic on an interval; the minimum is
/// taken over the clamped stationary points and breakpoints of all pieces,
/// ties resolved toward smaller |t|.
double nonconvex_prox_scalar(double z, double zeta, const RegularizerSpec& spec);

/// Componentwise Prox_{ζ⁻¹(λp1 − q)}.
Vec nonconvex_prox(const Eigen::Ref<const Vec>& z, double zeta, const RegularizerSpec& spec);

}  // namespace reg
}  // namespace srreg
