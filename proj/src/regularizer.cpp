#include "srreg/regularizer.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace srreg {

std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::L1: return "l1";
    case PenaltyKind::SCAD: return "scad";
    case PenaltyKind::MCP: return "mcp";
  }
  return "unknown";
}

PenaltyKind parse_penalty(std::string_view name) {
  if (name == "l1") return PenaltyKind::L1;
  if (name == "scad") return PenaltyKind::SCAD;
  if (name == "mcp") return PenaltyKind::MCP;
  throw Error("unknown regularizer '" + std::string(name) + "' (expected l1, scad or mcp)");
}

void RegularizerSpec::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error("lambda must be positive");
  if (kind == PenaltyKind::SCAD && !(a_s > 2.0)) throw Error("SCAD requires a_s > 2");
  if (kind == PenaltyKind::MCP && !(a_m > 2.0)) throw Error("MCP requires a_m > 2");
}

namespace reg {

namespace {

// One piece of the penalty on [lo, hi] for t ≥ 0: c0 + c1·t + c2·t².
struct Piece {
  double lo, hi, c0, c1, c2;
};

struct Pieces {
  std::array<Piece, 3> items{};
  int count = 0;
};

Pieces penalty_pieces(const RegularizerSpec& spec) {
  const double lam = spec.lambda;
  const double inf = std::numeric_limits<double>::infinity();
  Pieces p;
  switch (spec.kind) {
    case PenaltyKind::L1:
      p.items[0] = {0.0, inf, 0.0, lam, 0.0};
      p.count = 1;
      break;
    case PenaltyKind::SCAD: {
      const double a = spec.a_s;
      p.items[0] = {0.0, lam, 0.0, lam, 0.0};
      // λt − (t − λ)²/(2(a−1))
      p.items[1] = {lam, a * lam, -lam * lam / (2.0 * (a - 1.0)), lam + lam / (a - 1.0), -1.0 / (2.0 * (a - 1.0))};
      p.items[2] = {a * lam, inf, (a + 1.0) * lam * lam / 2.0, 0.0, 0.0};
      p.count = 3;
      break;
    }
    case PenaltyKind::MCP: {
      const double a = spec.a_m;
      // 2λt − t²/a
      p.items[0] = {0.0, a * lam, 0.0, 2.0 * lam, -1.0 / a};
      p.items[1] = {a * lam, inf, a * lam * lam, 0.0, 0.0};
      p.count = 2;
      break;
    }
  }
  return p;
}

}  // namespace

double p1_value(const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta) {
  return spec.p1_scale() * beta.lpNorm<1>();
}

double q_scalar(const RegularizerSpec& spec, double t) {
  const double lam = spec.lambda;
  const double at = std::abs(t);
  switch (spec.kind) {
    case PenaltyKind::L1: return 0.0;
    case PenaltyKind::SCAD: {
      const double a = spec.a_s;
      if (at <= lam) return 0.0;
      if (at <= a * lam) return (at - lam) * (at - lam) / (2.0 * (a - 1.0));
      return lam * at - (a + 1.0) / 2.0 * lam * lam;
    }
    case PenaltyKind::MCP: {
      const double a = spec.a_m;
      if (at <= a * lam) return t * t / a;
      return 2.0 * lam * at - a * lam * lam;
    }
  }
  return 0.0;
}

double q_grad_scalar(const RegularizerSpec& spec, double t) {
  const double lam = spec.lambda;
  const double at = std::abs(t);
  const double sgn = t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
  switch (spec.kind) {
    case PenaltyKind::L1: return 0.0;
    case PenaltyKind::SCAD: {
      const double a = spec.a_s;
      if (at <= lam) return 0.0;
      if (at <= a * lam) return sgn * (at - lam) / (a - 1.0);
      return lam * sgn;
    }
    case PenaltyKind::MCP: {
      const double a = spec.a_m;
      if (at <= a * lam) return 2.0 * t / a;
      return 2.0 * lam * sgn;
    }
  }
  return 0.0;
}

double penalty_scalar(const RegularizerSpec& spec, double t) {
  return spec.l1_weight() * std::abs(t) - q_scalar(spec, t);
}

double q_value(const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta) {
  if (spec.kind == PenaltyKind::L1) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) s += q_scalar(spec, beta[i]);
  return s;
}

Vec q_grad(const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta) {
  Vec g(beta.size());
  for (Eigen::Index i = 0; i < beta.size(); ++i) g[i] = q_grad_scalar(spec, beta[i]);
  return g;
}

double penalty_value(const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta) {
  return spec.lambda * p1_value(spec, beta) - q_value(spec, beta);
}

double full_objective(const ProblemData& data, const RegularizerSpec& spec, const Eigen::Ref<const Vec>& beta) {
  if (beta.size() != data.n()) throw DimensionError("full_objective: beta length does not match X columns");
  return (data.X * beta - data.b).norm() + penalty_value(spec, beta);
}

double nonconvex_prox_scalar(double z, double zeta, const RegularizerSpec& spec) {
  if (!(zeta > 0.0)) throw Error("nonconvex_prox: zeta must be positive");
  if (z == 0.0) return 0.0;
  if (spec.kind == PenaltyKind::L1) {
    const double a = std::abs(z) - spec.lambda / zeta;
    return a > 0.0 ? std::copysign(a, z) : 0.0;
  }
  const double az = std::abs(z);
  // Work on t ≥ 0 against |z|; the minimizer carries the sign of z.
  auto objective = [&](double t) {
    return penalty_scalar(spec, t) + 0.5 * zeta * (t - az) * (t - az);
  };

  double best_t = 0.0;
  double best_f = objective(0.0);
  auto consider = [&](double t) {
    const double f = objective(t);
    const double tol = 1e-12 * (1.0 + std::abs(best_f));
    if (f < best_f - tol || (std::abs(f - best_f) <= tol && t < best_t)) {
      best_t = t;
      best_f = f;
    }
  };

  const Pieces pieces = penalty_pieces(spec);
  for (int k = 0; k < pieces.count; ++k) {
    const Piece& p = pieces.items[static_cast<std::size_t>(k)];
    const double curvature = 2.0 * p.c2 + zeta;
    if (curvature > 0.0) {
      double t = (zeta * az - p.c1) / curvature;
      t = std::min(std::max(t, p.lo), p.hi);
      consider(t);
    } else if (!std::isfinite(p.hi)) {
      throw Error("nonconvex_prox: objective unbounded below on the last piece");
    }
    consider(p.lo);
    if (std::isfinite(p.hi)) consider(p.hi);
  }
  return best_t == 0.0 ? 0.0 : std::copysign(best_t, z);
}

Vec nonconvex_prox(const Eigen::Ref<const Vec>& z, double zeta, const RegularizerSpec& spec) {
  Vec out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = nonconvex_prox_scalar(z[i], zeta, spec);
  return out;
}

}  // namespace reg
}  // namespace srreg
