#include "srreg/prox.hpp"

#include <cmath>

namespace srreg::prox {

namespace {

void require_positive(double t, const char* what) {
  if (!(t > 0.0) || !std::isfinite(t)) throw Error(std::string(what) + " must be positive and finite");
}

}  // namespace

std::vector<Eigen::Index> JacobianL1::active_indices() const {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (active[i]) idx.push_back(static_cast<Eigen::Index>(i));
  }
  return idx;
}

Vec JacobianL1::apply(const Eigen::Ref<const Vec>& v) const {
  if (v.size() != size()) throw DimensionError("JacobianL1::apply: length mismatch");
  Vec out = Vec::Zero(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (active[static_cast<std::size_t>(i)]) out[i] = v[i];
  }
  return out;
}

Vec JacobianNorm::apply(const Eigen::Ref<const Vec>& v) const {
  Vec out = scale * v;
  if (direction && rank1_coeff != 0.0) out += (rank1_coeff * direction->dot(v)) * *direction;
  return out;
}

Mat JacobianNorm::dense(Eigen::Index m) const {
  Mat out = scale * Mat::Identity(m, m);
  if (direction && rank1_coeff != 0.0) out += rank1_coeff * (*direction) * direction->transpose();
  return out;
}

Vec euclidean_norm(const Eigen::Ref<const Vec>& x, double t) {
  require_positive(t, "prox parameter");
  const double nx = x.norm();
  if (nx <= t) return Vec::Zero(x.size());
  return (1.0 - t / nx) * x;
}

Vec project_ball(const Eigen::Ref<const Vec>& x, double r) {
  require_positive(r, "ball radius");
  const double nx = x.norm();
  if (nx <= r) return x;
  return (r / nx) * x;
}

Vec l1(const Eigen::Ref<const Vec>& x, double t) {
  require_positive(t, "prox parameter");
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]) - t;
    out[i] = a > 0.0 ? std::copysign(a, x[i]) : 0.0;
  }
  return out;
}

Vec project_linf(const Eigen::Ref<const Vec>& x, double r) {
  require_positive(r, "box radius");
  return x.cwiseMax(-r).cwiseMin(r);
}

JacobianL1 jacobian_l1(const Eigen::Ref<const Vec>& z, double t) {
  require_positive(t, "prox parameter");
  JacobianL1 jac;
  jac.active.resize(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) jac.active[static_cast<std::size_t>(i)] = std::abs(z[i]) > t;
  return jac;
}

JacobianNorm jacobian_norm(const Eigen::Ref<const Vec>& u_tilde, double tau) {
  require_positive(tau, "tau");
  const double nu = u_tilde.norm();
  JacobianNorm jac;
  if (nu * tau <= 1.0) return jac;
  jac.scale = 1.0 - 1.0 / (tau * nu);
  jac.direction = u_tilde / nu;
  jac.rank1_coeff = 1.0 / (tau * nu);
  return jac;
}

}  // namespace srreg::prox
