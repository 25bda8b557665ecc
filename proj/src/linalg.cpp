#include "srreg/linalg.hpp"

#include <cmath>

namespace srreg::linalg {

Vec times_sparse(const Mat& X, const Eigen::Ref<const Vec>& beta) {
  if (beta.size() != X.cols()) throw DimensionError("times_sparse: length mismatch");
  Eigen::Index nnz = 0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) nnz += beta[j] != 0.0 ? 1 : 0;
  if (4 * nnz >= beta.size()) return X * beta;
  Vec out = Vec::Zero(X.rows());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) out.noalias() += beta[j] * X.col(j);
  }
  return out;
}

double spectral_norm(const Mat& X, int iters) {
  Vec v = Vec::Ones(X.cols()) / std::sqrt(static_cast<double>(X.cols()));
  double est = 0.0;
  for (int k = 0; k < iters; ++k) {
    const Vec w = X.transpose() * (X * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    est = std::sqrt(nw);
    v = w / nw;
  }
  return est;
}

CachedFactorization::CachedFactorization(const Mat& X, NormalMode mode) : X_(&X), mode_(mode) {
  if (mode_ == NormalMode::Auto) mode_ = X.cols() <= X.rows() ? NormalMode::CholN : NormalMode::CholM;
  switch (mode_) {
    case NormalMode::CholN: {
      Mat A = X.transpose() * X;
      A.diagonal().array() += 1.0;
      llt_.compute(A);
      break;
    }
    case NormalMode::CholM: {
      Mat A = X * X.transpose();
      A.diagonal().array() += 1.0;
      llt_.compute(A);
      break;
    }
    case NormalMode::PCG:
      diag_n_ = (X.colwise().squaredNorm().transpose().array() + 1.0).matrix();
      diag_m_ = (X.rowwise().squaredNorm().array() + 1.0).matrix();
      return;
    case NormalMode::Auto: break;
  }
  if (llt_.info() != Eigen::Success) throw Error("Cholesky factorization of the regularized normal matrix failed");
}

bool CachedFactorization::uses_smw(NormalSystem system) const {
  return (system == NormalSystem::Primal && mode_ == NormalMode::CholM) ||
         (system == NormalSystem::Dual && mode_ == NormalMode::CholN);
}

Vec CachedFactorization::solve(NormalSystem system, const Eigen::Ref<const Vec>& rhs) const {
  const Mat& X = *X_;
  const Eigen::Index want = system == NormalSystem::Primal ? X.cols() : X.rows();
  if (rhs.size() != want) throw DimensionError("solve_regularized_normal: rhs length mismatch");
  if (mode_ == NormalMode::PCG) return solve(system, rhs, Vec::Zero(want), 1e-12);
  if (!uses_smw(system)) return llt_.solve(rhs);
  if (system == NormalSystem::Primal) {
    const Vec t = llt_.solve(X * rhs);
    return rhs - X.transpose() * t;
  }
  const Vec t = llt_.solve(X.transpose() * rhs);
  return rhs - X * t;
}

Vec CachedFactorization::solve(NormalSystem system, const Eigen::Ref<const Vec>& rhs, const Vec& x0, double rel_tol,
                               int* iters) const {
  if (mode_ != NormalMode::PCG) {
    if (iters) *iters = 0;
    return solve(system, rhs);
  }
  const Mat& X = *X_;
  const bool primal = system == NormalSystem::Primal;
  auto apply = [&](const Vec& v) -> Vec {
    return primal ? Vec(v + X.transpose() * (X * v)) : Vec(v + X * (X.transpose() * v));
  };
  const Vec& dinv_src = primal ? diag_n_ : diag_m_;
  const Vec dinv = dinv_src.cwiseInverse();
  Vec x = x0.size() == rhs.size() ? x0 : Vec::Zero(rhs.size());
  Vec r = rhs - apply(x);
  const double stop = rel_tol * std::max(rhs.norm(), 1e-300);
  Vec z = dinv.cwiseProduct(r);
  Vec d = z;
  double rz = r.dot(z);
  int k = 0;
  const int kmax = static_cast<int>(rhs.size()) * 2 + 10;
  while (r.norm() > stop && k < kmax) {
    const Vec ad = apply(d);
    const double step = rz / d.dot(ad);
    x += step * d;
    r -= step * ad;
    z = dinv.cwiseProduct(r);
    const double rz_new = r.dot(z);
    d = z + (rz_new / rz) * d;
    rz = rz_new;
    ++k;
  }
  if (iters) *iters = k;
  return x;
}

Vec solve_regularized_normal(const Mat& X, NormalSystem system, const Eigen::Ref<const Vec>& rhs, NormalMode mode) {
  return CachedFactorization(X, mode).solve(system, rhs);
}

}  // namespace srreg::linalg
