#include "srreg/prox.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace srreg;
using testutil::randn;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Numerical Jacobian of f at x by central differences.
template <typename F>
Mat numerical_jacobian(F f, const Vec& x, double h = 1e-6) {
  const Eigen::Index n = x.size();
  Mat J(f(x).size(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (f(xp) - f(xm)) / (2 * h);
  }
  return J;
}

}  // namespace

TEST_CASE("euclidean norm prox: fixed examples") {
  CHECK((prox::euclidean_norm(vec({3, 4}), 1.0) - vec({2.4, 3.2})).norm() < 1e-15);
  CHECK(prox::euclidean_norm(vec({0.3, 0.4}), 1.0).norm() == 0.0);
  CHECK(prox::euclidean_norm(Vec::Zero(3), 2.0).norm() == 0.0);
}

TEST_CASE("euclidean norm prox matches a radial line search") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Vec x = randn(rng, 20);
    const double t = 0.7;
    // minimiser is s·x for s ∈ [0, 1]
    auto f = [&](double s) { return t * std::abs(s) * x.norm() + 0.5 * ((s - 1.0) * x).squaredNorm(); };
    const double s = testutil::golden_min(f, 0.0, 1.0);
    CHECK((prox::euclidean_norm(x, t) - s * x).norm() < 1e-7);
  }
}

TEST_CASE("projections: fixed examples") {
  CHECK((prox::project_ball(vec({0, 2}), 1.0) - vec({0, 1})).norm() == 0.0);
  CHECK((prox::project_ball(vec({0.5, 0}), 1.0) - vec({0.5, 0})).norm() == 0.0);
  CHECK((prox::project_linf(vec({2, -3, 0.1}), 1.0) - vec({1, -1, 0.1})).norm() == 0.0);
  const Vec inside = vec({0.2, -0.3});
  CHECK(prox::project_linf(inside, 1.0) == inside);
}

TEST_CASE("soft thresholding: fixed examples") {
  CHECK((prox::l1(vec({2, -0.5}), 1.0) - vec({1, 0})).norm() == 0.0);
  CHECK(prox::l1(Vec::Zero(3), 0.3).norm() == 0.0);
}

TEST_CASE("Moreau identities") {
  std::mt19937_64 rng(3);
  for (double t : {0.1, 1.0, 10.0}) {
    for (int rep = 0; rep < 50; ++rep) {
      const Vec x = randn(rng, 15, 3.0);
      CHECK((prox::euclidean_norm(x, t) + prox::project_ball(x, t) - x).lpNorm<Eigen::Infinity>() < 1e-12);
      CHECK((prox::l1(x, t) + prox::project_linf(x, t) - x).lpNorm<Eigen::Infinity>() < 1e-12);
    }
  }
}

TEST_CASE("prox maps are nonexpansive") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const Vec x = randn(rng, 10, 2.0), y = randn(rng, 10, 2.0);
    const double t = testutil::uniform(rng, 0.1, 3.0);
    const double d = (x - y).norm() + 1e-14;
    CHECK((prox::euclidean_norm(x, t) - prox::euclidean_norm(y, t)).norm() <= d);
    CHECK((prox::l1(x, t) - prox::l1(y, t)).norm() <= d);
    CHECK((prox::project_ball(x, t) - prox::project_ball(y, t)).norm() <= d);
    CHECK((prox::project_linf(x, t) - prox::project_linf(y, t)).norm() <= d);
  }
}

TEST_CASE("l1 Jacobian: mask, tie and finite differences") {
  auto j = prox::jacobian_l1(vec({2, 0.5}), 1.0);
  CHECK(j.active == std::vector<bool>{true, false});
  j = prox::jacobian_l1(vec({1, -1}), 1.0);
  CHECK(j.active == std::vector<bool>{false, false});
  CHECK(j.active_indices().empty());

  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const Vec z = randn(rng, 12, 2.0);
    const double t = 0.8;
    if (((z.array().abs() - t).abs() < 1e-3).any()) continue;
    const Mat J = numerical_jacobian([&](const Vec& x) { return prox::l1(x, t); }, z);
    const auto jl = prox::jacobian_l1(z, t);
    for (Eigen::Index i = 0; i < z.size(); ++i) CHECK(J(i, i) == doctest::Approx(jl.active[i] ? 1.0 : 0.0).epsilon(1e-6));
    const Vec v = randn(rng, 12);
    CHECK((jl.apply(v) - J * v).norm() < 1e-6);
  }
}

TEST_CASE("norm Jacobian: fixed examples") {
  const auto j = prox::jacobian_norm(vec({2, 0}), 1.0);
  CHECK(j.scale == doctest::Approx(0.5));
  REQUIRE(j.direction.has_value());
  CHECK((*j.direction - vec({1, 0})).norm() < 1e-15);
  CHECK(j.rank1_coeff == doctest::Approx(0.5));
  Mat expect = Mat::Zero(2, 2);
  expect(0, 0) = 1.0;
  expect(1, 1) = 0.5;
  CHECK((j.dense(2) - expect).norm() < 1e-15);

  const auto z = prox::jacobian_norm(vec({0.5, 0}), 1.0);
  CHECK(z.is_zero());
  CHECK(prox::jacobian_norm(vec({1.0, 0}), 1.0).is_zero());  // boundary
}

TEST_CASE("norm Jacobian matches finite differences and has spectrum in [0, 1]") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 30; ++rep) {
    const double tau = testutil::uniform(rng, 0.2, 5.0);
    Vec u = randn(rng, 8);
    u *= (1.0 / tau) * testutil::uniform(rng, 1.2, 4.0) / u.norm();
    const auto jn = prox::jacobian_norm(u, tau);
    REQUIRE(jn.direction.has_value());
    CHECK(std::abs(jn.direction->norm() - 1.0) < 1e-12);
    const Mat J = numerical_jacobian([&](const Vec& x) { return prox::euclidean_norm(x, 1.0 / tau); }, u);
    const Vec v = randn(rng, 8);
    CHECK((jn.apply(v) - J * v).norm() < 1e-5 * (1.0 + v.norm()));
    CHECK((jn.dense(8) - J).norm() < 1e-5);
    const double q = v.dot(jn.apply(v));
    CHECK(q > 0.0);
    CHECK(q <= v.squaredNorm() * (1.0 + 1e-12));
  }
}

TEST_CASE("Jacobian first-order accuracy along shrinking steps") {
  std::mt19937_64 rng(13);
  const Vec z = randn(rng, 10, 2.0);
  const Vec d = randn(rng, 10);
  const double t = 0.5;
  const auto jl = prox::jacobian_l1(z, t);
  Vec u = z * (3.0 / z.norm());
  const auto jn = prox::jacobian_norm(u, 1.0);
  double prev_n = 1.0;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    const double e1 = (prox::l1(z + h * d, t) - prox::l1(z, t) - h * jl.apply(d)).norm() / h;
    const double e2 = (prox::euclidean_norm(u + h * d, 1.0) - prox::euclidean_norm(u, 1.0) - h * jn.apply(d)).norm() / h;
    CHECK(e1 <= 1e-10);  // soft-thresholding is affine between kinks
    CHECK(e2 <= prev_n);
    prev_n = e2;
  }
  CHECK(prev_n < 1e-3);
}
