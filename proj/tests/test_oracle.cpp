#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ftlekit/advection.hpp"
#include "ftlekit/error.hpp"
#include "ftlekit/oracle.hpp"
#include "test_support.hpp"

using namespace ftlekit;
using ftlekit::testing::fd_jacobian;
using ftlekit::testing::rel_frobenius;

namespace {

std::vector<Vec2> interior_points(std::uint64_t seed, std::size_t n) {
  const SwirlField s;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-0.9, 0.9);
  std::vector<Vec2> out;
  while (out.size() < n) {
    const Vec2 a{d(rng), d(rng)};
    if (s.contains(a)) out.push_back(a);
  }
  return out;
}

}  // namespace

TEST_CASE("fixed point and invariant boundary") {
  const Vec2 z = oracle_flow_map({0.0, 0.0}, 3.0);
  CHECK(z.x == 0.0);
  CHECK(z.y == 0.0);
  // Untransformed X1 = 1 is invariant.
  const Vec2 a = swirl_transform({1.0, 0.4});
  const Vec2 x = oracle_flow_map(a, 2.0);
  CHECK(swirl_untransform(x).x == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(oracle_lagrangian(a).x == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("oracle flow map matches an independent integration of the untransformed system") {
  for (const Vec2& a : interior_points(1, 50)) {
    const Vec2 ref = ftlekit::testing::swirl_reference_path(a, 2.0);
    CHECK(norm(oracle_flow_map(a, 2.0) - ref) < 1e-10);
  }
}

TEST_CASE("oracle flow map matches the library integrator") {
  const SwirlField s;
  const auto pts = interior_points(2, 100);
  const auto r = advect_batch(s, pts, 0.0, 2.0, {});
  for (std::size_t k = 0; k < pts.size(); ++k) CHECK(norm(r.positions[k] - oracle_flow_map(pts[k], 2.0)) <= 1e-7);
}

TEST_CASE("oracle gradient matches finite differences of the oracle flow map") {
  for (const Vec2& a : interior_points(3, 100)) {
    auto f = [](const Vec2& p) { return oracle_flow_map(p, 2.0); };
    CHECK(rel_frobenius(oracle_gradient(a, 2.0), fd_jacobian(f, a, 1e-6)) <= 1e-6);
  }
  CHECK(oracle_gradient({0.4, -0.2}, 0.0) == Mat2::identity());
  // At the origin the gradient is the linearization diag(e^T, e^-T).
  const Mat2 g0 = oracle_gradient({0.0, 0.0}, 2.0);
  CHECK(g0(0, 0) == doctest::Approx(std::exp(2.0)).epsilon(1e-14));
  CHECK(g0(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  auto f = [](const Vec2& p) { return oracle_flow_map(p, 2.0); };
  CHECK(rel_frobenius(g0, fd_jacobian(f, {0.0, 0.0}, 1e-7)) <= 1e-6);
}

TEST_CASE("oracle ftle values") {
  CHECK(oracle_ftle({0.0, 0.0}, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(oracle_ftle({0.1, 0.1}, 0.0), Error);
  const OracleResult r = oracle_evaluate({0.2, -0.1}, 2.0);
  CHECK(r.phi == doctest::Approx(std::log(r.cg.lambda2) / 4.0));
  // Short windows approach the largest strain-rate eigenvalue.
  const Vec2 a{0.3, 0.5};
  const Mat2 g = swirl_velocity_gradient(a);
  const Mat2 sym = 0.5 * (g + g.transposed());
  const double smax = cg_largest_eigenvalue(sym(0, 0), sym(0, 1), sym(1, 1));
  CHECK(std::abs(oracle_ftle(a, 1e-6) - smax) < 1e-5);
}

TEST_CASE("blow-up within the window is a domain error") {
  // Outside the invariant square X2 escapes in finite time.
  const Vec2 a = swirl_transform({0.2, 1.2});
  try {
    oracle_flow_map(a, 2.0);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Domain);
  }
  CHECK_NOTHROW(oracle_flow_map(a, 0.1));
}

TEST_CASE("sensitivity exact magnitudes") {
  const SensitivityResult base = sensitivity_exact({0.0, 0.0, 0.1, 10.0});
  CHECK(base.e_magnitude == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(base.rho == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(base.sigma == 0.0);
  CHECK(base.strainline_sensitive);

  const SensitivityResult p = sensitivity_exact({0.0, 0.1, 0.1, 10.0});
  CHECK(p.e_magnitude == doctest::Approx(10.0 * std::sqrt(1e-4 + 0.01 * 0.9999)).epsilon(1e-14));
  CHECK(p.e_magnitude == doctest::Approx(1.00494).epsilon(1e-5));
  CHECK(p.e_magnitude_ratio > 10.0);

  const SensitivityResult s = sensitivity_exact({1.0, 0.0, 0.5, 2.0});
  CHECK(s.e_magnitude == doctest::Approx(2.0));
  CHECK(s.n_magnitude == doctest::Approx(0.5));
  CHECK(s.stretchline_sensitive);

  CHECK_THROWS_AS(sensitivity_exact({0.95, 0.1, 0.1, 1.0}), Error);
  CHECK_THROWS_AS(sensitivity_exact({0.0, 0.0, 2.0, 1.0}), Error);
}

TEST_CASE("oracle ftle field marks nodes outside the region") {
  const FtleField f = oracle_ftle_field({-1.0, -1.0, 0.5, 5, 5}, 2.0);
  CHECK(f.method == GradientMethod::Analytic);
  CHECK(f.flags[0] == NodeFlag::OutOfDomain);
  CHECK(std::isnan(f.phi[0]));
  CHECK(f.at(2, 2) == doctest::Approx(1.0));
}
