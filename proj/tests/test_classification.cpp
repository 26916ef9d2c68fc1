#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ftlekit/classification.hpp"
#include "ftlekit/error.hpp"
#include "ftlekit/oracle.hpp"

using namespace ftlekit;

namespace {

// Gradient with prescribed singular values and orientation: F = l2 u2 xi2^T + l1 u1 xi1^T.
Mat2 from_svd(double l1, double l2, double theta_xi, double theta_u) {
  const Vec2 xi2{std::cos(theta_xi), std::sin(theta_xi)};
  const Vec2 xi1{xi2.y, -xi2.x};
  const Vec2 u2{std::cos(theta_u), std::sin(theta_u)};
  const Vec2 u1{u2.y, -u2.x};
  return l2 * outer(u2, xi2) + l1 * outer(u1, xi1);
}

}  // namespace

TEST_CASE("pure saddle with a vertical tangent") {
  const double e = std::exp(1.0);
  const PointClassification c = classify_point(Mat2::diag(e, 1.0 / e), {0.0, 1.0});
  CHECK(c.e_l == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(c.n_l == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c.rho == doctest::Approx(e).epsilon(1e-15));
  CHECK(c.rho_l == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c.sigma == 0.0);
  CHECK(c.zero_shear);
  CHECK(std::isinf(c.sigma_l));
  CHECK(c.sigma_l < 0.0);
  CHECK(c.rho_sign() == 1);
  CHECK(c.sigma_sign() == 0);
}

TEST_CASE("simple shear") {
  const PointClassification c = classify_point(Mat2{1.0, 2.0, 0.0, 1.0}, {1.0, 0.0});
  CHECK(c.e_l == 0.0);
  CHECK(c.n_l == doctest::Approx(std::log(std::sqrt(5.0))).epsilon(1e-15));
  CHECK(c.rho == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(c.rho_l) < 1e-15);
  CHECK(c.sigma == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(c.sigma_l == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(c.sigma_sign() == 1);
  CHECK_FALSE(c.zero_shear);
}

TEST_CASE("rotations are isometries for any tangent") {
  for (double th : {0.3, 1.2, -2.5}) {
    for (double a : {0.0, 0.7, 2.0}) {
      const PointClassification c = classify_point(Mat2::rotation(th), {std::cos(a), std::sin(a)});
      CHECK(std::abs(c.e_l) < 1e-15);
      CHECK(std::abs(c.n_l) < 1e-15);
      CHECK(c.rho == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(std::abs(c.sigma) < 1e-15);
    }
  }
}

TEST_CASE("decomposition residual and norm identity on random gradients") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> d(-3.0, 3.0), ang(0.0, 2.0 * M_PI);
  for (int k = 0; k < 1000; ++k) {
    const Mat2 f{d(rng), d(rng), d(rng), d(rng)};
    if (std::abs(f.det()) < 1e-8) continue;
    const double a = ang(rng);
    const Vec2 e0{std::cos(a), std::sin(a)};
    const PointClassification c = classify_point(f, e0);
    const Vec2 fn = f * rot90(e0);
    CHECK(norm(fn - (c.rho * c.n_t + c.sigma * c.e_t)) <= 1e-10 * f.frobenius());
    CHECK(c.rho * c.rho + c.sigma * c.sigma == doctest::Approx(dot(fn, fn)).epsilon(1e-10));
    CHECK(c.rho_l <= c.n_l + 1e-12);
    if (!c.zero_shear) CHECK(c.sigma_l <= c.n_l + 1e-12);
    CHECK(norm(c.e_t) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(cross(c.e_t, c.n_t) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("exact sensitivity formulas agree with direct classification") {
  const double l2 = 10.0;
  std::size_t cases = 0;
  for (double b : {0.0, 0.05, 0.3, 0.5, 0.8, 0.99}) {
    for (double delta : {1e-3, 1e-2, 0.1, 0.5, 1.0}) {
      for (double eps : {0.0, 1e-3, -1e-3, 1e-2}) {
        const double beta = b + eps;
        if (std::abs(beta) > 1.0) continue;
        const Mat2 f = from_svd(delta * l2, l2, 0.4, -1.1);
        const CGTensor cg = cg_tensor(f);
        const Vec2 xi2{std::cos(0.4), std::sin(0.4)}, xi1{xi2.y, -xi2.x};
        const Vec2 e0 = std::sqrt((1.0 - beta) * (1.0 + beta)) * xi1 + beta * xi2;
        const PointClassification c = classify_point(f, e0);
        const SensitivityResult s = sensitivity_exact({b, eps, delta * l2, l2});
        CHECK(c.e_magnitude == doctest::Approx(s.e_magnitude).epsilon(1e-12));
        CHECK(c.n_magnitude == doctest::Approx(s.n_magnitude).epsilon(1e-12));
        CHECK(c.rho == doctest::Approx(s.rho).epsilon(1e-12));
        CHECK(std::abs(c.sigma - s.sigma) <= 1e-12 * l2 * l2);
        if (delta < 1.0 && std::abs(beta) < 1.0) {
          const AlignmentDiagnostic a = alignment_diagnostic(cg, e0);
          CHECK(a.b == doctest::Approx(beta).epsilon(1e-10));
        }
        ++cases;
      }
    }
  }
  CHECK(cases > 100);
  // Near a strainline with delta = 1e-3 a 1e-2 tangent error moves |F e0| by more than 10x.
  const Mat2 f = from_svd(1e-2, 10.0, 0.0, 0.0);
  const PointClassification base = classify_point(f, {0.0, -1.0});
  const PointClassification pert = classify_point(f, normalized(Vec2{1e-2, -1.0}));
  CHECK(std::abs(base.e_magnitude - 1e-2) < 1e-15);
  CHECK(pert.e_magnitude / base.e_magnitude > 10.0);
}

TEST_CASE("metrics are robust away from eigen-alignment") {
  const double eps = 1e-3;
  for (double b : {0.2, 0.5, 0.8}) {
    for (double delta : {0.1, 0.4, 0.9}) {
      const Mat2 f = from_svd(delta * 5.0, 5.0, 0.9, 2.0);
      const Vec2 xi2{std::cos(0.9), std::sin(0.9)}, xi1{xi2.y, -xi2.x};
      const Vec2 e0 = std::sqrt(1.0 - b * b) * xi1 + b * xi2;
      const Vec2 e1 = normalized(e0 + eps * rot90(e0));
      const PointClassification c0 = classify_point(f, e0), c1 = classify_point(f, e1);
      CHECK(std::abs(c1.n_l - c0.n_l) <= 10.0 * eps);
      CHECK(std::abs(c1.e_l - c0.e_l) <= 10.0 * eps);
      CHECK(std::abs(c1.rho_l - c0.rho_l) <= 10.0 * eps);
      CHECK(std::abs(c1.sigma_l - c0.sigma_l) <= 10.0 * eps);
    }
  }
}

TEST_CASE("alignment diagnostic examples") {
  const CGTensor c = cg_from_components(1.0, 0.0, 4.0);
  AlignmentDiagnostic a = alignment_diagnostic(c, {1.0, 0.0});
  CHECK(a.b == 0.0);
  CHECK(a.delta == 0.25);
  CHECK_FALSE(a.strainline_sensitive);
  CHECK_FALSE(a.stretchline_sensitive);

  a = alignment_diagnostic(cg_from_components(1e-4, 0.0, 1e4), {1.0, 0.0});
  CHECK(a.b == 0.0);
  CHECK(a.delta == doctest::Approx(1e-8));
  CHECK(a.strainline_sensitive);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const Mat2 f{d(rng), d(rng), d(rng), d(rng)};
    const CGTensor cg = cg_tensor(f);
    if (cg.isotropic || cg.degenerate) continue;
    const AlignmentDiagnostic s = alignment_diagnostic(cg, cg.xi2);
    CHECK(std::abs(s.b) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.stretchline_sensitive);
    const AlignmentDiagnostic m = alignment_diagnostic(cg, -cg.xi1);
    CHECK(std::abs(m.b) < 1e-12);
  }

  const AlignmentDiagnostic iso = alignment_diagnostic(cg_tensor(Mat2::identity()), {0.0, 1.0});
  CHECK(iso.isotropic);
  CHECK(iso.delta == 1.0);
  CHECK_FALSE(iso.strainline_sensitive);
  CHECK_FALSE(iso.stretchline_sensitive);
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(classify_point(Mat2::identity(), {1.0, 1.0}), Error);
  CHECK_THROWS_AS(classify_point(Mat2{1.0, 2.0, 2.0, 4.0}, {1.0, 0.0}), Error);
  CHECK_THROWS_AS(classify_point(Mat2{NAN, 0.0, 0.0, 1.0}, {1.0, 0.0}), Error);
}

TEST_CASE("ridge classification in trivial flows") {
  Ridge line;
  for (int i = 0; i <= 10; ++i) line.points.push_back({0.0, -0.5 + 0.1 * i});
  line.update_geometry();
  line.state = RidgeState::Refined;

  const LinearField saddle = LinearField::saddle();
  // The cluster spacing is kept well above the absolute tolerance scale at the fixed point.
  const ClassificationProfile p = classify_ridge(line, saddle, 0.0, 1.0, 1e-2, {});
  REQUIRE(p.points.size() == line.size());
  CHECK(p.valid_count() == line.size());
  for (const ProfilePoint& q : p.points) {
    CHECK(q.metrics.e_l == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK(q.metrics.n_l == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(q.metrics.rho_l == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(q.metrics.zero_shear);
    CHECK((q.flags & profile_flag::kZeroShear) != 0);
  }

  const LinearField zero = LinearField::zero();
  for (const ProfilePoint& q : classify_ridge(line, zero, 0.0, 1.0, 1e-4, {}).points) {
    CHECK(q.metrics.e_l == 0.0);
    CHECK(q.metrics.n_l == 0.0);
    CHECK(q.metrics.rho_l == 0.0);
    CHECK(q.metrics.zero_shear);
    CHECK(q.alignment.isotropic);
  }

  const ClassificationProfile ag =
      classify_ridge(line, saddle, 0.0, 1.0, 0.0, {}, GradientMethod::AdvectedGradient);
  CHECK(ag.points[3].metrics.n_l == doctest::Approx(1.0).epsilon(1e-7));

  Ridge adv = line;
  adv.state = RidgeState::Advected;
  CHECK_THROWS_AS(classify_ridge(adv, saddle, 0.0, 1.0, 1e-4, {}), Error);
}

TEST_CASE("points whose cluster leaves the domain are flagged") {
  Ridge line;
  line.points = {{0.0, 0.0}, {0.9, 0.0}};
  line.update_geometry();
  const LinearField saddle = LinearField::saddle({-1.0, 1.0, -1.0, 1.0});
  const ClassificationProfile p = classify_ridge(line, saddle, 0.0, 2.0, 1e-4, {});
  CHECK(p.points[0].valid());
  CHECK_FALSE(p.points[1].valid());
  CHECK(p.valid_count() == 1);
}
