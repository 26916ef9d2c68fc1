#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ftlekit/advection.hpp"
#include "ftlekit/error.hpp"
#include "ftlekit/oracle.hpp"
#include "ftlekit/ridge.hpp"
#include "test_support.hpp"

using namespace ftlekit;
using ftlekit::testing::synthetic_ftle;

namespace {

const GridGeometry kGrid{-1.0, -1.0, 0.02, 101, 101};

double gaussian_y(const Vec2& p) { return 2.0 * std::exp(-p.y * p.y); }
double ring(const Vec2& p) {
  const double d = norm(p) - 0.5;
  return std::exp(-50.0 * d * d);
}

PhiEvaluator analytic(double (*f)(const Vec2&)) {
  return [f](std::span<const Vec2> pts) {
    std::vector<double> v;
    v.reserve(pts.size());
    for (const Vec2& p : pts) v.push_back(f(p));
    return v;
  };
}

Ridge straight_ridge(double y, std::size_t n) {
  Ridge r;
  for (std::size_t i = 0; i < n; ++i) r.points.push_back({-0.9 + 1.8 * static_cast<double>(i) / (n - 1), y});
  r.update_geometry();
  return r;
}

}  // namespace

TEST_CASE("parabola vertex offsets") {
  CHECK(parabola_vertex(0.9, 1.0, 0.9, 0.1) == 0.0);
  CHECK(parabola_vertex(0.8, 1.0, 0.9, 0.3) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(parabola_vertex(0.9, 1.0, 0.8, 0.3) == doctest::Approx(-0.05).epsilon(1e-14));
}

TEST_CASE("constant field has no seeds and no ridges") {
  const FtleField f = synthetic_ftle(kGrid, [](const Vec2&) { return 1.5; });
  RidgeTrackerConfig cfg;
  cfg.seed_threshold = 0.0;
  CHECK(find_seeds(f, cfg).empty());
  CHECK(extract_ridges(f, cfg).empty());
}

TEST_CASE("gaussian ridge: one seed per vertical line at y = 0") {
  const FtleField f = synthetic_ftle(kGrid, gaussian_y);
  RidgeTrackerConfig cfg;
  cfg.seed_threshold = 1.0;
  const auto seeds = find_seeds(f, cfg);
  CHECK(seeds.size() == 11);
  for (const Seed& s : seeds) {
    CHECK(s.line_direction.y == 1.0);
    CHECK(std::abs(s.position.y) < 1e-12);
  }
}

TEST_CASE("gaussian ridge tracking follows y = 0 across the domain") {
  const FtleField f = synthetic_ftle(kGrid, gaussian_y);
  RidgeTrackerConfig cfg;
  cfg.seed_threshold = 1.0;
  const auto ridges = extract_ridges(f, cfg);
  REQUIRE(ridges.size() == 1);
  const Ridge& r = ridges[0];
  CHECK(r.state == RidgeState::Tracked);
  CHECK(std::min(r.points.front().x, r.points.back().x) < -0.95);
  CHECK(std::max(r.points.front().x, r.points.back().x) > 0.95);
  CHECK(r.stop_start == StopReason::DomainExit);
  CHECK(r.stop_end == StopReason::DomainExit);
  const double step = 2.0 * kGrid.spacing;
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(std::abs(r.points[i].y) < 1e-10);
    CHECK(std::abs(r.tangent[i].y) < 1e-8);
    CHECK(norm(r.tangent[i]) == doctest::Approx(1.0));
    CHECK(cross(r.tangent[i], r.normal[i]) == doctest::Approx(1.0));
    if (i > 0) CHECK(norm(r.points[i] - r.points[i - 1]) <= 2.0 * step);
  }
  CHECK(r.s.front() == 0.0);
  CHECK(r.s.back() == 1.0);
}

TEST_CASE("tilted ridge is followed within interpolation error") {
  const double a = 0.3;
  const FtleField f = synthetic_ftle(kGrid, [a](const Vec2& p) {
    const double d = p.y - a * p.x;
    return 2.0 * std::exp(-4.0 * d * d);
  });
  RidgeTrackerConfig cfg;
  cfg.seed_threshold = 1.0;
  for (InitialStep mode : {InitialStep::Gradient, InitialStep::GradientNormal}) {
    cfg.initial = mode;
    const auto ridges = extract_ridges(f, cfg);
    REQUIRE(ridges.size() == 1);
    CHECK(ridges[0].length() > 1.8);
    for (const Vec2& p : ridges[0].points) CHECK(std::abs(p.y - a * p.x) < 1e-3);
  }
}

TEST_CASE("stop reasons are recorded at both ends") {
  // Ridge along y = 0 fading in x: stops below threshold.
  const FtleField fade = synthetic_ftle(kGrid, [](const Vec2& p) { return 2.0 * std::exp(-4.0 * p.y * p.y - p.x * p.x); });
  RidgeTrackerConfig cfg;
  cfg.seed_threshold = 1.9;
  cfg.stop_threshold = 1.0;
  auto ridges = extract_ridges(fade, cfg);
  REQUIRE(ridges.size() == 1);
  CHECK(ridges[0].stop_start == StopReason::BelowThreshold);
  CHECK(ridges[0].stop_end == StopReason::BelowThreshold);
  for (const Vec2& p : ridges[0].points) CHECK(std::abs(p.x) < std::sqrt(std::log(2.0)) + 0.05);

  // Closed ring: the walk closes on its own seed.
  const FtleField rf = synthetic_ftle(kGrid, ring);
  RidgeTrackerConfig rc;
  rc.seed_threshold = 0.5;
  ridges = extract_ridges(rf, rc);
  REQUIRE(ridges.size() == 1);
  CHECK(ridges[0].stop_end == StopReason::Collision);
  CHECK(ridges[0].stop_start != StopReason::None);
  for (const Vec2& p : ridges[0].points) CHECK(std::abs(norm(p) - 0.5) < 2e-3);

  // Point budget.
  rc.max_points = 10;
  ridges = extract_ridges(rf, rc);
  REQUIRE(!ridges.empty());
  CHECK(ridges[0].size() == 10);
  CHECK((ridges[0].stop_start == StopReason::MaxPoints || ridges[0].stop_end == StopReason::MaxPoints));
}

TEST_CASE("refinement is a fixed point on the exact ridge") {
  const Ridge r = straight_ridge(0.0, 21);
  RefinementSchedule sched;
  sched.initial_window = 0.05;
  const Ridge out = refine_ridge(r, analytic(gaussian_y), sched);
  CHECK(out.state == RidgeState::Refined);
  CHECK(out.schedule == sched);
  REQUIRE(out.size() == r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(out.points[i] == r.points[i]);
    CHECK(out.phi[i] == 2.0);
  }
}

TEST_CASE("refinement of a perturbed ring converges to the ridge") {
  Ridge r;
  const std::size_t n = 80;
  for (std::size_t i = 0; i < n; ++i) {
    const double th = 2.0 * M_PI * static_cast<double>(i) / n;
    const double rad = 0.5 + (i % 2 == 0 ? 0.01 : -0.01);
    r.points.push_back({rad * std::cos(th), rad * std::sin(th)});
  }
  r.update_geometry();
  RefinementSchedule sched;
  sched.initial_window = 0.05;
  sched.final_window = 1e-5;
  const auto eval = analytic(ring);
  const std::vector<double> before = ridge_phi(r, eval);
  const Ridge out = refine_ridge(r, eval, sched);
  REQUIRE(out.size() == n);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(std::abs(norm(out.points[i]) - 0.5) <= 2.0 * sched.final_window);
    CHECK(out.phi[i] >= before[i]);
    CHECK(out.flags[i] == 0);
  }
}

TEST_CASE("refined interior points are discrete normal maxima") {
  const FtleField f = synthetic_ftle(kGrid, ring);
  RidgeTrackerConfig cfg;
  cfg.seed_threshold = 0.5;
  const auto tracked = extract_ridges(f, cfg);
  REQUIRE(tracked.size() == 1);
  RefinementSchedule sched;
  sched.initial_window = kGrid.spacing;
  const auto eval = analytic(ring);
  const Ridge out = refine_ridge(tracked[0], eval, sched);
  const std::vector<double> t = ridge_phi(tracked[0], eval);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out.phi[i] >= t[i]);
    if (i == 0 || i + 1 == out.size()) continue;
    CHECK(out.phi[i] >= ring(out.points[i] + sched.final_window * out.normal[i]));
    CHECK(out.phi[i] >= ring(out.points[i] - sched.final_window * out.normal[i]));
  }
}

TEST_CASE("refinement window is capped near other ridges") {
  // Two parallel ridges 0.1 apart; a window reaching the stronger one must not jump.
  auto two = [](const Vec2& p) {
    return std::exp(-2000.0 * p.y * p.y) + 1.5 * std::exp(-2000.0 * (p.y - 0.1) * (p.y - 0.1));
  };
  const PhiEvaluator eval = [two](std::span<const Vec2> pts) {
    std::vector<double> v;
    for (const Vec2& p : pts) v.push_back(two(p));
    return v;
  };
  const Ridge low = straight_ridge(0.0, 11), high = straight_ridge(0.1, 11);
  RefinementSchedule sched;
  sched.initial_window = 0.2;
  const std::vector<Ridge> both{low, high};
  const auto out = refine_ridges(both, eval, sched);
  for (const Vec2& p : out[0].points) CHECK(std::abs(p.y) < 1e-4);
  for (const Vec2& p : out[1].points) CHECK(std::abs(p.y - 0.1) < 1e-4);
  // Without the neighbour the lower ridge is captured by the stronger one.
  const Ridge alone = refine_ridge(low, eval, sched);
  CHECK(std::abs(alone.points[5].y - 0.1) < 1e-4);
}

TEST_CASE("crossing normal windows freeze the affected points") {
  Ridge r;
  r.points = {{0.0, 0.0}, {0.01, 0.0}, {0.01, 0.01}, {0.0, 0.01}};
  r.update_geometry();
  RefinementSchedule sched;
  sched.initial_window = 0.5;
  const Ridge out = refine_ridge(r, analytic(gaussian_y), sched);
  bool any = false;
  for (auto f : out.flags) any = any || (f & ridge_flag::kFrozen);
  CHECK(any);
}

TEST_CASE("failed evaluations are flagged") {
  const PhiEvaluator nan_eval = [](std::span<const Vec2> pts) {
    return std::vector<double>(pts.size(), std::numeric_limits<double>::quiet_NaN());
  };
  RefinementSchedule sched;
  sched.initial_window = 0.05;
  const Ridge out = refine_ridge(straight_ridge(0.0, 5), nan_eval, sched);
  for (auto f : out.flags) CHECK((f & ridge_flag::kEvalFailed) != 0);
  const PhiEvaluator short_eval = [](std::span<const Vec2>) { return std::vector<double>{}; };
  CHECK_THROWS_AS(refine_ridge(straight_ridge(0.0, 5), short_eval, sched), Error);
}

TEST_CASE("advection of ridges") {
  Ridge r = straight_ridge(0.2, 9);
  r.state = RidgeState::Refined;
  const LinearField zero = LinearField::zero();
  const Ridge same = advect_ridge(r, zero, 0.0, 1.0, {});
  CHECK(same.state == RidgeState::Advected);
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(same.points[i] == r.points[i]);
    CHECK(same.flags[i] == 0);
  }

  const SwirlField s;
  const Ridge moved = advect_ridge(r, s, 0.0, 1.0, {});
  const auto direct = advect_batch(s, r.points, 0.0, 1.0, {});
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(moved.points[i] == direct.positions[i]);
  CHECK(moved.s.back() == 1.0);

  Ridge tracked = r;
  tracked.state = RidgeState::Tracked;
  for (auto f : advect_ridge(tracked, s, 0.0, 1.0, {}).flags) CHECK((f & ridge_flag::kUnrefined) != 0);

  // A point leaving the sampling region is frozen and flagged, order kept.
  const LinearField saddle = LinearField::saddle({-1.0, 1.0, -1.0, 1.0});
  const Ridge out = advect_ridge(straight_ridge(0.0, 5), saddle, 0.0, 3.0, {});
  REQUIRE(out.size() == 5);
  CHECK((out.flags.front() & ridge_flag::kOutOfDomain) != 0);
  CHECK(out.flags[2] == ridge_flag::kUnrefined);
}

TEST_CASE("swirl ftle: seeds on the central and both boundary ridges") {
  const FtleField f = oracle_ftle_field(GridGeometry{-1.0, -1.0, 0.01, 201, 201}, 2.0);
  const auto seeds = find_seeds(f, {});
  bool central = false, top = false, bottom = false;
  for (const Seed& s : seeds) {
    const Vec2 X = swirl_untransform(s.position);
    central = central || (std::abs(X.x) < 0.05 && std::abs(X.y) < 0.9);
    top = top || X.y > 0.97;
    bottom = bottom || X.y < -0.97;
  }
  CHECK(central);
  CHECK(top);
  CHECK(bottom);
}

TEST_CASE("configuration validation and names") {
  RefinementSchedule bad;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.initial_window = 0.01;
  bad.samples = 4;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.samples = 5;
  bad.final_window = 0.02;
  CHECK_THROWS_AS(bad.validate(), Error);

  const FtleField f = synthetic_ftle(kGrid, gaussian_y);
  RidgeTrackerConfig cfg;
  cfg.step = -1.0;
  CHECK_THROWS_AS(extract_ridges(f, cfg), Error);
  const RidgeTrackerConfig r = RidgeTrackerConfig{}.resolved(f);
  CHECK(r.step == doctest::Approx(0.04));
  CHECK(r.lateral == doctest::Approx(0.02));
  CHECK(r.seed_threshold == doctest::Approx(0.8));

  for (StopReason s : {StopReason::None, StopReason::DomainExit, StopReason::Collision, StopReason::NoMaximum,
                       StopReason::BelowThreshold, StopReason::MaxPoints})
    CHECK(stop_reason_from_string(to_string(s)) == s);
  CHECK(ridge_state_from_string("advected") == RidgeState::Advected);
  CHECK(initial_step_from_string("gradient") == InitialStep::Gradient);
  CHECK_THROWS_AS(initial_step_from_string("hessian"), Error);
}
