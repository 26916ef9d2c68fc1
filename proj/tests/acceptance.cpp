// Acceptance harness. Prints one PASS/FAIL line per criterion and a summary.
//
//   acceptance [--expect-fail ID]...
//
// Exit status is 0 when the failing criteria are exactly the expected ones.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ftlekit/advection.hpp"
#include "ftlekit/classification.hpp"
#include "ftlekit/error.hpp"
#include "ftlekit/io.hpp"
#include "ftlekit/oracle.hpp"
#include "ftlekit/ridge.hpp"
#include "ftlekit/study.hpp"
#include "test_support.hpp"

using namespace ftlekit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  std::string id;
  bool pass;
};

std::vector<Outcome> g_outcomes;

void report(const std::string& id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s %-4s %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), what.c_str(), detail.c_str());
  std::fflush(stdout);
  g_outcomes.push_back({id, pass});
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

// Runs one criterion; an exception is a failure of that criterion only.
void guarded(const std::string& id, const std::string& what, const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, what, std::string("exception: ") + e.what());
  }
  std::printf("     (%s took %.1f s)\n", id.c_str(),
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ftlekit_acceptance";
  fs::create_directories(dir);
  return dir / name;
}

const GridGeometry kSwirlGrid{-1.0, -1.0, 0.01, 201, 201};

// -- 1, 2: analytic-field accuracy ---------------------------------------------

double g_fd_phi_e = NAN;

void criterion_fd() {
  const FtleField ref = oracle_ftle_field(kSwirlGrid, 2.0);
  const FtleField fd = compute_ftle_field(SwirlField{}, kSwirlGrid, 0.0, 2.0, GradientMethod::ClusterFd, 1e-6, {});
  const PhiError e = phi_e(fd, ref);
  g_fd_phi_e = e.value;
  report("1", e.value <= 1e-6, "cluster FD on the analytic swirl, 201x201, T=2",
         fmt("phi_e = %.3e over %zu nodes (limit 1e-6)", e.value, e.nodes));
}

void criterion_ag() {
  const FtleField ref = oracle_ftle_field(kSwirlGrid, 2.0);
  const FtleField ag =
      compute_ftle_field(SwirlField{}, kSwirlGrid, 0.0, 2.0, GradientMethod::AdvectedGradient, 0.0, {});
  const PhiError e = phi_e(ag, ref);
  const double ratio = g_fd_phi_e / e.value;
  report("2", e.value <= 1e-8 && ratio >= 10.0, "advected gradient on the analytic swirl",
         fmt("phi_e = %.3e (limit 1e-8), FD / AG = %.1f (limit 10)", e.value, ratio));
}

// -- 3: discretization study ----------------------------------------------------------

void criterion_dx() {
  StudyConfig c;
  c.kind = StudyKind::Dx;
  for (int p = 4; p <= 11; ++p) c.axis.push_back(std::ldexp(1.0, -p));
  c.ftle_spacing = 0.04;
  const StudyResult r = run_study(c, scratch("dx_study.csv").string());
  if (!r.complete()) throw Error(ErrorCode::Integration, "study has failed rows");

  const StudyRow* fd0 = r.find(c.axis.front(), GradientMethod::ClusterFd, 1e-6);
  const StudyRow* ag0 = r.find(c.axis.front(), GradientMethod::AdvectedGradient);
  auto in_band = [](double v) { return v >= 1e-4 && v <= 1e-2; };
  report("3a", in_band(fd0->relative) && in_band(ag0->relative), "relative error at dx = 2^-4",
         fmt("FD %.3e, AG %.3e (band [1e-4, 1e-2])", fd0->relative, ag0->relative));

  std::vector<double> fd;
  std::string trace;
  for (double dx : c.axis) {
    fd.push_back(r.find(dx, GradientMethod::ClusterFd, 1e-6)->phi_e);
    trace += fmt(" %.2e", fd.back());
  }
  std::size_t rises = 0;
  for (std::size_t i = 1; i < fd.size(); ++i) rises += fd[i] >= fd[i - 1];
  report("3b", rises <= 1 && fd.back() < fd.front(), "FD error decreases with dx",
         fmt("%zu non-decreasing pairs (limit 1); phi_e:", rises) + trace);

  const double fd11 = fd.back();
  const double ag11 = r.find(c.axis.back(), GradientMethod::AdvectedGradient)->phi_e;
  report("3c", ag11 >= 10.0 * fd11, "AG error at dx = 2^-11 at least 10x FD",
         fmt("AG %.3e, FD %.3e, AG / FD = %.2f (limit 10)", ag11, fd11, ag11 / fd11));
}

// -- 4: noise study -------------------------------------------------------------------------

void criterion_noise() {
  StudyConfig c;
  c.kind = StudyKind::Noise;
  c.axis = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
  c.dx = std::ldexp(1.0, -11);
  c.seed = 1;
  c.ftle_spacing = 0.04;
  const StudyResult r = run_study(c, scratch("noise_study.csv").string());
  if (!r.complete()) throw Error(ErrorCode::Integration, "study has failed rows");

  bool increasing = true;
  std::string trace;
  for (GradientMethod m : {GradientMethod::ClusterFd, GradientMethod::AdvectedGradient}) {
    const double da = m == GradientMethod::ClusterFd ? 1e-6 : 0.0;
    trace += std::string(" ") + to_string(m) + ":";
    for (std::size_t i = 0; i < c.axis.size(); ++i) {
      const double v = r.find(c.axis[i], m, da)->phi_e;
      trace += fmt(" %.2e", v);
      if (i > 0) increasing = increasing && v > r.find(c.axis[i - 1], m, da)->phi_e;
    }
  }
  const double fd = r.find(c.axis.back(), GradientMethod::ClusterFd, 1e-6)->phi_e;
  const double ag = r.find(c.axis.back(), GradientMethod::AdvectedGradient)->phi_e;
  const double factor = std::max(fd, ag) / std::min(fd, ag);
  report("4", increasing && factor <= 3.0, "noise study at dx = 2^-11, |e| = 1e-6 ... 1e-2",
         fmt("strictly increasing: %s, FD/AG spread at 1e-2 = %.3f (limit 3);", increasing ? "yes" : "no", factor) +
             trace);
}

// -- 5, 6: ridges on the swirl -------------------------------------------------------------

struct SwirlRidges {
  std::vector<Ridge> tracked, refined;
  std::vector<bool> boundary;
  std::size_t central = 0;
};

// The central ridge passes closest to the hyperbolic core; the others hug the invariant square.
SwirlRidges swirl_ridges() {
  SwirlRidges out;
  const SwirlField s;
  const FtleField f = compute_ftle_field(s, kSwirlGrid, 0.0, 2.0, GradientMethod::ClusterFd, 1e-6, {});
  out.tracked = extract_ridges(f, {});
  const PhiEvaluator eval = make_ftle_evaluator(s, 0.0, 2.0, GradientMethod::ClusterFd, 1e-6, {});
  RefinementSchedule sched;
  sched.initial_window = kSwirlGrid.spacing;
  out.refined = refine_ridges(out.tracked, eval, sched, 0.0);
  double best = INFINITY;
  for (std::size_t k = 0; k < out.tracked.size(); ++k) {
    const double d = polyline_distance(out.tracked[k].points, {0.0, 0.0});
    if (d < best) {
      best = d;
      out.central = k;
    }
  }
  for (std::size_t k = 0; k < out.tracked.size(); ++k) out.boundary.push_back(k != out.central);
  return out;
}

std::vector<Vec2> invariant_boundary() {
  std::vector<Vec2> curve;
  const int n = 2000;
  const Vec2 corners[5] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}, {-1, -1}};
  for (int side = 0; side < 4; ++side)
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / n;
      curve.push_back(swirl_transform(corners[side] + t * (corners[side + 1] - corners[side])));
    }
  curve.push_back(curve.front());
  return curve;
}

double total_variation(const std::vector<double>& v) {
  double tv = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) tv += std::abs(v[i] - v[i - 1]);
  return tv;
}

void criterion_refinement(const SwirlRidges& sr) {
  const SwirlField s;
  const PhiEvaluator eval = make_ftle_evaluator(s, 0.0, 2.0, GradientMethod::ClusterFd, 1e-6, {});
  const std::vector<Vec2> curve = invariant_boundary();

  std::size_t matched = 0, ok = 0, boundary_count = 0;
  bool tv_smaller = true, refined_close = true, tracked_escapes = true;
  std::string detail;
  for (std::size_t k = 0; k < sr.tracked.size(); ++k) {
    if (!sr.boundary[k]) continue;
    ++boundary_count;
    const Ridge& t = sr.tracked[k];
    const Ridge& r = sr.refined[k];
    // Samples are matched by index (refinement moves points along their normals only).
    const std::vector<double> exact = ridge_phi(t, eval);
    std::vector<double> pt, pr;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (std::isnan(exact[i]) || std::isnan(r.phi[i])) continue;
      ++matched;
      ok += r.phi[i] >= exact[i] - 1e-3;
      pt.push_back(exact[i]);
      pr.push_back(r.phi[i]);
    }
    const double tvt = total_variation(pt), tvr = total_variation(pr);
    tv_smaller = tv_smaller && tvr < tvt;

    double dev_t = 0.0, dev_r = 0.0;
    const Ridge at = advect_ridge(t, s, 0.0, 2.0, {}), ar = advect_ridge(r, s, 0.0, 2.0, {});
    for (std::size_t i = 0; i < at.size(); ++i)
      dev_t = (at.flags[i] & ridge_flag::kOutOfDomain) ? INFINITY : std::max(dev_t, polyline_distance(curve, at.points[i]));
    for (std::size_t i = 0; i < ar.size(); ++i)
      dev_r = (ar.flags[i] & ridge_flag::kOutOfDomain) ? INFINITY : std::max(dev_r, polyline_distance(curve, ar.points[i]));
    refined_close = refined_close && dev_r <= 0.02;
    tracked_escapes = tracked_escapes && dev_t > 0.02;
    detail += fmt(" [ridge %zu: %zu pts, TV %.3f -> %.3f, advected max dist tracked %.4f refined %.5f]", k, t.size(), tvt,
                  tvr, dev_t, dev_r);
  }
  const double frac = matched ? static_cast<double>(ok) / matched : 0.0;
  const bool pass = boundary_count > 0 && frac >= 0.95 && tv_smaller && refined_close && tracked_escapes;
  report("5", pass, "refinement on the swirl boundary ridges",
         fmt("%zu boundary ridges, Phi_refined >= Phi_tracked - 1e-3 at %zu/%zu samples (%.1f%%, limit 95%%), "
             "TV smaller: %s, refined within 0.02: %s, tracked beyond 0.02: %s;",
             boundary_count, ok, matched, 100.0 * frac, tv_smaller ? "yes" : "no", refined_close ? "yes" : "no",
             tracked_escapes ? "yes" : "no") +
             detail);
}

void criterion_classification(const SwirlRidges& sr) {
  const SwirlField s;
  std::string detail;
  bool pass = true;
  std::vector<ClassificationProfile> profiles;
  std::vector<const ProfilePoint*> sides[4];
  std::vector<std::size_t> pieces[4];
  profiles.reserve(sr.refined.size());
  for (std::size_t k = 0; k < sr.refined.size(); ++k) {
    const ClassificationProfile& p = profiles.emplace_back(classify_ridge(sr.refined[k], s, 0.0, 2.0, 1e-6, {}));
    std::vector<const ProfilePoint*> v;
    for (const ProfilePoint& q : p.points)
      if (q.valid()) v.push_back(&q);
    if (v.size() < 2) {
      pass = false;
      detail += fmt(" [ridge %zu: too few valid points]", k);
      continue;
    }
    if (!sr.boundary[k]) {
      std::size_t npos = 0;
      double neg_len = 0.0, len = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        npos += v[i]->metrics.n_l > 0.0;
        if (i == 0) continue;
        // Each segment takes the sign of e_l at its midpoint (mean of the end values).
        const double seg = norm(v[i]->x - v[i - 1]->x);
        len += seg;
        if (v[i]->metrics.e_l + v[i - 1]->metrics.e_l < 0.0) neg_len += seg;
      }
      const bool ok = npos == v.size() && neg_len >= 0.7 * len;
      pass = pass && ok;
      detail += fmt(" [central ridge %zu: n_l > 0 at %zu/%zu valid points, e_l < 0 over %.1f%% of arc length]", k, npos,
                    v.size(), 100.0 * neg_len / len);
    } else {
      // Pieces of one boundary curve are judged together; the tracker may split a curve at a junction.
      Vec2 mean{0.0, 0.0};
      for (const ProfilePoint* q : v) mean = mean + swirl_untransform(q->x);
      mean.x /= static_cast<double>(v.size());
      mean.y /= static_cast<double>(v.size());
      const int side = std::abs(mean.x) > std::abs(mean.y) ? (mean.x > 0.0 ? 0 : 1) : (mean.y > 0.0 ? 2 : 3);
      sides[side].insert(sides[side].end(), v.begin(), v.end());
      pieces[side].push_back(k);
    }
  }
  static const char* side_name[] = {"right", "left", "top", "bottom"};
  for (int side = 0; side < 4; ++side) {
    const std::vector<const ProfilePoint*>& v = sides[side];
    if (v.empty()) continue;
    // "Small" is a tenth of n_l; "most" is more than half of the valid points.
    std::size_t close = 0, imax = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      close += std::abs(v[i]->metrics.rho_l - v[i]->metrics.sigma_l) <= 0.1 * std::abs(v[i]->metrics.n_l);
      if (v[i]->metrics.n_l > v[imax]->metrics.n_l) imax = i;
    }
    // Neighbourhood of the n_l maximum: valid points within 0.05 of it.
    std::size_t near = 0, above = 0;
    for (const ProfilePoint* q : v) {
      if (norm(q->x - v[imax]->x) > 0.05) continue;
      ++near;
      above += q->metrics.rho_l > q->metrics.sigma_l;
    }
    const bool ok = 2 * close > v.size() && near > 0 && above == near;
    pass = pass && ok;
    std::string ids;
    for (std::size_t k : pieces[side]) ids += (ids.empty() ? "" : ",") + std::to_string(k);
    detail += fmt(" [%s boundary ridge (pieces %s): |rho_l - sigma_l| <= 0.1 n_l at %zu/%zu, rho_l > sigma_l at "
                  "%zu/%zu points near the n_l maximum %.3f]",
                  side_name[side], ids.c_str(), close, v.size(), above, near, v[imax]->metrics.n_l);
  }
  report("6", pass, "classification patterns on the swirl ridges", fmt("%zu ridges;", sr.refined.size()) + detail);
}

// -- 7: oracle identities -------------------------------------------------------------

// Integrator error at the default rtol is a few 1e-7 over T = 2, so identity checks use this.
IntegratorConfig tight_integrator() {
  IntegratorConfig ic;
  ic.rtol = 1e-10;
  ic.atol = 1e-12;
  return ic;
}

std::vector<Vec2> random_interior(std::uint64_t seed, std::size_t n) {
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

Mat2 from_svd(double l1, double l2, double theta_xi, double theta_u) {
  const Vec2 xi2{std::cos(theta_xi), std::sin(theta_xi)}, xi1{xi2.y, -xi2.x};
  const Vec2 u2{std::cos(theta_u), std::sin(theta_u)}, u1{u2.y, -u2.x};
  return l2 * outer(u2, xi2) + l1 * outer(u1, xi1);
}

void criterion_oracle() {
  {
    double worst = 0.0;
    auto flow = [](const Vec2& p) { return oracle_flow_map(p, 2.0); };
    for (const Vec2& a : random_interior(101, 100))
      worst = std::max(worst, testing::rel_frobenius(oracle_gradient(a, 2.0), testing::fd_jacobian(flow, a, 1e-6)));
    report("7a", worst <= 1e-6, "oracle gradient vs FD of the oracle flow map",
           fmt("max relative difference %.2e over 100 points (limit 1e-6)", worst));
  }
  {
    const auto pts = random_interior(102, 100);
    auto worst_for = [&](const IntegratorConfig& ic) {
      const BatchTrajectoryResult r = advect_batch(SwirlField{}, pts, 0.0, 2.0, ic);
      double worst = 0.0;
      for (std::size_t k = 0; k < pts.size(); ++k)
        worst = std::max(worst, norm(r.positions[k] - oracle_flow_map(pts[k], 2.0)));
      return worst;
    };
    const double worst = worst_for(tight_integrator()), at_default = worst_for({});
    report("7b", worst <= 1e-7, "oracle flow map vs numerical integration",
           fmt("max distance %.2e over 100 points at rtol 1e-10 (limit 1e-7); %.2e at the default rtol", worst,
               at_default));
  }
  {
    // Larger root of lambda^2 - tr lambda + det, polished by Newton steps in long double.
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> d(-5.0, 5.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const Mat2 f{d(rng), d(rng), d(rng), d(rng)};
      const Mat2 c = f.transposed() * f;
      const double closed = cg_largest_eigenvalue(c(0, 0), c(0, 1), c(1, 1));
      const long double tr = static_cast<long double>(c(0, 0)) + c(1, 1);
      const long double det = static_cast<long double>(c(0, 0)) * c(1, 1) - static_cast<long double>(c(0, 1)) * c(0, 1);
      long double x = tr;
      for (int it = 0; it < 200; ++it) {
        const long double step = (x * x - tr * x + det) / (2.0L * x - tr);
        x -= step;
        if (std::abs(step) <= 1e-19L * std::abs(x)) break;
      }
      worst = std::max(worst, static_cast<double>(std::abs((closed - x) / x)));
    }
    report("7c", worst <= 1e-12, "closed-form lambda2 vs characteristic polynomial root",
           fmt("max relative difference %.2e over 1000 tensors (limit 1e-12)", worst));
  }
  {
    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> d(-3.0, 3.0), ang(0.0, 2.0 * M_PI);
    double residual = 0.0, norm_err = 0.0;
    int n = 0;
    while (n < 1000) {
      const Mat2 f{d(rng), d(rng), d(rng), d(rng)};
      if (std::abs(f.det()) < 1e-8) continue;
      const double a = ang(rng);
      const Vec2 e0{std::cos(a), std::sin(a)};
      const PointClassification c = classify_point(f, e0);
      const Vec2 fn = f * rot90(e0);
      residual = std::max(residual, norm(fn - (c.rho * c.n_t + c.sigma * c.e_t)) / std::max(1.0, norm(fn)));
      norm_err = std::max(norm_err, std::abs(c.rho * c.rho + c.sigma * c.sigma - dot(fn, fn)) / std::max(1.0, dot(fn, fn)));
      ++n;
    }
    report("7d", residual <= 1e-10 && norm_err <= 1e-10, "normal decomposition on random gradients",
           fmt("max residual %.2e, max |rho^2 + sigma^2 - |F n0|^2| %.2e over 1000 matrices (limit 1e-10)", residual,
               norm_err));
  }
  {
    const double l2 = 10.0;
    double worst = 0.0;
    std::size_t cases = 0;
    for (double b : {0.0, 0.05, 0.3, 0.5, 0.8, 0.99})
      for (double delta : {1e-3, 1e-2, 0.1, 0.5, 1.0})
        for (double eps : {0.0, 1e-3, -1e-3, 1e-2}) {
          const double beta = b + eps;
          if (std::abs(beta) > 1.0) continue;
          const Mat2 f = from_svd(delta * l2, l2, 0.4, -1.1);
          const Vec2 xi2{std::cos(0.4), std::sin(0.4)}, xi1{xi2.y, -xi2.x};
          const PointClassification c = classify_point(f, std::sqrt((1.0 - beta) * (1.0 + beta)) * xi1 + beta * xi2);
          const SensitivityResult s = sensitivity_exact({b, eps, delta * l2, l2});
          worst = std::max({worst, std::abs(c.e_magnitude - s.e_magnitude) / s.e_magnitude,
                            std::abs(c.n_magnitude - s.n_magnitude) / s.n_magnitude,
                            std::abs(c.rho - s.rho) / std::abs(s.rho), std::abs(c.sigma - s.sigma) / (l2 * l2)});
          ++cases;
        }
    // delta = 1e-3 next to a strainline: a 1e-2 tangent error moves |F e0| by about 10x.
    const SensitivityResult base = sensitivity_exact({0.0, 0.0, 1e-2, 10.0});
    const SensitivityResult pert = sensitivity_exact({0.0, 1e-2, 1e-2, 10.0});
    const double blowup = pert.e_magnitude / base.e_magnitude;
    report("7e", worst <= 1e-12 && blowup > 10.0 && base.strainline_sensitive,
           "exact sensitivity vs direct perturbed classification",
           fmt("max relative difference %.2e over %zu lattice cases (limit 1e-12); delta = 1e-3, eps = 1e-2 "
               "changes |F e0| by %.1fx",
               worst, cases, blowup));
  }
}

// -- 8: trivial flows -------------------------------------------------------------------

void criterion_trivial() {
  const GridGeometry g{-1.0, -1.0, 0.1, 21, 21};
  auto max_abs_dev = [](const FtleField& f, double target) {
    double m = 0.0;
    for (std::size_t k = 0; k < f.phi.size(); ++k)
      if (f.flags[k] == NodeFlag::Ok) m = std::max(m, std::abs(f.phi[k] - target));
    return m;
  };
  const LinearField zero = LinearField::zero(), rot = LinearField::rotation(), saddle = LinearField::saddle();
  const IntegratorConfig ic = tight_integrator();
  double worst_zero = 0.0, worst_rot = 0.0, worst_saddle = 0.0, default_rot = 0.0, default_saddle = 0.0;
  std::size_t zero_ridges = 0, invalid = 0;
  for (GradientMethod m : {GradientMethod::ClusterFd, GradientMethod::AdvectedGradient}) {
    const FtleField fz = compute_ftle_field(zero, g, 0.0, 1.0, m, 1e-6, ic);
    const FtleField fr = compute_ftle_field(rot, g, 0.0, 1.0, m, 1e-6, ic);
    const FtleField fs_ = compute_ftle_field(saddle, g, 0.0, 1.0, m, 1e-6, ic);
    default_rot = std::max(default_rot, max_abs_dev(compute_ftle_field(rot, g, 0.0, 1.0, m, 1e-6, {}), 0.0));
    default_saddle = std::max(default_saddle, max_abs_dev(compute_ftle_field(saddle, g, 0.0, 1.0, m, 1e-6, {}), 1.0));
    worst_zero = std::max(worst_zero, max_abs_dev(fz, 0.0));
    worst_rot = std::max(worst_rot, max_abs_dev(fr, 0.0));
    worst_saddle = std::max(worst_saddle, max_abs_dev(fs_, 1.0));
    invalid += g.size() - fz.valid_count() + g.size() - fr.valid_count() + g.size() - fs_.valid_count();
    zero_ridges += extract_ridges(fz, {}).size();
  }

  Ridge line;
  for (int i = 0; i <= 10; ++i) line.points.push_back({0.0, -0.5 + 0.1 * i});
  line.update_geometry();
  line.state = RidgeState::Refined;
  const ClassificationProfile p = classify_ridge(line, saddle, 0.0, 1.0, 1e-2, ic);
  double cls = 0.0;
  bool shear_flag = p.valid_count() == line.size();
  for (const ProfilePoint& q : p.points) {
    cls = std::max({cls, std::abs(q.metrics.e_l + 1.0), std::abs(q.metrics.n_l - 1.0), std::abs(q.metrics.rho_l - 1.0)});
    shear_flag = shear_flag && q.metrics.zero_shear && (q.flags & profile_flag::kZeroShear);
  }
  const bool pass = worst_zero == 0.0 && zero_ridges == 0 && worst_rot <= 1e-6 && worst_saddle <= 1e-6 &&
                    invalid == 0 && cls <= 1e-6 && shear_flag;
  report("8", pass, "trivial flows (zero, rotation, saddle; FD and AG)",
         fmt("rtol 1e-10; zero: max |Phi| %.1e, %zu ridges; rotation: max |Phi| %.1e; saddle: max |Phi - 1| %.1e; "
             "%zu invalid nodes; y-axis line: max deviation of (e_l, n_l, rho_l) from (-1, 1, 1) %.1e, zero-shear %s; "
             "at the default rtol: rotation %.1e, saddle %.1e",
             worst_zero, zero_ridges, worst_rot, worst_saddle, invalid, cls, shear_flag ? "yes" : "no", default_rot,
             default_saddle));
}

// -- gridded time-dependent field through the whole pipeline -------------------------

void criterion_gyre_pipeline() {
  DiscretizeConfig dc;
  dc.dx = 0.02;
  dc.t0 = 0.0;
  dc.window = 5.0;
  dc.slice_dt = 0.1;
  const GriddedField field = discretize_with(DoubleGyreField{}, dc);
  const fs::path path = scratch("double_gyre.bin");
  save_gridded(path.string(), field);

  PipelineConfig c;
  c.field = path.string();
  c.t0 = 0.0;
  c.window = 5.0;
  c.ftle_spacing = 0.02;
  c.ftle_box = {0.0, 2.0, 0.0, 1.0};
  c.output_dir = scratch("gyre_run").string();
  const PipelineResult r = run_pipeline(c);
  bool files = r.artifacts.size() == 6;
  for (const std::string& a : r.artifacts) files = files && fs::exists(a);
  std::size_t valid = 0, points = 0;
  for (const ClassificationProfile& p : r.profiles) {
    valid += p.valid_count();
    points += p.points.size();
  }
  report("9", files && !r.tracked.empty(), "pipeline on a gridded time-dependent double gyre",
         fmt("%zu slices, %zu ridges, %zu/%zu classified points valid, %zu flagged notes, %zu artifacts",
             field.slice_count(), r.tracked.size(), valid, points, r.flagged.size(), r.artifacts.size()));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> expected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--expect-fail" && i + 1 < argc) {
      expected.insert(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--expect-fail ID]...\n", argv[0]);
      return 2;
    }
  }

  guarded("1", "cluster FD accuracy", criterion_fd);
  guarded("2", "advected gradient accuracy", criterion_ag);
  guarded("3", "discretization study", criterion_dx);
  guarded("4", "noise study", criterion_noise);
  SwirlRidges sr;
  guarded("5", "ridge refinement", [&] {
    sr = swirl_ridges();
    criterion_refinement(sr);
  });
  guarded("6", "classification", [&] {
    if (sr.refined.empty()) throw Error(ErrorCode::Degenerate, "no swirl ridges");
    criterion_classification(sr);
  });
  guarded("7", "oracle identities", criterion_oracle);
  guarded("8", "trivial flows", criterion_trivial);
  guarded("9", "gridded pipeline", criterion_gyre_pipeline);

  std::size_t passed = 0;
  std::set<std::string> failed;
  for (const Outcome& o : g_outcomes) {
    if (o.pass) ++passed;
    else failed.insert(o.id);
  }
  std::printf("acceptance: %zu/%zu criteria passed", passed, g_outcomes.size());
  if (!failed.empty()) {
    std::printf("; failing:");
    for (const std::string& id : failed) std::printf(" %s", id.c_str());
  }
  std::printf("\n");
  if (failed != expected) {
    std::printf("acceptance: failing set differs from the expected set\n");
    return 1;
  }
  return 0;
}
