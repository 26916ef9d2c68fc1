#include "ftlekit/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ftlekit/error.hpp"

namespace ftlekit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double parabola_vertex(double fm, double f0, double fp, double h) {
  return h * (fm - fp) / (2.0 * (fm - 2.0 * f0 + fp));
}

const char* to_string(RidgeState s) {
  switch (s) {
    case RidgeState::Tracked: return "tracked";
    case RidgeState::Refined: return "refined";
    case RidgeState::Advected: return "advected";
  }
  return "unknown";
}

RidgeState ridge_state_from_string(const std::string& s) {
  if (s == "tracked") return RidgeState::Tracked;
  if (s == "refined") return RidgeState::Refined;
  if (s == "advected") return RidgeState::Advected;
  fail(ErrorCode::Format, "unknown ridge state '" + s + "'");
}

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::None: return "none";
    case StopReason::DomainExit: return "domain-exit";
    case StopReason::Collision: return "collision";
    case StopReason::NoMaximum: return "no-maximum";
    case StopReason::BelowThreshold: return "below-threshold";
    case StopReason::MaxPoints: return "max-points";
  }
  return "unknown";
}

StopReason stop_reason_from_string(const std::string& s) {
  for (StopReason r : {StopReason::None, StopReason::DomainExit, StopReason::Collision, StopReason::NoMaximum,
                       StopReason::BelowThreshold, StopReason::MaxPoints})
    if (s == to_string(r)) return r;
  fail(ErrorCode::Format, "unknown stop reason '" + s + "'");
}

const char* to_string(InitialStep m) {
  return m == InitialStep::Gradient ? "gradient" : "gradient-normal";
}

InitialStep initial_step_from_string(const std::string& s) {
  if (s == "gradient") return InitialStep::Gradient;
  if (s == "gradient-normal") return InitialStep::GradientNormal;
  fail(ErrorCode::Config, "unknown initial step mode '" + s + "'");
}

void RefinementSchedule::validate() const {
  if (!(initial_window > 0.0)) fail(ErrorCode::Config, "refinement initial window must be positive");
  if (!(final_window > 0.0) || !(final_window < initial_window))
    fail(ErrorCode::Config, "refinement final window must be positive and smaller than the initial window");
  if (!(shrink > 0.0 && shrink < 1.0)) fail(ErrorCode::Config, "refinement shrink factor must lie in (0, 1)");
  if (samples < 3 || samples % 2 == 0) fail(ErrorCode::Config, "refinement samples per normal must be odd and >= 3");
  if (max_iterations == 0) fail(ErrorCode::Config, "refinement needs at least one iteration");
}

void Ridge::update_geometry() {
  const std::size_t n = points.size();
  s.assign(n, 0.0);
  tangent.assign(n, Vec2{1.0, 0.0});
  normal.assign(n, Vec2{0.0, 1.0});
  if (flags.size() != n) flags.resize(n, 0);
  if (phi.size() != n) phi.resize(n, kNaN);
  if (n < 2) return;
  for (std::size_t i = 1; i < n; ++i) s[i] = s[i - 1] + norm(points[i] - points[i - 1]);
  const double total = s.back();
  if (total > 0.0)
    for (double& v : s) v /= total;
  s.back() = total > 0.0 ? 1.0 : 0.0;
  Vec2 prev{1.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 d = i == 0 ? points[1] - points[0] : i + 1 == n ? points[n - 1] - points[n - 2]
                                                                : points[i + 1] - points[i - 1];
    const double len = norm(d);
    tangent[i] = len > 0.0 ? (1.0 / len) * d : prev;
    normal[i] = rot90(tangent[i]);
    prev = tangent[i];
  }
}

double Ridge::length() const {
  double l = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) l += norm(points[i] - points[i - 1]);
  return l;
}

RidgeTrackerConfig RidgeTrackerConfig::resolved(const FtleField& ftle) const {
  RidgeTrackerConfig c = *this;
  const double dx = ftle.grid.spacing;
  const double mx = ftle.valid_count() > 0 ? ftle.max_value() : 0.0;
  if (c.line_spacing == 0.0) c.line_spacing = 10.0 * dx;
  if (c.step == 0.0) c.step = 2.0 * dx;
  if (c.lateral == 0.0) c.lateral = 0.5 * c.step;
  if (std::isnan(c.seed_threshold)) c.seed_threshold = 0.4 * mx;
  if (std::isnan(c.stop_threshold)) c.stop_threshold = std::max(0.0, 0.25 * mx);
  c.validate();
  return c;
}

void RidgeTrackerConfig::validate() const {
  if (!(line_spacing > 0.0)) fail(ErrorCode::Config, "seed line spacing must be positive");
  if (!(step > 0.0)) fail(ErrorCode::Config, "tracking step must be positive");
  if (!(lateral > 0.0)) fail(ErrorCode::Config, "transverse offset must be positive");
  if (!(stop_threshold >= 0.0)) fail(ErrorCode::Config, "stop threshold must be non-negative");
  if (std::isnan(seed_threshold)) fail(ErrorCode::Config, "seed threshold is unresolved");
  if (max_points == 0) fail(ErrorCode::Config, "max points must be positive");
}

namespace {

// Catmull-Rom weights for nodes i-1 .. i+2 at offset t in [0, 1].
void cubic_weights(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}

}  // namespace

double FtleInterpolant::value(const Vec2& x) const {
  const GridGeometry& g = f_->grid;
  if (g.nx < 2 || g.ny < 2) return kNaN;
  double fx = (x.x - g.x0) / g.spacing, fy = (x.y - g.y0) / g.spacing;
  const double lx = static_cast<double>(g.nx - 1), ly = static_cast<double>(g.ny - 1);
  if (!(fx >= -1e-12 && fx <= lx + 1e-12 && fy >= -1e-12 && fy <= ly + 1e-12)) return kNaN;
  fx = std::clamp(fx, 0.0, lx);
  fy = std::clamp(fy, 0.0, ly);
  const std::size_t i = std::min(static_cast<std::size_t>(fx), g.nx - 2);
  const std::size_t j = std::min(static_cast<std::size_t>(fy), g.ny - 2);
  double tx = fx - static_cast<double>(i), ty = fy - static_cast<double>(j);
  if (tx < 1e-12) tx = 0.0;
  if (tx > 1.0 - 1e-12) tx = 1.0;
  if (ty < 1e-12) ty = 0.0;
  if (ty > 1.0 - 1e-12) ty = 1.0;

  // Cubic convolution where the whole 4x4 stencil is valid, bilinear otherwise.
  double wx[4], wy[4];
  cubic_weights(tx, wx);
  cubic_weights(ty, wy);
  double v = 0.0;
  bool cubic = true;
  for (int b = 0; b < 4 && cubic; ++b) {
    for (int a = 0; a < 4; ++a) {
      const double w = wx[a] * wy[b];
      if (w == 0.0) continue;
      const long ii = static_cast<long>(i) + a - 1, jj = static_cast<long>(j) + b - 1;
      if (ii < 0 || jj < 0 || ii >= static_cast<long>(g.nx) || jj >= static_cast<long>(g.ny)) {
        cubic = false;
        break;
      }
      const std::size_t k = static_cast<std::size_t>(jj) * g.nx + static_cast<std::size_t>(ii);
      if (f_->flags[k] != NodeFlag::Ok) {
        cubic = false;
        break;
      }
      v += w * f_->phi[k];
    }
  }
  if (cubic) return v;

  // Bilinear, renormalized over the valid corners of the cell.
  const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
  const std::size_t k[4] = {j * g.nx + i, j * g.nx + i + 1, (j + 1) * g.nx + i, (j + 1) * g.nx + i + 1};
  v = 0.0;
  double wsum = 0.0;
  for (int c = 0; c < 4; ++c) {
    if (w[c] == 0.0 || f_->flags[k[c]] != NodeFlag::Ok) continue;
    v += w[c] * f_->phi[k[c]];
    wsum += w[c];
  }
  return wsum > 1e-3 ? v / wsum : kNaN;
}

Vec2 FtleInterpolant::gradient(const Vec2& x) const {
  const double h = f_->grid.spacing;
  return {(value({x.x + h, x.y}) - value({x.x - h, x.y})) / (2.0 * h),
          (value({x.x, x.y + h}) - value({x.x, x.y - h})) / (2.0 * h)};
}

namespace {

double or_neg_inf(double v) { return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v; }

double segment_distance(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 d = b - a;
  const double l2 = dot(d, d);
  const double t = l2 > 0.0 ? std::clamp(dot(p - a, d) / l2, 0.0, 1.0) : 0.0;
  return norm(p - (a + t * d));
}

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

struct Walk {
  std::vector<Vec2> points;
  StopReason reason = StopReason::None;
};

Walk walk(const Vec2& seed, Vec2 dir, const FtleInterpolant& phi, const RidgeTrackerConfig& cfg,
          std::span<const Ridge> others, const std::vector<Vec2>* other_half, std::size_t budget) {
  Walk w;
  Vec2 last = seed;
  int clamps = 0;
  const double h = cfg.lateral;
  while (true) {
    if (w.points.size() >= budget) {
      w.reason = StopReason::MaxPoints;
      break;
    }
    const Vec2 p = last + cfg.step * dir;
    if (!phi.inside(p)) {
      w.reason = StopReason::DomainExit;
      break;
    }
    const Vec2 n = rot90(dir);
    const double fm = phi.value(p - h * n), f0 = phi.value(p), fp = phi.value(p + h * n);
    const bool vm = !std::isnan(fm), v0 = !std::isnan(f0), vp = !std::isnan(fp);
    if (!vm && !v0 && !vp) {
      w.reason = StopReason::DomainExit;
      break;
    }
    double off = 0.0;
    bool clamped = false;
    if (vm && v0 && vp) {
      const double curv = fm - 2.0 * f0 + fp;
      off = curv < 0.0 ? parabola_vertex(fm, f0, fp, h) : (fm > fp ? -2.0 * h : 2.0 * h);
      if (std::abs(off) > h) {
        off = std::copysign(h, off);
        // Rising against the edge of the valid field is edge following, not a missing maximum.
        clamped = !std::isnan(phi.value(p + 2.0 * off * n));
      }
    } else {
      // Next to an invalid region (e.g. a ridge on the edge of the valid field) follow the
      // discrete maximum of the valid samples; this never counts as a missing maximum.
      const double a = or_neg_inf(fm), b = or_neg_inf(f0), c = or_neg_inf(fp);
      if (b >= a && b >= c) off = 0.0;
      else off = a > c ? -h : h;
    }
    clamps = clamped ? clamps + 1 : 0;
    if (clamps >= 2) {
      w.reason = StopReason::NoMaximum;
      break;
    }
    const Vec2 q = p + off * n;
    double fq = phi.value(q);
    if (std::isnan(fq)) {
      w.reason = StopReason::DomainExit;
      break;
    }
    if (fq < cfg.stop_threshold) {
      w.reason = StopReason::BelowThreshold;
      break;
    }
    bool hit = false;
    for (const Ridge& o : others) {
      if (o.points.empty()) continue;
      if (norm(q - o.points.front()) < cfg.step || norm(q - o.points.back()) < cfg.step) hit = true;
    }
    // Closing on the own seed or on the end of the opposite half.
    if (w.points.size() >= 3 && norm(q - seed) < cfg.step) hit = true;
    if (other_half && !other_half->empty() && w.points.size() >= 1 && norm(q - other_half->back()) < cfg.step)
      hit = true;
    if (hit) {
      w.reason = StopReason::Collision;
      break;
    }
    w.points.push_back(q);
    const Vec2 d = q - last;
    if (norm(d) > 0.0) dir = normalized(d);
    last = q;
  }
  return w;
}

}  // namespace

std::vector<Seed> find_seeds(const FtleField& ftle, const RidgeTrackerConfig& cfg_in) {
  const RidgeTrackerConfig cfg = cfg_in.resolved(ftle);
  const GridGeometry& g = ftle.grid;
  const double dx = g.spacing;
  const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.line_spacing / dx)));
  auto val = [&](std::size_t i, std::size_t j) {
    const std::size_t k = j * g.nx + i;
    return ftle.flags[k] == NodeFlag::Ok ? ftle.phi[k] : -std::numeric_limits<double>::infinity();
  };

  std::vector<Seed> raw;
  auto consider = [&](double fm, double f0, double fp, const Vec2& at, const Vec2& along) {
    if (!(f0 > fm && f0 > fp) || f0 < cfg.seed_threshold) return;
    double off = 0.0;
    if (std::isfinite(fm) && std::isfinite(fp)) off = std::clamp(parabola_vertex(fm, f0, fp, dx), -0.5 * dx, 0.5 * dx);
    raw.push_back({at + off * along, f0, along});
  };
  for (std::size_t i = 0; i < g.nx; i += stride)
    for (std::size_t j = 1; j + 1 < g.ny; ++j)
      consider(val(i, j - 1), val(i, j), val(i, j + 1), g.node(i, j), {0.0, 1.0});
  for (std::size_t j = 0; j < g.ny; j += stride)
    for (std::size_t i = 1; i + 1 < g.nx; ++i)
      consider(val(i - 1, j), val(i, j), val(i + 1, j), g.node(i, j), {1.0, 0.0});

  // Merge seeds closer than one cell, keeping the larger value.
  std::sort(raw.begin(), raw.end(), [](const Seed& a, const Seed& b) {
    if (a.phi != b.phi) return a.phi > b.phi;
    return a.position.x != b.position.x ? a.position.x < b.position.x : a.position.y < b.position.y;
  });
  std::vector<Seed> out;
  for (const Seed& s : raw) {
    bool dup = false;
    for (const Seed& o : out) dup = dup || norm(o.position - s.position) < dx;
    if (!dup) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const Seed& a, const Seed& b) {
    return a.position.x != b.position.x ? a.position.x < b.position.x : a.position.y < b.position.y;
  });
  return out;
}

Ridge track_ridge(const Seed& seed, const FtleInterpolant& phi, const RidgeTrackerConfig& cfg_in,
                  std::span<const Ridge> others) {
  const RidgeTrackerConfig cfg = cfg_in.resolved(phi.field());
  const Vec2 g = phi.gradient(seed.position);
  const double gn = norm(g);
  const bool has_gradient = std::isfinite(gn) && gn > 1e-12;
  const Vec2 u = has_gradient ? (1.0 / gn) * g : seed.line_direction;
  const std::size_t budget = cfg.max_points > 1 ? cfg.max_points - 1 : 0;
  auto both = [&](const Vec2& d) {
    Walk fwd = walk(seed.position, d, phi, cfg, others, nullptr, budget);
    Walk bwd = walk(seed.position, -d, phi, cfg, others, &fwd.points, budget - fwd.points.size());
    return std::pair{std::move(fwd), std::move(bwd)};
  };
  const Vec2 primary = has_gradient ? (cfg.initial == InitialStep::Gradient ? u : rot90(u)) : rot90(u);
  auto [fwd, bwd] = both(primary);
  // A first step straight across the ridge dies at once; retry along the other candidate.
  if (fwd.points.size() + bwd.points.size() <= 2 && has_gradient) {
    auto [f2, b2] = both(rot90(primary));
    if (f2.points.size() + b2.points.size() > fwd.points.size() + bwd.points.size()) {
      fwd = std::move(f2);
      bwd = std::move(b2);
    }
  }

  Ridge r;
  r.seed = seed.position;
  r.state = RidgeState::Tracked;
  r.points.assign(bwd.points.rbegin(), bwd.points.rend());
  r.points.push_back(seed.position);
  r.points.insert(r.points.end(), fwd.points.begin(), fwd.points.end());
  r.stop_start = bwd.reason;
  r.stop_end = fwd.reason;
  r.flags.assign(r.points.size(), 0);
  r.phi.resize(r.points.size());
  for (std::size_t i = 0; i < r.points.size(); ++i) r.phi[i] = phi.value(r.points[i]);
  r.update_geometry();
  return r;
}

double polyline_distance(std::span<const Vec2> poly, const Vec2& p) {
  if (poly.empty()) return std::numeric_limits<double>::infinity();
  if (poly.size() == 1) return norm(p - poly[0]);
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) d = std::min(d, segment_distance(poly[i], poly[i + 1], p));
  return d;
}

std::vector<Ridge> extract_ridges(const FtleField& ftle, const RidgeTrackerConfig& cfg_in) {
  const RidgeTrackerConfig cfg = cfg_in.resolved(ftle);
  const FtleInterpolant phi(ftle);
  std::vector<Ridge> ridges;
  for (const Seed& s : find_seeds(ftle, cfg)) {
    bool covered = false;
    for (const Ridge& r : ridges) covered = covered || polyline_distance(r.points, s.position) < cfg.step;
    if (covered) continue;
    Ridge r = track_ridge(s, phi, cfg, ridges);
    if (r.size() >= cfg.min_points) ridges.push_back(std::move(r));
  }
  return ridges;
}

PhiEvaluator make_ftle_evaluator(const VelocityField& field, double t0, double t1, GradientMethod method, double da,
                                 const IntegratorConfig& cfg) {
  return [&field, t0, t1, method, da, cfg](std::span<const Vec2> pts) {
    return ftle_at_points(field, pts, method, da, t0, t1, cfg);
  };
}

namespace {

std::vector<double> evaluate_checked(const PhiEvaluator& eval, std::span<const Vec2> pts) {
  std::vector<double> v = eval(pts);
  if (v.size() != pts.size()) fail(ErrorCode::Argument, "FTLE evaluator returned a wrong number of values");
  return v;
}

}  // namespace

Ridge refine_ridge(const Ridge& r, const PhiEvaluator& eval, const RefinementSchedule& sched,
                   std::span<const Ridge> others, double max_spacing) {
  sched.validate();
  Ridge out = r;
  out.state = RidgeState::Refined;
  out.schedule = sched;
  if (out.flags.size() != out.points.size()) out.flags.assign(out.points.size(), 0);
  if (out.points.empty()) return out;

  std::vector<double> cap(out.points.size(), sched.initial_window);
  for (std::size_t i = 0; i < out.points.size(); ++i)
    for (const Ridge& o : others) cap[i] = std::min(cap[i], 0.5 * polyline_distance(o.points, out.points[i]));

  std::vector<double> cur = evaluate_checked(eval, out.points);
  const std::size_t m = sched.samples;
  std::size_t k = 0;
  double scale = sched.initial_window;
  for (; k < sched.max_iterations; ++k) {
    out.update_geometry();
    const std::size_t n = out.points.size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::max(std::min(scale, cap[i]), sched.final_window);

    std::vector<char> frozen(n, 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const Vec2 a = out.points[i], b = out.points[i + 1];
      if (segments_cross(a - w[i] * out.normal[i], a + w[i] * out.normal[i], b - w[i + 1] * out.normal[i + 1],
                         b + w[i + 1] * out.normal[i + 1])) {
        frozen[i] = frozen[i + 1] = 1;
        out.flags[i] |= ridge_flag::kFrozen;
        out.flags[i + 1] |= ridge_flag::kFrozen;
      }
    }

    std::vector<Vec2> samples;
    std::vector<std::size_t> owner;
    std::vector<double> offset;
    for (std::size_t i = 0; i < n; ++i) {
      if (frozen[i]) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (2 * j + 1 == m) continue;  // centre already known
        const double o = w[i] * (-1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(m - 1));
        samples.push_back(out.points[i] + o * out.normal[i]);
        owner.push_back(i);
        offset.push_back(o);
      }
    }
    const std::vector<double> vals = evaluate_checked(eval, samples);
    std::vector<double> best = cur, best_off(n, 0.0);
    std::vector<char> any(n, 0);
    for (std::size_t q = 0; q < samples.size(); ++q) {
      const std::size_t i = owner[q];
      if (std::isnan(vals[q])) continue;
      any[i] = 1;
      if (std::isnan(best[i]) || vals[q] > best[i]) {
        best[i] = vals[q];
        best_off[i] = offset[q];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (frozen[i]) continue;
      if (std::isnan(cur[i]) && !any[i]) out.flags[i] |= ridge_flag::kEvalFailed;
      out.points[i] += best_off[i] * out.normal[i];
      cur[i] = best[i];
    }

    if (max_spacing > 0.0) {
      std::vector<Vec2> mids;
      std::vector<std::size_t> at;
      for (std::size_t i = 0; i + 1 < out.points.size(); ++i) {
        if (norm(out.points[i + 1] - out.points[i]) > max_spacing) {
          mids.push_back(0.5 * (out.points[i] + out.points[i + 1]));
          at.push_back(i);
        }
      }
      if (!mids.empty()) {
        const std::vector<double> mv = evaluate_checked(eval, mids);
        for (std::size_t q = mids.size(); q-- > 0;) {
          const std::size_t i = at[q];
          out.points.insert(out.points.begin() + static_cast<std::ptrdiff_t>(i + 1), mids[q]);
          cur.insert(cur.begin() + static_cast<std::ptrdiff_t>(i + 1), mv[q]);
          cap.insert(cap.begin() + static_cast<std::ptrdiff_t>(i + 1), std::min(cap[i], cap[i + 1]));
          out.flags.insert(out.flags.begin() + static_cast<std::ptrdiff_t>(i + 1), 0);
        }
      }
    }
    if (scale <= sched.final_window) {
      ++k;
      break;
    }
    scale = std::max(scale * sched.shrink, sched.final_window);
  }
  out.refine_iterations = k;

  // Final hill climb at the finest window so every point is a discrete normal maximum.
  for (int pass = 0; pass < 50; ++pass) {
    out.update_geometry();
    const std::size_t n = out.points.size();
    std::vector<Vec2> side(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      side[2 * i] = out.points[i] - sched.final_window * out.normal[i];
      side[2 * i + 1] = out.points[i] + sched.final_window * out.normal[i];
    }
    const std::vector<double> v = evaluate_checked(eval, side);
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      double b = cur[i];
      int pick = -1;
      for (int sgn = 0; sgn < 2; ++sgn) {
        const double x = v[2 * i + sgn];
        if (!std::isnan(x) && (std::isnan(b) || x > b)) {
          b = x;
          pick = sgn;
        }
      }
      if (pick >= 0) {
        out.points[i] = side[2 * i + pick];
        cur[i] = b;
        moved = true;
      }
    }
    if (!moved) break;
  }
  out.phi = cur;
  out.update_geometry();
  return out;
}

std::vector<Ridge> refine_ridges(const std::vector<Ridge>& ridges, const PhiEvaluator& eval,
                                 const RefinementSchedule& sched, double max_spacing) {
  std::vector<Ridge> out;
  out.reserve(ridges.size());
  for (std::size_t i = 0; i < ridges.size(); ++i) {
    std::vector<Ridge> others;
    for (std::size_t j = 0; j < ridges.size(); ++j)
      if (j != i) others.push_back(ridges[j]);
    out.push_back(refine_ridge(ridges[i], eval, sched, others, max_spacing));
  }
  return out;
}

Ridge advect_ridge(const Ridge& r, const VelocityField& field, double t0, double t1, const IntegratorConfig& cfg) {
  Ridge out = r;
  if (out.flags.size() != out.points.size()) out.flags.assign(out.points.size(), 0);
  if (!r.points.empty()) {
    const BatchTrajectoryResult res = advect_batch(field, r.points, t0, t1, cfg);
    out.points = res.positions;
    for (std::size_t i = 0; i < out.points.size(); ++i)
      if (res.status[i] != TrajectoryStatus::Ok) out.flags[i] |= ridge_flag::kOutOfDomain;
  }
  if (r.state == RidgeState::Tracked)
    for (auto& f : out.flags) f |= ridge_flag::kUnrefined;
  out.state = RidgeState::Advected;
  out.update_geometry();
  return out;
}

std::vector<double> ridge_phi(const Ridge& r, const PhiEvaluator& eval) { return evaluate_checked(eval, r.points); }

}  // namespace ftlekit
