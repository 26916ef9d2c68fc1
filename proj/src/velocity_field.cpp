#include "ftlekit/velocity_field.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ftlekit/error.hpp"
#include "ftlekit/format.hpp"

namespace ftlekit {

const char* to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::Swirl: return "swirl";
    case FieldKind::DoubleGyre: return "double-gyre";
    case FieldKind::Linear: return "linear";
    case FieldKind::Gridded: return "gridded";
  }
  return "unknown";
}

const char* to_string(Interpolation mode) {
  return mode == Interpolation::Bicubic ? "bicubic" : "bilinear";
}

Interpolation interpolation_from_string(const std::string& s) {
  if (s == "bicubic") return Interpolation::Bicubic;
  if (s == "bilinear") return Interpolation::Bilinear;
  fail(ErrorCode::Argument, "unknown interpolation mode '" + s + "'");
}

void VelocityField::throw_outside(const Vec2& x, double t) const {
  const Bounds b = sampling_bounds();
  std::ostringstream os;
  os << describe() << ": ";
  if (t < t_min() || t > t_max()) {
    os << "time t=" << fmt_double(t) << " outside [" << fmt_double(t_min()) << ", " << fmt_double(t_max()) << "]";
  } else if (x.x < b.xmin || x.x > b.xmax || !std::isfinite(x.x)) {
    os << "coordinate x1=" << fmt_double(x.x) << " outside [" << fmt_double(b.xmin) << ", " << fmt_double(b.xmax)
       << "]";
  } else {
    os << "coordinate x2=" << fmt_double(x.y) << " outside [" << fmt_double(b.ymin) << ", " << fmt_double(b.ymax)
       << "]";
  }
  fail(ErrorCode::Domain, os.str());
}

Vec2 VelocityField::sample_velocity(const Vec2& x, double t) const {
  Vec2 u;
  if (!try_velocity(x, t, u)) throw_outside(x, t);
  return u;
}

Mat2 VelocityField::sample_velocity_gradient(const Vec2& x, double t) const {
  if (!has_gradient()) fail(ErrorCode::Argument, describe() + ": velocity gradient not available");
  Mat2 g;
  if (!try_velocity_gradient(x, t, g)) throw_outside(x, t);
  return g;
}

// -- swirl ---------------------------------------------------------------------

Vec2 swirl_velocity(const Vec2& x) {
  const double x1 = x.x, x2 = x.y;
  const double r2 = x1 * x1 + x2 * x2;
  if (r2 == 0.0) return {0.0, 0.0};
  const double r = std::sqrt(r2);
  const double k = 1.0 / r - r;
  const double c = std::cos(2.0 * r), s = std::sin(2.0 * r);
  const double d = x1 * x1 - x2 * x2;
  const double p1 = x1 - x1 * x1 * x1 - k * d * x2;
  const double q1 = x2 - 0.5 * x2 * (3.0 * x1 * x1 + x2 * x2) - 2.0 * k * x1 * x2 * x2;
  const double p2 = -x2 + x2 * x2 * x2 + k * d * x1;
  const double q2 = x1 - 0.5 * x1 * (x1 * x1 + 3.0 * x2 * x2) + 2.0 * k * x1 * x1 * x2;
  return {p1 * c + q1 * s, p2 * c + q2 * s};
}

Mat2 swirl_velocity_gradient(const Vec2& x) {
  const double x1 = x.x, x2 = x.y;
  const double r2 = x1 * x1 + x2 * x2;
  if (r2 == 0.0) return Mat2::diag(1.0, -1.0);
  const double r = std::sqrt(r2);
  const double k = 1.0 / r - r;
  const double c = std::cos(2.0 * r), s = std::sin(2.0 * r);
  // dk/dx_i = -(1 + r^2) x_i / r^3
  const double kf = -(1.0 + r2) / (r2 * r);
  const double dk1 = kf * x1, dk2 = kf * x2;
  const double dc1 = -2.0 * s * x1 / r, dc2 = -2.0 * s * x2 / r;
  const double ds1 = 2.0 * c * x1 / r, ds2 = 2.0 * c * x2 / r;

  const double ma = (x1 * x1 - x2 * x2) * x2;  // in p1
  const double mb = x1 * x2 * x2;              // in q1
  const double mc = (x1 * x1 - x2 * x2) * x1;  // in p2
  const double md = x1 * x1 * x2;              // in q2

  const double p1 = x1 - x1 * x1 * x1 - k * ma;
  const double q1 = x2 - 1.5 * x1 * x1 * x2 - 0.5 * x2 * x2 * x2 - 2.0 * k * mb;
  const double p2 = -x2 + x2 * x2 * x2 + k * mc;
  const double q2 = x1 - 0.5 * x1 * x1 * x1 - 1.5 * x1 * x2 * x2 + 2.0 * k * md;

  const double p1_1 = 1.0 - 3.0 * x1 * x1 - (dk1 * ma + k * 2.0 * x1 * x2);
  const double p1_2 = -(dk2 * ma + k * (x1 * x1 - 3.0 * x2 * x2));
  const double q1_1 = -3.0 * x1 * x2 - 2.0 * (dk1 * mb + k * x2 * x2);
  const double q1_2 = 1.0 - 1.5 * x1 * x1 - 1.5 * x2 * x2 - 2.0 * (dk2 * mb + k * 2.0 * x1 * x2);
  const double p2_1 = dk1 * mc + k * (3.0 * x1 * x1 - x2 * x2);
  const double p2_2 = -1.0 + 3.0 * x2 * x2 + dk2 * mc - k * 2.0 * x1 * x2;
  const double q2_1 = 1.0 - 1.5 * x1 * x1 - 1.5 * x2 * x2 + 2.0 * (dk1 * md + k * 2.0 * x1 * x2);
  const double q2_2 = -3.0 * x1 * x2 + 2.0 * (dk2 * md + k * x1 * x1);

  return {p1_1 * c + p1 * dc1 + q1_1 * s + q1 * ds1, p1_2 * c + p1 * dc2 + q1_2 * s + q1 * ds2,
          p2_1 * c + p2 * dc1 + q2_1 * s + q2 * ds1, p2_2 * c + p2 * dc2 + q2_2 * s + q2 * ds2};
}

Vec2 swirl_untransform(const Vec2& x) {
  const double r = norm(x);
  const double c = std::cos(r), s = std::sin(r);
  return {x.x * c + x.y * s, -x.x * s + x.y * c};
}

Vec2 swirl_transform(const Vec2& X) {
  const double r = norm(X);
  const double c = std::cos(r), s = std::sin(r);
  return {X.x * c - X.y * s, X.y * c + X.x * s};
}

bool SwirlField::contains(const Vec2& x) const {
  if (!sampling_bounds().contains(x)) return false;
  const Vec2 X = swirl_untransform(x);
  return std::abs(X.x) <= 1.0 && std::abs(X.y) <= 1.0;
}

bool SwirlField::try_velocity(const Vec2& x, double, Vec2& u) const {
  if (!sampling_bounds().contains(x)) return false;
  u = swirl_velocity(x);
  return true;
}

bool SwirlField::try_velocity_gradient(const Vec2& x, double, Mat2& g) const {
  if (!sampling_bounds().contains(x)) return false;
  g = swirl_velocity_gradient(x);
  return true;
}

// -- linear ------------------------------------------------------------------------

std::string LinearField::describe() const {
  std::ostringstream os;
  os << "linear(G=[" << fmt_double(g_(0, 0)) << "," << fmt_double(g_(0, 1)) << ";" << fmt_double(g_(1, 0)) << ","
     << fmt_double(g_(1, 1)) << "],c=[" << fmt_double(c_.x) << "," << fmt_double(c_.y) << "])";
  return os.str();
}

bool LinearField::try_velocity(const Vec2& x, double, Vec2& u) const {
  if (!domain_.contains(x)) return false;
  u = g_ * x + c_;
  return true;
}

bool LinearField::try_velocity_gradient(const Vec2& x, double, Mat2& g) const {
  if (!domain_.contains(x)) return false;
  g = g_;
  return true;
}

// -- double gyre ------------------------------------------------------------------

std::string DoubleGyreField::describe() const {
  std::ostringstream os;
  os << "double-gyre(A=" << fmt_double(p_.amplitude) << ",eps=" << fmt_double(p_.epsilon)
     << ",omega=" << fmt_double(p_.omega) << ")";
  return os.str();
}

bool DoubleGyreField::try_velocity(const Vec2& x, double t, Vec2& u) const {
  if (!sampling_bounds().contains(x)) return false;
  const double a = p_.epsilon * std::sin(p_.omega * t);
  const double b = 1.0 - 2.0 * a;
  const double f = a * x.x * x.x + b * x.x;
  const double fx = 2.0 * a * x.x + b;
  const double pa = M_PI * p_.amplitude;
  u = {-pa * std::sin(M_PI * f) * std::cos(M_PI * x.y), pa * std::cos(M_PI * f) * std::sin(M_PI * x.y) * fx};
  return true;
}

bool DoubleGyreField::try_velocity_gradient(const Vec2& x, double t, Mat2& g) const {
  if (!sampling_bounds().contains(x)) return false;
  const double a = p_.epsilon * std::sin(p_.omega * t);
  const double b = 1.0 - 2.0 * a;
  const double f = a * x.x * x.x + b * x.x;
  const double fx = 2.0 * a * x.x + b;
  const double fxx = 2.0 * a;
  const double pa = M_PI * p_.amplitude;
  const double sf = std::sin(M_PI * f), cf = std::cos(M_PI * f);
  const double sy = std::sin(M_PI * x.y), cy = std::cos(M_PI * x.y);
  g = {-pa * M_PI * cf * fx * cy, pa * M_PI * sf * sy,
       pa * sy * (-M_PI * sf * fx * fx + cf * fxx), pa * M_PI * cf * cy * fx};
  return true;
}

// -- gridded ----------------------------------------------------------------------

GriddedField::GriddedField(GridGeometry geom, double t0, double dt, std::size_t nt, std::vector<double> values,
                           Interpolation mode, std::string source, NoiseDescriptor noise)
    : geom_(geom), t0_(t0), dt_(dt), nt_(nt), values_(std::move(values)), mode_(mode),
      source_(std::move(source)), noise_(noise) {
  const std::size_t min_nodes = mode_ == Interpolation::Bicubic ? 3 : 2;
  if (geom_.nx < min_nodes || geom_.ny < min_nodes)
    fail(ErrorCode::Argument, "gridded field needs at least " + std::to_string(min_nodes) + " nodes per axis for " +
                                  to_string(mode_) + " interpolation");
  if (!(geom_.spacing > 0.0) || !std::isfinite(geom_.spacing))
    fail(ErrorCode::Argument, "gridded field spacing must be positive");
  if (nt_ == 0) fail(ErrorCode::Argument, "gridded field needs at least one time slice");
  if (nt_ > 1 && !(dt_ > 0.0)) fail(ErrorCode::Argument, "time slices must be increasing");
  if (values_.size() != 2 * nt_ * geom_.size())
    fail(ErrorCode::Argument, "gridded field value count " + std::to_string(values_.size()) + " does not match " +
                                  std::to_string(2 * nt_ * geom_.size()));
}

std::string GriddedField::describe() const {
  std::ostringstream os;
  os << "gridded(source=" << source_ << ",dx=" << fmt_double(geom_.spacing) << ",nx=" << geom_.nx
     << ",ny=" << geom_.ny << ",nt=" << nt_ << "," << to_string(mode_);
  if (noise_.applied) os << ",noise=" << fmt_double(noise_.magnitude) << ",seed=" << noise_.seed;
  os << ")";
  return os.str();
}

double GriddedField::t_min() const {
  return nt_ == 1 ? -std::numeric_limits<double>::infinity() : t0_;
}

double GriddedField::t_max() const {
  return nt_ == 1 ? std::numeric_limits<double>::infinity() : slice_time(nt_ - 1);
}

GriddedField GriddedField::with_interpolation(Interpolation mode) const {
  return GriddedField(geom_, t0_, dt_, nt_, values_, mode, source_, noise_);
}

bool GriddedField::try_velocity(const Vec2& x, double t, Vec2& u) const { return interpolate(x, t, &u, nullptr); }

bool GriddedField::try_velocity_gradient(const Vec2& x, double t, Mat2& g) const {
  Vec2 u;
  return interpolate(x, t, &u, &g);
}

namespace {

// Fractional lattice coordinate, clamped to the lattice inside the margin.
bool lattice_coordinate(double x, double origin, double spacing, std::size_t n, double& f, bool& clamped) {
  f = (x - origin) / spacing;
  // Node positions reproduce node values exactly.
  const double nearest = std::round(f);
  if (std::abs(f - nearest) < 1e-11) f = nearest;
  const double last = static_cast<double>(n - 1);
  clamped = false;
  if (!(f >= -GriddedField::kMarginCells && f <= last + GriddedField::kMarginCells)) return false;
  if (f < 0.0) {
    f = 0.0;
    clamped = true;
  } else if (f > last) {
    f = last;
    clamped = true;
  }
  return true;
}

struct CubicWeights {
  double w[4];
  double dw[4];
};

// Catmull-Rom (Keys, a = -1/2) weights for nodes i-1, i, i+1, i+2 at offset t in [0, 1).
CubicWeights catmull_rom(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {{0.5 * (-t + 2.0 * t2 - t3), 0.5 * (2.0 - 5.0 * t2 + 3.0 * t3), 0.5 * (t + 4.0 * t2 - 3.0 * t3),
           0.5 * (-t2 + t3)},
          {0.5 * (-1.0 + 4.0 * t - 3.0 * t2), 0.5 * (-10.0 * t + 9.0 * t2), 0.5 * (1.0 + 8.0 * t - 9.0 * t2),
           0.5 * (-2.0 * t + 3.0 * t2)}};
}

}  // namespace

void GriddedField::interpolate_slice(std::size_t k, double fx, double fy, Vec2* u, Mat2* g) const {
  const std::size_t nx = geom_.nx, ny = geom_.ny;
  const double* base = values_.data() + 2 * k * nx * ny;
  auto at = [&](std::size_t i, std::size_t j) -> const double* { return base + 2 * (j * nx + i); };

  if (mode_ == Interpolation::Bilinear) {
    std::size_t i = std::min(static_cast<std::size_t>(fx), nx - 2);
    std::size_t j = std::min(static_cast<std::size_t>(fy), ny - 2);
    const double tx = fx - static_cast<double>(i), ty = fy - static_cast<double>(j);
    const double* v00 = at(i, j);
    const double* v10 = at(i + 1, j);
    const double* v01 = at(i, j + 1);
    const double* v11 = at(i + 1, j + 1);
    for (int c = 0; c < 2; ++c) {
      const double lo = (1.0 - tx) * v00[c] + tx * v10[c];
      const double hi = (1.0 - tx) * v01[c] + tx * v11[c];
      (*u)[c] = (1.0 - ty) * lo + ty * hi;
      if (g) {
        (*g)(c, 0) = ((1.0 - ty) * (v10[c] - v00[c]) + ty * (v11[c] - v01[c])) / geom_.spacing;
        (*g)(c, 1) = (hi - lo) / geom_.spacing;
      }
    }
    return;
  }

  const std::size_t i = static_cast<std::size_t>(fx);
  const std::size_t j = static_cast<std::size_t>(fy);
  const CubicWeights wx = catmull_rom(fx - static_cast<double>(i));
  const CubicWeights wy = catmull_rom(fy - static_cast<double>(j));

  // Row interpolation along x for real row jj; ghost columns use the cubic-convolution
  // boundary rule v[-1] = 3 v[0] - 3 v[1] + v[2] (and its mirror at the far end).
  auto row = [&](std::size_t jj, double out[2], double dout[2]) {
    double col[4][2];
    for (int m = 0; m < 4; ++m) {
      const long ii = static_cast<long>(i) - 1 + m;
      for (int c = 0; c < 2; ++c) {
        if (ii >= 0 && ii < static_cast<long>(nx)) {
          col[m][c] = at(static_cast<std::size_t>(ii), jj)[c];
        } else if (ii < 0) {
          col[m][c] = 3.0 * at(0, jj)[c] - 3.0 * at(1, jj)[c] + at(2, jj)[c];
        } else if (ii == static_cast<long>(nx)) {
          col[m][c] = 3.0 * at(nx - 1, jj)[c] - 3.0 * at(nx - 2, jj)[c] + at(nx - 3, jj)[c];
        } else {
          const double ghost = 3.0 * at(nx - 1, jj)[c] - 3.0 * at(nx - 2, jj)[c] + at(nx - 3, jj)[c];
          col[m][c] = 3.0 * ghost - 3.0 * at(nx - 1, jj)[c] + at(nx - 2, jj)[c];
        }
      }
    }
    for (int c = 0; c < 2; ++c) {
      out[c] = wx.w[0] * col[0][c] + wx.w[1] * col[1][c] + wx.w[2] * col[2][c] + wx.w[3] * col[3][c];
      dout[c] = wx.dw[0] * col[0][c] + wx.dw[1] * col[1][c] + wx.dw[2] * col[2][c] + wx.dw[3] * col[3][c];
    }
  };

  double rv[4][2], rd[4][2];
  double real[3][2][2];  // first/last three rows, cached for ghost rows when needed
  auto fetch = [&](long jj, double out[2], double dout[2]) {
    if (jj >= 0 && jj < static_cast<long>(ny)) {
      row(static_cast<std::size_t>(jj), out, dout);
      return;
    }
    const bool low = jj < 0;
    for (int q = 0; q < 3; ++q) row(low ? static_cast<std::size_t>(q) : ny - 1 - q, real[q][0], real[q][1]);
    for (int c = 0; c < 2; ++c) {
      for (int d = 0; d < 2; ++d) {
        const double ghost = 3.0 * real[0][d][c] - 3.0 * real[1][d][c] + real[2][d][c];
        const double v = (low || jj == static_cast<long>(ny)) ? ghost
                                                                : 3.0 * ghost - 3.0 * real[0][d][c] + real[1][d][c];
        (d == 0 ? out : dout)[c] = v;
      }
    }
  };
  for (int m = 0; m < 4; ++m) fetch(static_cast<long>(j) - 1 + m, rv[m], rd[m]);

  for (int c = 0; c < 2; ++c) {
    (*u)[c] = wy.w[0] * rv[0][c] + wy.w[1] * rv[1][c] + wy.w[2] * rv[2][c] + wy.w[3] * rv[3][c];
    if (g) {
      (*g)(c, 0) = (wy.w[0] * rd[0][c] + wy.w[1] * rd[1][c] + wy.w[2] * rd[2][c] + wy.w[3] * rd[3][c]) /
                   geom_.spacing;
      (*g)(c, 1) = (wy.dw[0] * rv[0][c] + wy.dw[1] * rv[1][c] + wy.dw[2] * rv[2][c] + wy.dw[3] * rv[3][c]) /
                   geom_.spacing;
    }
  }
}

bool GriddedField::interpolate(const Vec2& x, double t, Vec2* u, Mat2* g) const {
  double fx, fy;
  bool cx, cy;
  if (!lattice_coordinate(x.x, geom_.x0, geom_.spacing, geom_.nx, fx, cx)) return false;
  if (!lattice_coordinate(x.y, geom_.y0, geom_.spacing, geom_.ny, fy, cy)) return false;

  std::size_t k = 0;
  double w = 0.0;
  if (nt_ > 1) {
    const double ft = (t - t0_) / dt_;
    const double last = static_cast<double>(nt_ - 1);
    const double eps = 1e-12 * std::max(1.0, last);
    if (!(ft >= -eps && ft <= last + eps)) return false;
    const double f = std::clamp(ft, 0.0, last);
    k = std::min(static_cast<std::size_t>(f), nt_ - 2);
    w = f - static_cast<double>(k);
  }

  interpolate_slice(k, fx, fy, u, g);
  if (w != 0.0) {
    Vec2 u1;
    Mat2 g1;
    interpolate_slice(k + 1, fx, fy, &u1, g ? &g1 : nullptr);
    *u = (1.0 - w) * *u + w * u1;
    if (g) *g = (1.0 - w) * *g + w * g1;
  }
  if (g) {
    if (cx) (*g)(0, 0) = (*g)(1, 0) = 0.0;
    if (cy) (*g)(0, 1) = (*g)(1, 1) = 0.0;
  }
  return true;
}

GriddedField discretize_field(const VelocityField& src, double dx, const std::vector<double>& times,
                              Interpolation mode) {
  return discretize_field(src, dx, src.domain(), times, mode);
}

GriddedField discretize_field(const VelocityField& src, double dx, const Bounds& box, const std::vector<double>& times,
                              Interpolation mode) {
  if (!(dx > 0.0) || !std::isfinite(dx)) fail(ErrorCode::Argument, "grid spacing must be positive");
  if (times.empty()) fail(ErrorCode::Argument, "at least one time slice is required");
  double dt = 0.0;
  if (times.size() > 1) {
    dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(dt > 0.0)) fail(ErrorCode::Argument, "time slices must be increasing");
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double expect = times.front() + static_cast<double>(k) * dt;
      if (std::abs(times[k] - expect) > 1e-9 * std::max(1.0, std::abs(dt)))
        fail(ErrorCode::Argument, "time slices must be uniformly spaced");
    }
  }
  auto count = [dx](double span) {
    return static_cast<std::size_t>(std::ceil(span / dx - 1e-9)) + 1;
  };
  GridGeometry geom{box.xmin, box.ymin, dx, count(box.xmax - box.xmin), count(box.ymax - box.ymin)};
  std::vector<double> values(2 * times.size() * geom.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times.front() + static_cast<double>(k) * dt;
    for (std::size_t j = 0; j < geom.ny; ++j) {
      for (std::size_t i = 0; i < geom.nx; ++i) {
        const Vec2 u = src.sample_velocity(geom.node(i, j), t);
        const std::size_t idx = 2 * ((k * geom.ny + j) * geom.nx + i);
        values[idx] = u.x;
        values[idx + 1] = u.y;
      }
    }
  }
  return GriddedField(geom, times.front(), dt, times.size(), std::move(values), mode, src.describe());
}

GriddedField add_noise(const GriddedField& src, double magnitude, std::uint64_t seed) {
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude))
    fail(ErrorCode::Argument, "noise magnitude must be non-negative, got " + fmt_double(magnitude));
  std::vector<double> values = src.values();
  if (magnitude > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-magnitude, magnitude);
    for (double& v : values) v += dist(rng);
  }
  return GriddedField(src.geometry(), src.t0(), src.dt(), src.slice_count(), std::move(values), src.interpolation(),
                      src.source(), NoiseDescriptor{magnitude, seed, true});
}

}  // namespace ftlekit
