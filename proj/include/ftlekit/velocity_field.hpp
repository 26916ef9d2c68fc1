#pragma once

// Velocity samplers: the analytic swirl-saddle model, linear test fields, the
// double gyre, and gridded fields with cubic-convolution interpolation.

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "ftlekit/linalg.hpp"

namespace ftlekit {

enum class FieldKind { Swirl, DoubleGyre, Linear, Gridded };
const char* to_string(FieldKind kind);

/// Immutable velocity sampler u(x, t).
///
/// Three regions are distinguished:
///  - domain():          nominal rectangle, the default extent for grids built on the field;
///  - contains(x):       admissible initial positions for trajectories;
///  - sampling_bounds(): where u can be evaluated. Integration freezes a trajectory that
///                       leaves this rectangle.
class VelocityField {
 public:
  virtual ~VelocityField() = default;

  virtual FieldKind kind() const = 0;
  virtual std::string describe() const = 0;
  virtual Bounds domain() const = 0;
  virtual bool contains(const Vec2& x) const { return domain().contains(x); }
  virtual Bounds sampling_bounds() const { return domain(); }
  virtual double t_min() const { return -std::numeric_limits<double>::infinity(); }
  virtual double t_max() const { return std::numeric_limits<double>::infinity(); }
  virtual bool has_gradient() const { return true; }

  /// Non-throwing sampling used in integration loops. Returns false outside the
  /// sampling bounds or the time span.
  virtual bool try_velocity(const Vec2& x, double t, Vec2& u) const = 0;
  virtual bool try_velocity_gradient(const Vec2& x, double t, Mat2& g) const = 0;
  virtual bool try_velocity_and_gradient(const Vec2& x, double t, Vec2& u, Mat2& g) const {
    return try_velocity(x, t, u) && try_velocity_gradient(x, t, g);
  }

  /// Throws ErrorCode::Domain naming the offending coordinate.
  Vec2 sample_velocity(const Vec2& x, double t) const;
  /// Spatial gradient g(i, k) = du_i/dx_k. Throws ErrorCode::Domain / Argument.
  Mat2 sample_velocity_gradient(const Vec2& x, double t) const;

 protected:
  [[noreturn]] void throw_outside(const Vec2& x, double t) const;
};

using FieldPtr = std::shared_ptr<const VelocityField>;

// -- Analytic swirl-saddle model --------------------------------------------

/// Swirl velocity at x, valid for any finite x (the r -> 0 limit is the origin's zero velocity).
Vec2 swirl_velocity(const Vec2& x);
/// Closed-form spatial gradient of swirl_velocity; finite at the origin.
Mat2 swirl_velocity_gradient(const Vec2& x);
/// Maps a physical position to the untransformed frame X = R(-r) x.
Vec2 swirl_untransform(const Vec2& x);
/// Maps an untransformed position to the physical frame x = R(r) X.
Vec2 swirl_transform(const Vec2& X);

/// Autonomous swirl-saddle field. Admissible initial positions are the image of the
/// untransformed square [-1,1]^2, an invariant set of the flow.
class SwirlField final : public VelocityField {
 public:
  FieldKind kind() const override { return FieldKind::Swirl; }
  std::string describe() const override { return "swirl"; }
  Bounds domain() const override { return {-1.0, 1.0, -1.0, 1.0}; }
  bool contains(const Vec2& x) const override;
  Bounds sampling_bounds() const override { return {-1.5, 1.5, -1.5, 1.5}; }
  bool try_velocity(const Vec2& x, double t, Vec2& u) const override;
  bool try_velocity_gradient(const Vec2& x, double t, Mat2& g) const override;
};

// -- Linear fields u = G x + c ----------------------------------------------

class LinearField final : public VelocityField {
 public:
  explicit LinearField(const Mat2& g, const Vec2& c = {}, const Bounds& domain = {-10.0, 10.0, -10.0, 10.0})
      : g_(g), c_(c), domain_(domain) {}

  static LinearField zero(const Bounds& domain = {-10.0, 10.0, -10.0, 10.0}) {
    return LinearField(Mat2{}, {}, domain);
  }
  static LinearField saddle(const Bounds& domain = {-10.0, 10.0, -10.0, 10.0}) {
    return LinearField(Mat2::diag(1.0, -1.0), {}, domain);
  }
  static LinearField rotation(double omega = 1.0, const Bounds& domain = {-10.0, 10.0, -10.0, 10.0}) {
    return LinearField(Mat2{0.0, -omega, omega, 0.0}, {}, domain);
  }

  FieldKind kind() const override { return FieldKind::Linear; }
  std::string describe() const override;
  Bounds domain() const override { return domain_; }
  bool try_velocity(const Vec2& x, double t, Vec2& u) const override;
  bool try_velocity_gradient(const Vec2& x, double t, Mat2& g) const override;

  const Mat2& matrix() const { return g_; }
  const Vec2& offset() const { return c_; }

 private:
  Mat2 g_;
  Vec2 c_;
  Bounds domain_;
};

// -- Double gyre --------------------------------------------------------------

struct DoubleGyreParams {
  double amplitude = 0.1;
  double epsilon = 0.25;
  double omega = 0.6283185307179586;  // 2*pi/10
};

/// Time-periodic double gyre on [0,2]x[0,1].
class DoubleGyreField final : public VelocityField {
 public:
  explicit DoubleGyreField(DoubleGyreParams p = {}) : p_(p) {}

  FieldKind kind() const override { return FieldKind::DoubleGyre; }
  std::string describe() const override;
  Bounds domain() const override { return {0.0, 2.0, 0.0, 1.0}; }
  Bounds sampling_bounds() const override { return domain().inflated(0.25); }
  bool try_velocity(const Vec2& x, double t, Vec2& u) const override;
  bool try_velocity_gradient(const Vec2& x, double t, Mat2& g) const override;

  const DoubleGyreParams& params() const { return p_; }

 private:
  DoubleGyreParams p_;
};

// -- Gridded fields -----------------------------------------------------------

enum class Interpolation { Bicubic, Bilinear };
const char* to_string(Interpolation mode);
Interpolation interpolation_from_string(const std::string& s);

/// Uniform node lattice: node (i, j) sits at origin + (i, j) * spacing.
struct GridGeometry {
  double x0 = 0.0;
  double y0 = 0.0;
  double spacing = 1.0;
  std::size_t nx = 0;
  std::size_t ny = 0;

  Vec2 node(std::size_t i, std::size_t j) const {
    return {x0 + static_cast<double>(i) * spacing, y0 + static_cast<double>(j) * spacing};
  }
  std::size_t size() const { return nx * ny; }
  Bounds bounds() const {
    return {x0, x0 + static_cast<double>(nx - 1) * spacing, y0, y0 + static_cast<double>(ny - 1) * spacing};
  }
  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

struct NoiseDescriptor {
  double magnitude = 0.0;
  std::uint64_t seed = 0;
  bool applied = false;
};

/// Velocity data on a uniform lattice and uniformly spaced time slices.
///
/// Space: cubic convolution (Catmull-Rom, C1) or bilinear; time: linear between slices.
/// A single slice gives a steady field. Queries up to `kMarginCells` cells outside the
/// lattice take clamped-edge values; beyond that the query is out of domain.
class GriddedField final : public VelocityField {
 public:
  static constexpr double kMarginCells = 2.0;

  /// `values` holds nt * ny * nx interleaved (u, v) pairs, slice-major then row-major.
  GriddedField(GridGeometry geom, double t0, double dt, std::size_t nt, std::vector<double> values,
               Interpolation mode = Interpolation::Bicubic, std::string source = "user",
               NoiseDescriptor noise = {});

  FieldKind kind() const override { return FieldKind::Gridded; }
  std::string describe() const override;
  Bounds domain() const override { return geom_.bounds(); }
  Bounds sampling_bounds() const override { return geom_.bounds().inflated(kMarginCells * geom_.spacing); }
  double t_min() const override;
  double t_max() const override;
  bool try_velocity(const Vec2& x, double t, Vec2& u) const override;
  bool try_velocity_gradient(const Vec2& x, double t, Mat2& g) const override;
  bool try_velocity_and_gradient(const Vec2& x, double t, Vec2& u, Mat2& g) const override {
    return interpolate(x, t, &u, &g);
  }

  const GridGeometry& geometry() const { return geom_; }
  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t slice_count() const { return nt_; }
  double slice_time(std::size_t k) const { return t0_ + static_cast<double>(k) * dt_; }
  Interpolation interpolation() const { return mode_; }
  const std::string& source() const { return source_; }
  const NoiseDescriptor& noise() const { return noise_; }
  const std::vector<double>& values() const { return values_; }

  Vec2 node_value(std::size_t k, std::size_t i, std::size_t j) const {
    const std::size_t idx = 2 * ((k * geom_.ny + j) * geom_.nx + i);
    return {values_[idx], values_[idx + 1]};
  }

  /// Same data with a different spatial interpolant.
  GriddedField with_interpolation(Interpolation mode) const;

 private:
  bool interpolate(const Vec2& x, double t, Vec2* u, Mat2* g) const;
  void interpolate_slice(std::size_t k, double fx, double fy, Vec2* u, Mat2* g) const;

  GridGeometry geom_;
  double t0_;
  double dt_;
  std::size_t nt_;
  std::vector<double> values_;
  Interpolation mode_;
  std::string source_;
  NoiseDescriptor noise_;
};

/// Samples an analytic field on a lattice of spacing dx covering `box` (the field's
/// nominal domain when omitted). `times` must be uniformly spaced; one entry gives a
/// steady field.
GriddedField discretize_field(const VelocityField& src, double dx, const std::vector<double>& times,
                              Interpolation mode = Interpolation::Bicubic);
GriddedField discretize_field(const VelocityField& src, double dx, const Bounds& box,
                              const std::vector<double>& times, Interpolation mode = Interpolation::Bicubic);

/// Adds frozen node noise: every component of every node of every slice gets an
/// independent uniform draw from [-magnitude, magnitude]. Deterministic per seed.
GriddedField add_noise(const GriddedField& src, double magnitude, std::uint64_t seed);

}  // namespace ftlekit
