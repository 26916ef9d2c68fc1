#pragma once

// Deformation metrics along ridges: growth of the advected tangent and normal, and the
// split of the advected normal into repulsion (along n_t) and shear (along e_t).

#include <cstdint>
#include <vector>

#include "ftlekit/advection.hpp"
#include "ftlekit/flowmap.hpp"
#include "ftlekit/linalg.hpp"
#include "ftlekit/ridge.hpp"

namespace ftlekit {

/// Metrics for one gradient and unit tangent e0 (n0 = e0 rotated +90 degrees).
/// Logarithms are natural. F n0 = rho n_t + sigma e_t exactly.
struct PointClassification {
  double e_magnitude = 0.0;  ///< |F e0|
  double n_magnitude = 0.0;  ///< |F n0|
  double e_l = 0.0;
  double n_l = 0.0;
  double rho = 0.0;    ///< <n_t, F n0>, signed
  double sigma = 0.0;  ///< <e_t, F n0>, signed
  double rho_l = 0.0;  ///< log|rho|
  double sigma_l = 0.0;  ///< log|sigma|; -inf when sigma == 0
  Vec2 e_t, n_t;
  bool zero_shear = false;

  int rho_sign() const { return rho > 0.0 ? 1 : rho < 0.0 ? -1 : 0; }
  int sigma_sign() const { return sigma > 0.0 ? 1 : sigma < 0.0 ? -1 : 0; }
};

/// Throws Argument for a non-unit or non-finite tangent, Degenerate for a singular gradient.
PointClassification classify_point(const Mat2& gradient, const Vec2& e0);

struct AlignmentDiagnostic {
  double b = 0.0;      ///< <e0, xi2> with xi1 oriented so that <e0, xi1> >= 0
  double delta = 0.0;  ///< lambda1 / lambda2 of the Cauchy-Green tensor
  bool isotropic = false;
  bool strainline_sensitive = false;
  bool stretchline_sensitive = false;
};

AlignmentDiagnostic alignment_diagnostic(const CGTensor& cg, const Vec2& e0, const AlignmentTolerances& tol = {});

namespace profile_flag {
inline constexpr std::uint32_t kInvalidGradient = 1;  ///< excluded from statistics
inline constexpr std::uint32_t kZeroShear = 2;
inline constexpr std::uint32_t kStrainlineSensitive = 4;
inline constexpr std::uint32_t kStretchlineSensitive = 8;
inline constexpr std::uint32_t kIsotropic = 16;
inline constexpr std::uint32_t kRidgeFlagged = 32;  ///< the ridge point carried flags of its own
}  // namespace profile_flag

struct ProfilePoint {
  double s = 0.0;
  Vec2 x;
  double phi = 0.0;
  PointClassification metrics;
  AlignmentDiagnostic alignment;
  std::uint32_t flags = 0;

  bool valid() const { return (flags & profile_flag::kInvalidGradient) == 0; }
};

struct ClassificationProfile {
  std::vector<ProfilePoint> points;
  double t0 = 0.0, t1 = 0.0;
  GradientMethod method = GradientMethod::ClusterFd;
  double cluster_spacing = 0.0;
  AlignmentTolerances tolerances;

  std::size_t valid_count() const;
};

/// Gradients at the ridge points (cluster finite differences by default), classified with the
/// ridge tangents. Advected ridges are rejected: their points do not live at t0.
ClassificationProfile classify_ridge(const Ridge& r, const VelocityField& field, double t0, double t1, double da,
                                     const IntegratorConfig& cfg, GradientMethod method = GradientMethod::ClusterFd,
                                     const AlignmentTolerances& tol = {});

}  // namespace ftlekit
