#pragma once

// Closed-form flow map, flow-map gradient and FTLE of the swirl-saddle model, and
// exact perturbed classification magnitudes for a tangent misaligned by epsilon.

#include "ftlekit/flowmap.hpp"
#include "ftlekit/linalg.hpp"
#include "ftlekit/velocity_field.hpp"

namespace ftlekit {

struct OracleResult {
  Vec2 position;
  Mat2 gradient;
  CGTensor cg;
  double phi = 0.0;
};

/// Untransformed Lagrangian coordinates A = R(-|a|) a.
Vec2 oracle_lagrangian(const Vec2& a);

/// Position at time T of the swirl trajectory starting at `a`. Throws ErrorCode::Domain
/// when the closed form blows up within the window.
Vec2 oracle_flow_map(const Vec2& a, double window);

/// Flow-map gradient d x(T) / d a by the chain rule through the transform.
Mat2 oracle_gradient(const Vec2& a, double window);

/// Phi from the oracle gradient (window must be non-zero).
double oracle_ftle(const Vec2& a, double window);

OracleResult oracle_evaluate(const Vec2& a, double window);

/// Oracle FTLE on a lattice; nodes outside the swirl region or with blow-up are flagged.
FtleField oracle_ftle_field(const GridGeometry& grid, double window);

struct SensitivityInput {
  double b = 0.0;        ///< alignment coefficient of the unperturbed tangent with xi2
  double epsilon = 0.0;  ///< perturbation added to b
  double lambda1 = 1.0;  ///< smaller singular value of the flow-map gradient
  double lambda2 = 1.0;  ///< larger singular value
};

struct SensitivityResult {
  double delta = 1.0;             ///< lambda1 / lambda2
  double e_magnitude = 0.0;       ///< |grad F e0'|
  double n_magnitude = 0.0;       ///< |grad F n0'|
  double rho = 0.0;               ///< hyperbolic repulsion (pre-log)
  double sigma = 0.0;             ///< Lagrangian shear (pre-log)
  double e_magnitude_ratio = 1.0; ///< e_magnitude relative to the unperturbed value
  bool strainline_sensitive = false;
  bool stretchline_sensitive = false;
};

/// Exact magnitudes for e0' = sqrt(1-beta^2) xi1 + beta xi2 with beta = b + epsilon.
/// Throws ErrorCode::Argument when |beta| > 1 or the singular values are not ordered.
SensitivityResult sensitivity_exact(const SensitivityInput& in, const AlignmentTolerances& tol = {});

}  // namespace ftlekit
