#pragma once

// Flow-map gradients (cluster finite differences or advected gradient), the
// right Cauchy-Green tensor and FTLE field assembly.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ftlekit/advection.hpp"
#include "ftlekit/linalg.hpp"
#include "ftlekit/velocity_field.hpp"

namespace ftlekit {

/// Right Cauchy-Green tensor C = F^T F with its eigen/singular structure.
///
/// lambda1 <= lambda2 are eigenvalues of C; xi1, xi2 the unit eigenvectors with
/// cross(xi1, xi2) = +1 and xi2 oriented with a non-negative first component.
/// u_i = F xi_i / sqrt(lambda_i) when built from a gradient, so cross(u1, u2) = sign(det F).
struct CGTensor {
  double c11 = 0.0, c12 = 0.0, c22 = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  Vec2 xi1, xi2;
  Vec2 u1, u2;
  bool degenerate = false;  ///< lambda2 == 0: eigenvectors undefined
  bool isotropic = false;   ///< lambda1 == lambda2: every direction is an eigenvector

  Mat2 matrix() const { return {c11, c12, c12, c22}; }
  double singular1() const;
  double singular2() const;
};

/// Thresholds for flagging eigen-alignment regimes where the classification
/// metrics are sensitive to tangent errors.
struct AlignmentTolerances {
  double b_tol = 0.1;
  double delta_tol = 0.05;
};

/// Largest eigenvalue of a symmetric 2x2 matrix by the closed form.
double cg_largest_eigenvalue(double c11, double c12, double c22);

/// C = F^T F and its decomposition. Requires finite entries.
CGTensor cg_tensor(const Mat2& gradient);
/// Decomposition of a given symmetric tensor (left singular directions left zero).
CGTensor cg_from_components(double c11, double c12, double c22);

/// Phi = log(lambda2) / (2 |T|); empty when lambda2 <= 0. Throws on T == 0.
std::optional<double> ftle_from_cg(const CGTensor& cg, double window);

enum class GradientMethod : std::uint8_t { ClusterFd = 0, AdvectedGradient = 1, Analytic = 2 };
const char* to_string(GradientMethod m);
GradientMethod gradient_method_from_string(const std::string& s);

enum class NodeFlag : std::uint8_t {
  Ok = 0,
  OutOfDomain = 1,         ///< start or cluster member outside the domain, or frozen during advection
  IntegrationFailure = 2,  ///< step exhaustion, non-finite values or divergence
  Degenerate = 3,          ///< lambda2 <= 0
};
const char* to_string(NodeFlag f);

struct GradientSample {
  Mat2 gradient;
  Vec2 position;  ///< advected position of the (central) point
  NodeFlag flag = NodeFlag::Ok;
  bool valid() const { return flag == NodeFlag::Ok; }
};

/// Central-difference flow-map gradient from the 5-point cluster {x, x +- da e1, x +- da e2}
/// advected as one batch. Any frozen member invalidates the node (no one-sided fallback).
std::vector<GradientSample> cluster_gradient(const VelocityField& field, std::span<const Vec2> x0, double da,
                                             double t0, double t1, const IntegratorConfig& cfg);

/// Flow-map gradient by integrating the coupled gradient equations.
std::vector<GradientSample> advected_gradient(const VelocityField& field, std::span<const Vec2> x0, double t0,
                                              double t1, const IntegratorConfig& cfg);

/// Dispatches on the method (ClusterFd uses `da`; Analytic is not valid here).
std::vector<GradientSample> flow_map_gradient(const VelocityField& field, std::span<const Vec2> x0,
                                              GradientMethod method, double da, double t0, double t1,
                                              const IntegratorConfig& cfg);

/// FTLE values on a uniform lattice; flagged nodes hold NaN.
struct FtleField {
  GridGeometry grid;
  double t0 = 0.0;
  double t1 = 0.0;
  std::vector<double> phi;
  std::vector<NodeFlag> flags;
  GradientMethod method = GradientMethod::ClusterFd;
  double cluster_spacing = 0.0;
  IntegratorConfig integrator;
  std::string field_description;

  double at(std::size_t i, std::size_t j) const { return phi[j * grid.nx + i]; }
  bool valid(std::size_t i, std::size_t j) const { return flags[j * grid.nx + i] == NodeFlag::Ok; }
  std::size_t valid_count() const;
  double max_value() const;
};

FtleField compute_ftle_field(const VelocityField& field, const GridGeometry& grid, double t0, double t1,
                             GradientMethod method, double da, const IntegratorConfig& cfg);

/// Phi at arbitrary points by fresh advection (NaN where the evaluation is invalid).
std::vector<double> ftle_at_points(const VelocityField& field, std::span<const Vec2> points, GradientMethod method,
                                   double da, double t0, double t1, const IntegratorConfig& cfg);

}  // namespace ftlekit
