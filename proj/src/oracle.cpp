#include "ftlekit/oracle.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "ftlekit/error.hpp"

namespace ftlekit {

namespace {

struct Component {
  double x;      // X_i(T)
  double dxdA;   // dX_i / dA_i
};

// X = A / sqrt(A^2 + (1 - A^2) E), E = exp(-+2T); dX/dA = E / D^{3/2}.
Component solve_component(double A, double e, const Vec2& a, double window) {
  const double d = A * A + (1.0 - A * A) * e;
  if (!(d > 0.0) || !std::isfinite(d)) {
    std::ostringstream os;
    os << "swirl trajectory from (" << a.x << ", " << a.y << ") leaves every bounded region within T = " << window;
    fail(ErrorCode::Domain, os.str());
  }
  const double sd = std::sqrt(d);
  return {A / sd, e / (d * sd)};
}

void check_inputs(const Vec2& a, double window) {
  if (!std::isfinite(a.x) || !std::isfinite(a.y) || !std::isfinite(window))
    fail(ErrorCode::Argument, "oracle inputs must be finite");
}

}  // namespace

Vec2 oracle_lagrangian(const Vec2& a) {
  const double r0 = norm(a);
  const double c = std::cos(r0), s = std::sin(r0);
  return {a.x * c + a.y * s, -a.x * s + a.y * c};
}

Vec2 oracle_flow_map(const Vec2& a, double window) {
  check_inputs(a, window);
  const Vec2 A = oracle_lagrangian(a);
  const Component c1 = solve_component(A.x, std::exp(-2.0 * window), a, window);
  const Component c2 = solve_component(A.y, std::exp(2.0 * window), a, window);
  return swirl_transform({c1.x, c2.x});
}

Mat2 oracle_gradient(const Vec2& a, double window) {
  check_inputs(a, window);
  if (window == 0.0) return Mat2::identity();
  const double r0 = norm(a);
  const double c0 = std::cos(r0), s0 = std::sin(r0);
  const Vec2 A{a.x * c0 + a.y * s0, -a.x * s0 + a.y * c0};

  // dA/da; the r0 terms vanish at the origin.
  Mat2 dAda{c0, s0, -s0, c0};
  if (r0 > 0.0) {
    dAda(0, 0) += A.y * a.x / r0;
    dAda(0, 1) += A.y * a.y / r0;
    dAda(1, 0) -= A.x * a.x / r0;
    dAda(1, 1) -= A.x * a.y / r0;
  }

  const Component c1 = solve_component(A.x, std::exp(-2.0 * window), a, window);
  const Component c2 = solve_component(A.y, std::exp(2.0 * window), a, window);
  const Mat2 dXda = Mat2::diag(c1.dxdA, c2.dxdA) * dAda;

  const Vec2 X{c1.x, c2.x};
  const double r = norm(X);
  const double c = std::cos(r), s = std::sin(r);
  Mat2 g;
  for (int j = 0; j < 2; ++j) {
    const double dX1 = dXda(0, j), dX2 = dXda(1, j);
    const double dr = r > 0.0 ? (X.x * dX1 + X.y * dX2) / r : 0.0;
    const double p = dX1 - X.y * dr;
    const double q = dX2 + X.x * dr;
    g(0, j) = p * c - q * s;
    g(1, j) = p * s + q * c;
  }
  return g;
}

double oracle_ftle(const Vec2& a, double window) {
  if (window == 0.0) fail(ErrorCode::Argument, "FTLE window must be non-zero");
  const auto phi = ftle_from_cg(cg_tensor(oracle_gradient(a, window)), window);
  if (!phi) fail(ErrorCode::Degenerate, "oracle gradient is singular");
  return *phi;
}

OracleResult oracle_evaluate(const Vec2& a, double window) {
  OracleResult r;
  r.position = oracle_flow_map(a, window);
  r.gradient = oracle_gradient(a, window);
  r.cg = cg_tensor(r.gradient);
  const auto phi = ftle_from_cg(r.cg, window);
  if (!phi) fail(ErrorCode::Degenerate, "oracle gradient is singular");
  r.phi = *phi;
  return r;
}

FtleField oracle_ftle_field(const GridGeometry& grid, double window) {
  if (grid.nx == 0 || grid.ny == 0 || !(grid.spacing > 0.0))
    fail(ErrorCode::Config, "FTLE grid needs positive spacing and node counts");
  if (window == 0.0) fail(ErrorCode::Config, "integration window is empty (t1 == t0)");
  const SwirlField swirl;
  FtleField out;
  out.grid = grid;
  out.t0 = 0.0;
  out.t1 = window;
  out.method = GradientMethod::Analytic;
  out.field_description = swirl.describe();
  out.phi.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  out.flags.assign(grid.size(), NodeFlag::Ok);
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vec2 a = grid.node(k % grid.nx, k / grid.nx);
    if (!swirl.contains(a)) {
      out.flags[k] = NodeFlag::OutOfDomain;
      continue;
    }
    try {
      out.phi[k] = oracle_ftle(a, window);
    } catch (const Error& e) {
      out.flags[k] = e.code() == ErrorCode::Domain ? NodeFlag::OutOfDomain : NodeFlag::Degenerate;
    }
  }
  return out;
}

SensitivityResult sensitivity_exact(const SensitivityInput& in, const AlignmentTolerances& tol) {
  if (!(in.lambda2 > 0.0) || !(in.lambda1 >= 0.0) || in.lambda1 > in.lambda2)
    fail(ErrorCode::Argument, "singular values must satisfy 0 <= lambda1 <= lambda2, lambda2 > 0");
  const double beta = in.b + in.epsilon;
  if (!(std::abs(beta) <= 1.0) || std::abs(in.b) > 1.0)
    fail(ErrorCode::Argument, "perturbed alignment |b + epsilon| exceeds 1");
  SensitivityResult r;
  const double l1 = in.lambda1, l2 = in.lambda2;
  r.delta = l1 / l2;
  const double q = 1.0 - r.delta * r.delta;
  r.e_magnitude = l2 * std::sqrt(r.delta * r.delta + beta * beta * q);
  // 1 - beta^2 as a product keeps its digits next to |beta| = 1.
  const double c2 = std::max(0.0, (1.0 - beta) * (1.0 + beta));
  r.n_magnitude = l2 * std::sqrt(c2 + beta * beta * r.delta * r.delta);
  r.rho = l1 * l2 / r.e_magnitude;
  r.sigma = (l2 * l2 - l1 * l1) * beta * std::sqrt(c2) / r.e_magnitude;
  const double e_ref = l2 * std::sqrt(r.delta * r.delta + in.b * in.b * q);
  r.e_magnitude_ratio = r.e_magnitude / e_ref;
  r.strainline_sensitive = std::abs(in.b) < tol.b_tol && r.delta < tol.delta_tol;
  r.stretchline_sensitive = std::abs(in.b) > 1.0 - tol.b_tol;
  return r;
}

}  // namespace ftlekit
