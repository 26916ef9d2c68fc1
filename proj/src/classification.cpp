#include "ftlekit/classification.hpp"

#include <cmath>
#include <limits>

#include "ftlekit/error.hpp"

namespace ftlekit {

PointClassification classify_point(const Mat2& gradient, const Vec2& e0) {
  if (!std::isfinite(e0.x) || !std::isfinite(e0.y) || std::abs(norm(e0) - 1.0) > 1e-9)
    fail(ErrorCode::Argument, "classification tangent must be a finite unit vector");
  for (double v : gradient.a)
    if (!std::isfinite(v)) fail(ErrorCode::Argument, "flow-map gradient has non-finite entries");
  if (gradient.det() == 0.0) fail(ErrorCode::Degenerate, "flow-map gradient is singular");

  PointClassification c;
  const Vec2 n0 = rot90(e0);
  const Vec2 fe = gradient * e0, fn = gradient * n0;
  c.e_magnitude = norm(fe);
  c.n_magnitude = norm(fn);
  c.e_t = (1.0 / c.e_magnitude) * fe;
  c.n_t = rot90(c.e_t);
  c.e_l = std::log(c.e_magnitude);
  c.n_l = std::log(c.n_magnitude);
  c.rho = dot(c.n_t, fn);
  c.sigma = dot(c.e_t, fn);
  c.rho_l = std::log(std::abs(c.rho));
  c.zero_shear = c.sigma == 0.0;
  c.sigma_l = c.zero_shear ? -std::numeric_limits<double>::infinity() : std::log(std::abs(c.sigma));
  return c;
}

AlignmentDiagnostic alignment_diagnostic(const CGTensor& cg, const Vec2& e0, const AlignmentTolerances& tol) {
  if (cg.degenerate) fail(ErrorCode::Degenerate, "Cauchy-Green tensor is degenerate");
  AlignmentDiagnostic d;
  d.delta = cg.lambda1 / cg.lambda2;
  d.isotropic = cg.isotropic;
  Vec2 xi1 = cg.xi1, xi2 = cg.xi2;
  if (dot(e0, xi1) < 0.0) {
    xi1 = -xi1;
    xi2 = -xi2;
  }
  d.b = d.isotropic ? 0.0 : dot(e0, xi2);
  if (!d.isotropic) {
    d.strainline_sensitive = std::abs(d.b) < tol.b_tol && d.delta < tol.delta_tol;
    d.stretchline_sensitive = std::abs(d.b) > 1.0 - tol.b_tol;
  }
  return d;
}

std::size_t ClassificationProfile::valid_count() const {
  std::size_t n = 0;
  for (const auto& p : points) n += p.valid();
  return n;
}

ClassificationProfile classify_ridge(const Ridge& r, const VelocityField& field, double t0, double t1, double da,
                                     const IntegratorConfig& cfg, GradientMethod method,
                                     const AlignmentTolerances& tol) {
  if (r.state == RidgeState::Advected)
    fail(ErrorCode::Argument, "advected ridges cannot be classified at the initial time");
  if (r.tangent.size() != r.points.size()) fail(ErrorCode::Argument, "ridge geometry is not up to date");

  ClassificationProfile out;
  out.t0 = t0;
  out.t1 = t1;
  out.method = method;
  out.cluster_spacing = method == GradientMethod::ClusterFd ? da : 0.0;
  out.tolerances = tol;
  const std::vector<GradientSample> g = flow_map_gradient(field, r.points, method, da, t0, t1, cfg);
  out.points.resize(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    ProfilePoint& p = out.points[i];
    p.s = i < r.s.size() ? r.s[i] : 0.0;
    p.x = r.points[i];
    p.phi = i < r.phi.size() ? r.phi[i] : std::numeric_limits<double>::quiet_NaN();
    if (i < r.flags.size() && r.flags[i] != 0) p.flags |= profile_flag::kRidgeFlagged;
    if (!g[i].valid()) {
      p.flags |= profile_flag::kInvalidGradient;
      continue;
    }
    try {
      p.metrics = classify_point(g[i].gradient, r.tangent[i]);
      p.alignment = alignment_diagnostic(cg_tensor(g[i].gradient), r.tangent[i], tol);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Degenerate) throw;
      p.flags |= profile_flag::kInvalidGradient;
      continue;
    }
    if (p.metrics.zero_shear) p.flags |= profile_flag::kZeroShear;
    if (p.alignment.strainline_sensitive) p.flags |= profile_flag::kStrainlineSensitive;
    if (p.alignment.stretchline_sensitive) p.flags |= profile_flag::kStretchlineSensitive;
    if (p.alignment.isotropic) p.flags |= profile_flag::kIsotropic;
  }
  return out;
}

}  // namespace ftlekit
