#include "ftlekit/flowmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ftlekit/error.hpp"

namespace ftlekit {

const char* to_string(GradientMethod m) {
  switch (m) {
    case GradientMethod::ClusterFd: return "cluster-fd";
    case GradientMethod::AdvectedGradient: return "advected-gradient";
    case GradientMethod::Analytic: return "analytic";
  }
  return "unknown";
}

GradientMethod gradient_method_from_string(const std::string& s) {
  if (s == "cluster-fd" || s == "fd") return GradientMethod::ClusterFd;
  if (s == "advected-gradient" || s == "ag") return GradientMethod::AdvectedGradient;
  if (s == "analytic") return GradientMethod::Analytic;
  fail(ErrorCode::Argument, "unknown gradient method '" + s + "'");
}

const char* to_string(NodeFlag f) {
  switch (f) {
    case NodeFlag::Ok: return "ok";
    case NodeFlag::OutOfDomain: return "out-of-domain";
    case NodeFlag::IntegrationFailure: return "integration-failure";
    case NodeFlag::Degenerate: return "degenerate";
  }
  return "unknown";
}

double CGTensor::singular1() const { return std::sqrt(std::max(lambda1, 0.0)); }
double CGTensor::singular2() const { return std::sqrt(std::max(lambda2, 0.0)); }

double cg_largest_eigenvalue(double c11, double c12, double c22) {
  const double d = c11 - c22;
  return 0.5 * (c11 + c22 + std::sqrt(d * d + 4.0 * c12 * c12));
}

namespace {

// Fills eigenvalues/eigenvectors; `det` is det(C) computed by the caller as accurately as it can.
void decompose(CGTensor& cg, double det) {
  cg.lambda2 = cg_largest_eigenvalue(cg.c11, cg.c12, cg.c22);
  if (!(cg.lambda2 > 0.0)) {
    cg.degenerate = true;
    cg.lambda1 = std::min(0.0, cg.lambda2);
    cg.xi2 = {1.0, 0.0};
    cg.xi1 = {0.0, -1.0};
    return;
  }
  // Minus branch evaluated as det / lambda2 to avoid cancellation.
  cg.lambda1 = det / cg.lambda2;

  // Null vector of C - lambda2 I from its larger-magnitude row.
  const double r1a = cg.c11 - cg.lambda2, r1b = cg.c12;
  const double r2a = cg.c12, r2b = cg.c22 - cg.lambda2;
  const double n1 = std::hypot(r1a, r1b), n2 = std::hypot(r2a, r2b);
  Vec2 v;
  if (n1 == 0.0 && n2 == 0.0) {
    cg.isotropic = true;
    v = {1.0, 0.0};
  } else if (n2 > n1) {
    v = {-r2b, r2a};
  } else {
    v = {r1b, -r1a};  // (C12, lambda2 - C11)
  }
  v = normalized(v);
  if (v.x < 0.0 || (v.x == 0.0 && v.y < 0.0)) v = -v;
  cg.xi2 = v;
  cg.xi1 = {v.y, -v.x};
  if (cg.lambda2 - cg.lambda1 <= 1e-14 * cg.lambda2) cg.isotropic = true;
}

}  // namespace

CGTensor cg_tensor(const Mat2& f) {
  for (double a : f.a)
    if (!std::isfinite(a)) fail(ErrorCode::Argument, "flow-map gradient has non-finite entries");
  CGTensor cg;
  const Mat2 c = f.transposed() * f;
  cg.c11 = c(0, 0);
  cg.c12 = 0.5 * (c(0, 1) + c(1, 0));
  cg.c22 = c(1, 1);
  const double jd = f.det();
  decompose(cg, jd * jd);
  if (!cg.degenerate) {
    const double s2 = cg.singular2(), s1 = cg.singular1();
    cg.u2 = (1.0 / s2) * (f * cg.xi2);
    cg.u1 = s1 > 0.0 ? (1.0 / s1) * (f * cg.xi1) : rot90(cg.u2) * -1.0;
  }
  return cg;
}

CGTensor cg_from_components(double c11, double c12, double c22) {
  for (double a : {c11, c12, c22})
    if (!std::isfinite(a)) fail(ErrorCode::Argument, "tensor has non-finite entries");
  CGTensor cg;
  cg.c11 = c11;
  cg.c12 = c12;
  cg.c22 = c22;
  decompose(cg, c11 * c22 - c12 * c12);
  return cg;
}

std::optional<double> ftle_from_cg(const CGTensor& cg, double window) {
  if (window == 0.0 || !std::isfinite(window)) fail(ErrorCode::Argument, "FTLE window must be non-zero");
  if (!(cg.lambda2 > 0.0)) return std::nullopt;
  return std::log(cg.lambda2) / (2.0 * std::abs(window));
}

std::vector<GradientSample> cluster_gradient(const VelocityField& field, std::span<const Vec2> x0, double da,
                                             double t0, double t1, const IntegratorConfig& cfg) {
  if (!(da > 0.0) || !std::isfinite(da)) fail(ErrorCode::Argument, "cluster spacing must be positive");
  cfg.validate();
  if (t0 == t1) fail(ErrorCode::Argument, "integration window is empty (t1 == t0)");
  const std::size_t n = x0.size();
  std::vector<Vec2> members(5 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = x0[i];
    members[5 * i + 0] = a;
    members[5 * i + 1] = {a.x + da, a.y};
    members[5 * i + 2] = {a.x - da, a.y};
    members[5 * i + 3] = {a.x, a.y + da};
    members[5 * i + 4] = {a.x, a.y - da};
  }

  std::vector<GradientSample> out(n);
  auto assemble = [&](std::size_t i, const Vec2* p, const TrajectoryStatus* st) {
    GradientSample& g = out[i];
    g.position = p[0];
    for (int m = 0; m < 5; ++m) {
      if (st[m] != TrajectoryStatus::Ok) {
        g.flag = NodeFlag::OutOfDomain;
        return;
      }
    }
    // Differences of displacements, so a vanishing flow gives the identity exactly.
    const Vec2* m0 = &members[5 * i];
    Vec2 d[5];
    for (int m = 0; m < 5; ++m) d[m] = p[m] - m0[m];
    const double inv = 1.0 / (2.0 * da);
    g.gradient = Mat2{1.0 + (d[1].x - d[2].x) * inv, (d[3].x - d[4].x) * inv, (d[1].y - d[2].y) * inv,
                      1.0 + (d[3].y - d[4].y) * inv};
  };

  if (cfg.mode == BatchStepMode::WholeBatch) {
    try {
      const BatchTrajectoryResult r = advect_batch(field, members, t0, t1, cfg);
      for (std::size_t i = 0; i < n; ++i) assemble(i, &r.positions[5 * i], &r.status[5 * i]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Integration && e.code() != ErrorCode::Divergence) throw;
      for (auto& g : out) g.flag = NodeFlag::IntegrationFailure;
    }
    return out;
  }

#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      const BatchTrajectoryResult r =
          advect_batch(field, std::span<const Vec2>(members.data() + 5 * i, 5), t0, t1, cfg, 5);
      assemble(i, r.positions.data(), r.status.data());
    } catch (const Error&) {
      out[i].flag = NodeFlag::IntegrationFailure;
    }
  }
  return out;
}

std::vector<GradientSample> advected_gradient(const VelocityField& field, std::span<const Vec2> x0, double t0,
                                              double t1, const IntegratorConfig& cfg) {
  cfg.validate();
  if (t0 == t1) fail(ErrorCode::Argument, "integration window is empty (t1 == t0)");
  if (!field.has_gradient()) fail(ErrorCode::Argument, field.describe() + ": velocity gradient not available");
  const std::size_t n = x0.size();
  std::vector<GradientSample> out(n);
  auto assign = [&](std::size_t i, const GradientTrajectoryResult& r, std::size_t k) {
    out[i].position = r.positions[k];
    out[i].gradient = r.gradients[k];
    if (r.status[k] != TrajectoryStatus::Ok) out[i].flag = NodeFlag::OutOfDomain;
  };

  if (cfg.mode == BatchStepMode::WholeBatch) {
    try {
      const GradientTrajectoryResult r = advect_with_gradient(field, x0, t0, t1, cfg);
      for (std::size_t i = 0; i < n; ++i) assign(i, r, i);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Integration && e.code() != ErrorCode::Divergence) throw;
      for (auto& g : out) g.flag = NodeFlag::IntegrationFailure;
    }
    return out;
  }

#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      const GradientTrajectoryResult r = advect_with_gradient(field, x0.subspan(i, 1), t0, t1, cfg);
      assign(i, r, 0);
    } catch (const Error&) {
      out[i].flag = NodeFlag::IntegrationFailure;
    }
  }
  return out;
}

std::vector<GradientSample> flow_map_gradient(const VelocityField& field, std::span<const Vec2> x0,
                                              GradientMethod method, double da, double t0, double t1,
                                              const IntegratorConfig& cfg) {
  switch (method) {
    case GradientMethod::ClusterFd: return cluster_gradient(field, x0, da, t0, t1, cfg);
    case GradientMethod::AdvectedGradient: return advected_gradient(field, x0, t0, t1, cfg);
    case GradientMethod::Analytic: break;
  }
  fail(ErrorCode::Argument, "the analytic method is only available through the swirl oracle");
}

std::size_t FtleField::valid_count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), NodeFlag::Ok));
}

double FtleField::max_value() const {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < phi.size(); ++k)
    if (flags[k] == NodeFlag::Ok) m = std::max(m, phi[k]);
  return m;
}

namespace {

std::vector<double> phi_from_samples(const std::vector<GradientSample>& samples, double window,
                                     std::vector<NodeFlag>* flags) {
  std::vector<double> phi(samples.size(), std::numeric_limits<double>::quiet_NaN());
  if (flags) flags->assign(samples.size(), NodeFlag::Ok);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    NodeFlag f = samples[k].flag;
    if (f == NodeFlag::Ok) {
      const auto v = ftle_from_cg(cg_tensor(samples[k].gradient), window);
      if (v && std::isfinite(*v)) {
        phi[k] = *v;
      } else {
        f = NodeFlag::Degenerate;
      }
    }
    if (flags) (*flags)[k] = f;
  }
  return phi;
}

}  // namespace

FtleField compute_ftle_field(const VelocityField& field, const GridGeometry& grid, double t0, double t1,
                             GradientMethod method, double da, const IntegratorConfig& cfg) {
  if (grid.nx == 0 || grid.ny == 0 || !(grid.spacing > 0.0))
    fail(ErrorCode::Config, "FTLE grid needs positive spacing and node counts");
  if (method == GradientMethod::ClusterFd && !(da > 0.0)) fail(ErrorCode::Config, "cluster spacing must be positive");
  if (t0 == t1) fail(ErrorCode::Config, "integration window is empty (t1 == t0)");
  cfg.validate();

  std::vector<Vec2> nodes(grid.size());
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) nodes[j * grid.nx + i] = grid.node(i, j);

  FtleField out;
  out.grid = grid;
  out.t0 = t0;
  out.t1 = t1;
  out.method = method;
  out.cluster_spacing = method == GradientMethod::ClusterFd ? da : 0.0;
  out.integrator = cfg;
  out.field_description = field.describe();
  const auto samples = flow_map_gradient(field, nodes, method, da, t0, t1, cfg);
  out.phi = phi_from_samples(samples, t1 - t0, &out.flags);
  return out;
}

std::vector<double> ftle_at_points(const VelocityField& field, std::span<const Vec2> points, GradientMethod method,
                                   double da, double t0, double t1, const IntegratorConfig& cfg) {
  return phi_from_samples(flow_map_gradient(field, points, method, da, t0, t1, cfg), t1 - t0, nullptr);
}

}  // namespace ftlekit
