#include "ftlekit/advection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>

#include "ftlekit/error.hpp"
#include "ftlekit/format.hpp"

namespace ftlekit {

const char* to_string(BatchStepMode mode) {
  return mode == BatchStepMode::PerCluster ? "per-cluster" : "whole-batch";
}

BatchStepMode batch_step_mode_from_string(const std::string& s) {
  if (s == "per-cluster") return BatchStepMode::PerCluster;
  if (s == "whole-batch") return BatchStepMode::WholeBatch;
  fail(ErrorCode::Argument, "unknown batch step mode '" + s + "'");
}

void IntegratorConfig::validate() const {
  if (!(rtol > 0.0)) fail(ErrorCode::Argument, "rtol must be positive");
  if (!(atol > 0.0)) fail(ErrorCode::Argument, "atol must be positive");
  if (max_steps == 0) fail(ErrorCode::Argument, "max_steps must be positive");
  if (initial_step < 0.0 || max_step < 0.0) fail(ErrorCode::Argument, "step sizes must be non-negative");
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// PI controller constants.
constexpr double kBeta = 0.04;
constexpr double kExpo1 = 0.2 - kBeta * 0.75;
constexpr double kSafe = 0.9;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 10.0;
constexpr int kDomainRetries = 3;

enum class RhsStatus { Ok, Outside, NonFinite };

struct Counters {
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
};

/// Integrates `n` trajectories of dimension Dim sharing one step sequence.
/// `index_base` is the global index of the first trajectory, used in error messages.
template <int Dim, class Rhs, class AfterStep>
void integrate_group(const Rhs& rhs, const AfterStep& after_step, std::size_t index_base, std::size_t n, double* y,
                     TrajectoryStatus* status, double t0, double t1, const IntegratorConfig& cfg, Counters& counters) {
  const double span = t1 - t0;
  const double dir = span > 0 ? 1.0 : -1.0;
  const double hmax = cfg.max_step > 0.0 ? std::min(cfg.max_step, std::abs(span)) : std::abs(span);

  std::vector<std::size_t> active;
  active.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (status[i] == TrajectoryStatus::Ok) active.push_back(i);

  const std::size_t len = n * Dim;
  std::array<std::vector<double>, 7> k;
  for (auto& v : k) v.assign(len, 0.0);
  std::vector<double> ytmp(len), ynew(len);
  std::vector<std::size_t> failed;

  // Evaluates one stage for all active trajectories; collects out-of-domain ones.
  auto stage = [&](double t, const std::vector<double>& ys, std::vector<double>& out) {
    failed.clear();
    for (std::size_t i : active) {
      const RhsStatus st = rhs(t, &ys[i * Dim], &out[i * Dim]);
      if (st == RhsStatus::Outside) {
        failed.push_back(i);
      } else if (st == RhsStatus::NonFinite) {
        fail(ErrorCode::Integration, "non-finite velocity on trajectory " + std::to_string(index_base + i) +
                                         " at t=" + fmt_double(t));
      }
    }
  };
  auto freeze_failed = [&]() {
    for (std::size_t i : failed) status[i] = TrajectoryStatus::FrozenOutOfDomain;
    std::erase_if(active, [&](std::size_t i) { return status[i] != TrajectoryStatus::Ok; });
  };

  std::vector<double> y0(y, y + len);
  stage(t0, y0, k[0]);
  freeze_failed();
  if (active.empty()) return;

  // Initial step: standard two-evaluation estimate over the batch.
  double h = cfg.initial_step;
  if (h <= 0.0) {
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i : active) {
      for (int c = 0; c < Dim; ++c) {
        const std::size_t q = i * Dim + c;
        const double sk = cfg.atol + cfg.rtol * std::abs(y[q]);
        dnf = std::max(dnf, std::abs(k[0][q]) / sk);
        dny = std::max(dny, std::abs(y[q]) / sk);
      }
    }
    h = (dnf <= 1e-5 || dny <= 1e-5) ? 1e-6 : 0.01 * dny / dnf;
    h = std::min(h, hmax);
    for (std::size_t i : active)
      for (int c = 0; c < Dim; ++c) ytmp[i * Dim + c] = y[i * Dim + c] + dir * h * k[0][i * Dim + c];
    stage(t0 + dir * h, ytmp, k[1]);
    if (failed.empty()) {
      double der2 = 0.0;
      for (std::size_t i : active) {
        for (int c = 0; c < Dim; ++c) {
          const std::size_t q = i * Dim + c;
          const double sk = cfg.atol + cfg.rtol * std::abs(y[q]);
          der2 = std::max(der2, std::abs(k[1][q] - k[0][q]) / sk);
        }
      }
      der2 /= h;
      const double der12 = std::max(der2, dnf);
      const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
      h = std::min({100.0 * h, h1, hmax});
    }
  }
  h = std::min(h, hmax) * dir;

  double t = t0;
  double facold = 1e-4;
  bool last_rejected = false;
  int domain_rejects = 0;
  std::uint64_t steps = 0;

  while (!active.empty() && dir * (t1 - t) > 0.0) {
    if (++steps > cfg.max_steps) {
      fail(ErrorCode::Integration, "step limit " + std::to_string(cfg.max_steps) + " reached on trajectory " +
                                       std::to_string(index_base + active.front()) + " at t=" + fmt_double(t));
    }
    bool last = false;
    if (dir * (t + h - t1) >= 0.0) {
      h = t1 - t;
      last = true;
    }

    auto combine = [&](std::vector<double>& out, std::initializer_list<std::pair<int, double>> terms) {
      for (std::size_t i : active) {
        for (int c = 0; c < Dim; ++c) {
          const std::size_t q = i * Dim + c;
          double acc = 0.0;
          for (const auto& [s, a] : terms) acc += a * k[s][q];
          out[q] = y[q] + h * acc;
        }
      }
    };

    bool outside = false;
    combine(ytmp, {{0, a21}});
    stage(t + c2 * h, ytmp, k[1]);
    outside = !failed.empty();
    if (!outside) {
      combine(ytmp, {{0, a31}, {1, a32}});
      stage(t + c3 * h, ytmp, k[2]);
      outside = !failed.empty();
    }
    if (!outside) {
      combine(ytmp, {{0, a41}, {1, a42}, {2, a43}});
      stage(t + c4 * h, ytmp, k[3]);
      outside = !failed.empty();
    }
    if (!outside) {
      combine(ytmp, {{0, a51}, {1, a52}, {2, a53}, {3, a54}});
      stage(t + c5 * h, ytmp, k[4]);
      outside = !failed.empty();
    }
    if (!outside) {
      combine(ytmp, {{0, a61}, {1, a62}, {2, a63}, {3, a64}, {4, a65}});
      stage(t + h, ytmp, k[5]);
      outside = !failed.empty();
    }
    if (!outside) {
      combine(ynew, {{0, a71}, {2, a73}, {3, a74}, {4, a75}, {5, a76}});
      stage(t + h, ynew, k[6]);
      outside = !failed.empty();
    }
    if (outside) {
      // A stage left the sampling bounds: shrink a few times before freezing the offenders
      // at their last accepted position.
      ++counters.rejected;
      if (++domain_rejects >= kDomainRetries) {
        freeze_failed();
        domain_rejects = 0;
      } else {
        h *= 0.25;
      }
      continue;
    }

    double err = 0.0;
    for (std::size_t i : active) {
      for (int c = 0; c < Dim; ++c) {
        const std::size_t q = i * Dim + c;
        const double e = h * (e1 * k[0][q] + e3 * k[2][q] + e4 * k[3][q] + e5 * k[4][q] + e6 * k[5][q] +
                              e7 * k[6][q]);
        const double sk = cfg.atol + cfg.rtol * std::max(std::abs(y[q]), std::abs(ynew[q]));
        err = std::max(err, std::abs(e) / sk);
      }
    }
    if (!std::isfinite(err)) {
      fail(ErrorCode::Integration, "non-finite error estimate on trajectory " +
                                       std::to_string(index_base + active.front()) + " at t=" + fmt_double(t));
    }

    const double fac11 = std::pow(err, kExpo1);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(facold, kBeta);
      fac = std::clamp(fac / kSafe, 1.0 / kFacMax, 1.0 / kFacMin);
      double hnew = h / fac;
      facold = std::max(err, 1e-4);
      ++counters.accepted;
      domain_rejects = 0;
      for (std::size_t i : active) {
        for (int c = 0; c < Dim; ++c) {
          const std::size_t q = i * Dim + c;
          y[q] = ynew[q];
          k[0][q] = k[6][q];
        }
        after_step(index_base + i, &y[i * Dim]);
      }
      t = last ? t1 : t + h;
      if (std::abs(hnew) > hmax) hnew = dir * hmax;
      if (last_rejected) hnew = dir * std::min(std::abs(hnew), std::abs(h));
      last_rejected = false;
      h = hnew;
    } else {
      ++counters.rejected;
      last_rejected = true;
      h /= std::min(1.0 / kFacMin, fac11 / kSafe);
    }
  }
}

template <int Dim, class Rhs, class AfterStep>
void integrate_all(const Rhs& rhs, const AfterStep& after_step, std::size_t n, std::size_t cluster_size,
                   std::vector<double>& y, std::vector<TrajectoryStatus>& status, double t0, double t1,
                   const IntegratorConfig& cfg, Counters& total) {
  if (cfg.mode == BatchStepMode::WholeBatch || n <= cluster_size) {
    integrate_group<Dim>(rhs, after_step, 0, n, y.data(), status.data(), t0, t1, cfg, total);
    return;
  }
  const std::size_t groups = (n + cluster_size - 1) / cluster_size;
  std::vector<Counters> per(groups);
  std::vector<std::exception_ptr> errors(groups);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t first = g * cluster_size;
    const std::size_t count = std::min(cluster_size, n - first);
    try {
      integrate_group<Dim>(rhs, after_step, first, count, y.data() + first * Dim, status.data() + first, t0, t1,
                           cfg, per[g]);
    } catch (...) {
      errors[g] = std::current_exception();
    }
  }
  for (std::size_t g = 0; g < groups; ++g) {
    if (errors[g]) std::rethrow_exception(errors[g]);
    total.accepted += per[g].accepted;
    total.rejected += per[g].rejected;
  }
}

void check_window(double t0, double t1) {
  if (!std::isfinite(t0) || !std::isfinite(t1)) fail(ErrorCode::Argument, "integration times must be finite");
  if (t0 == t1) fail(ErrorCode::Argument, "integration window is empty (t1 == t0)");
}

}  // namespace

BatchTrajectoryResult advect_batch(const VelocityField& field, std::span<const Vec2> x0, double t0, double t1,
                                   const IntegratorConfig& cfg, std::size_t cluster_size) {
  cfg.validate();
  check_window(t0, t1);
  if (cluster_size == 0) fail(ErrorCode::Argument, "cluster size must be positive");
  const std::size_t n = x0.size();
  std::vector<double> y(2 * n);
  std::vector<TrajectoryStatus> status(n, TrajectoryStatus::Ok);
  for (std::size_t i = 0; i < n; ++i) {
    y[2 * i] = x0[i].x;
    y[2 * i + 1] = x0[i].y;
    if (!field.contains(x0[i])) status[i] = TrajectoryStatus::FrozenOutOfDomain;
  }
  auto rhs = [&field](double t, const double* s, double* ds) {
    Vec2 u;
    if (!field.try_velocity({s[0], s[1]}, t, u)) return RhsStatus::Outside;
    if (!std::isfinite(u.x) || !std::isfinite(u.y)) return RhsStatus::NonFinite;
    ds[0] = u.x;
    ds[1] = u.y;
    return RhsStatus::Ok;
  };
  auto none = [](std::size_t, const double*) {};
  Counters counters;
  integrate_all<2>(rhs, none, n, cluster_size, y, status, t0, t1, cfg, counters);

  BatchTrajectoryResult out;
  out.positions.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.positions[i] = {y[2 * i], y[2 * i + 1]};
  out.status = std::move(status);
  out.accepted_steps = counters.accepted;
  out.rejected_steps = counters.rejected;
  return out;
}

GradientTrajectoryResult advect_with_gradient(const VelocityField& field, std::span<const Vec2> x0, double t0,
                                              double t1, const IntegratorConfig& cfg) {
  cfg.validate();
  check_window(t0, t1);
  if (!field.has_gradient()) fail(ErrorCode::Argument, field.describe() + ": velocity gradient not available");
  const std::size_t n = x0.size();
  std::vector<double> y(6 * n);
  std::vector<TrajectoryStatus> status(n, TrajectoryStatus::Ok);
  for (std::size_t i = 0; i < n; ++i) {
    double* s = &y[6 * i];
    s[0] = x0[i].x;
    s[1] = x0[i].y;
    s[2] = 1.0;
    s[3] = 0.0;
    s[4] = 0.0;
    s[5] = 1.0;
    if (!field.contains(x0[i])) status[i] = TrajectoryStatus::FrozenOutOfDomain;
  }
  auto rhs = [&field](double t, const double* s, double* ds) {
    Vec2 u;
    Mat2 g;
    if (!field.try_velocity_and_gradient({s[0], s[1]}, t, u, g)) return RhsStatus::Outside;
    ds[0] = u.x;
    ds[1] = u.y;
    // d/dt dx_i/da_j = (du_i/dx_k) (dx_k/da_j)
    ds[2] = g(0, 0) * s[2] + g(0, 1) * s[4];
    ds[3] = g(0, 0) * s[3] + g(0, 1) * s[5];
    ds[4] = g(1, 0) * s[2] + g(1, 1) * s[4];
    ds[5] = g(1, 0) * s[3] + g(1, 1) * s[5];
    for (int c = 0; c < 6; ++c)
      if (!std::isfinite(ds[c])) return RhsStatus::NonFinite;
    return RhsStatus::Ok;
  };
  auto check_divergence = [](std::size_t idx, const double* s) {
    for (int c = 2; c < 6; ++c) {
      if (!(std::abs(s[c]) <= 1e300))
        fail(ErrorCode::Divergence, "flow-map gradient diverged on trajectory " + std::to_string(idx));
    }
  };
  Counters counters;
  integrate_all<6>(rhs, check_divergence, n, 1, y, status, t0, t1, cfg, counters);

  GradientTrajectoryResult out;
  out.positions.resize(n);
  out.gradients.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* s = &y[6 * i];
    out.positions[i] = {s[0], s[1]};
    out.gradients[i] = Mat2{s[2], s[3], s[4], s[5]};
  }
  out.status = std::move(status);
  out.accepted_steps = counters.accepted;
  out.rejected_steps = counters.rejected;
  return out;
}

}  // namespace ftlekit
