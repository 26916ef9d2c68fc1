#pragma once

// Batch trajectory integration with an embedded Dormand-Prince 4(5) pair.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ftlekit/linalg.hpp"
#include "ftlekit/velocity_field.hpp"

namespace ftlekit {

enum class BatchStepMode {
  PerCluster,  ///< each cluster of consecutive points shares one accepted-step sequence
  WholeBatch,  ///< every trajectory of the call shares one step sequence
};
const char* to_string(BatchStepMode mode);
BatchStepMode batch_step_mode_from_string(const std::string& s);

struct IntegratorConfig {
  double rtol = 1e-7;
  double atol = 1e-9;
  double initial_step = 0.0;  ///< 0 selects the step automatically
  double max_step = 0.0;      ///< 0 means |t1 - t0|
  std::uint64_t max_steps = 200000;
  BatchStepMode mode = BatchStepMode::PerCluster;

  void validate() const;
  friend bool operator==(const IntegratorConfig&, const IntegratorConfig&) = default;
};

enum class TrajectoryStatus : std::uint8_t { Ok = 0, FrozenOutOfDomain = 1 };

struct BatchTrajectoryResult {
  std::vector<Vec2> positions;
  std::vector<TrajectoryStatus> status;
  std::uint64_t accepted_steps = 0;
  std::uint64_t rejected_steps = 0;
};

struct GradientTrajectoryResult {
  std::vector<Vec2> positions;
  std::vector<Mat2> gradients;
  std::vector<TrajectoryStatus> status;
  std::uint64_t accepted_steps = 0;
  std::uint64_t rejected_steps = 0;
};

/// Advects every point of `x0` from t0 to t1 (t1 < t0 integrates backward).
///
/// In per-cluster mode consecutive runs of `cluster_size` points share steps; in
/// whole-batch mode all points do. The step is controlled by the largest mixed
/// abs/rel error over the trajectories sharing it. Points that start outside
/// field.contains() or leave the sampling bounds are frozen and flagged.
///
/// Throws ErrorCode::Integration on step-count exhaustion (naming the trajectory)
/// or a non-finite velocity.
BatchTrajectoryResult advect_batch(const VelocityField& field, std::span<const Vec2> x0, double t0, double t1,
                                   const IntegratorConfig& cfg, std::size_t cluster_size = 1);

/// Integrates positions together with the flow-map gradient dF/dt = (grad u) F, F(t0) = I.
/// Each point is its own cluster in per-cluster mode. Throws ErrorCode::Divergence when a
/// gradient entry exceeds 1e300.
GradientTrajectoryResult advect_with_gradient(const VelocityField& field, std::span<const Vec2> x0, double t0,
                                              double t1, const IntegratorConfig& cfg);

}  // namespace ftlekit
