#pragma once

// The FTLE error metric, parameter studies and the end-to-end pipeline.

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ftlekit/advection.hpp"
#include "ftlekit/classification.hpp"
#include "ftlekit/flowmap.hpp"
#include "ftlekit/io.hpp"
#include "ftlekit/ridge.hpp"
#include "ftlekit/velocity_field.hpp"

namespace ftlekit {

struct PhiError {
  double value = 0.0;     ///< mean |num - ref| over the region
  double relative = 0.0;  ///< value / mean(ref) over the region
  std::size_t nodes = 0;  ///< region nodes used
  std::size_t skipped = 0;  ///< region nodes where the numeric field is flagged
};

/// Mean absolute FTLE error over valid reference nodes with ref >= threshold. Grids must
/// match. Throws Argument when the region is empty.
PhiError phi_e(const FtleField& numeric, const FtleField& reference, double threshold = 1.0);

/// Builtin analytic fields: swirl, double_gyre, saddle, rotation, zero. Any other name is
/// read as a gridded-field file (binary or text variant).
FieldPtr open_field(const std::string& source);
bool is_builtin_field(const std::string& source);

/// Box with NaN entries, meaning "use the default".
inline Bounds unset_bounds() {
  const double n = std::numeric_limits<double>::quiet_NaN();
  return {n, n, n, n};
}
inline bool is_set(const Bounds& b) { return b.xmin == b.xmin; }

/// Lattice with the given spacing covering `box` (node count rounded to the nearest integer).
GridGeometry grid_over(const Bounds& box, double spacing);

/// Flat key=value configuration: one pair per line, '#' starts a comment, blank lines are
/// ignored. Keys are the ones written by the snapshot() methods below.
Provenance parse_config(const std::string& text);
Provenance read_config_file(const std::string& path);
/// Later entries replace earlier ones with the same key.
Provenance merge_config(Provenance base, const Provenance& overrides);

enum class StudyKind : std::uint8_t { Dx = 0, Noise = 1, Cluster = 2, Rtol = 3 };
const char* to_string(StudyKind k);
StudyKind study_kind_from_string(const std::string& s);

struct StudyConfig {
  StudyKind kind = StudyKind::Dx;
  std::vector<double> axis;          ///< swept values, all positive
  std::string field = "swirl";
  double t0 = 0.0;
  double window = 2.0;               ///< T; negative for backward windows
  double ftle_spacing = 0.04;
  Bounds ftle_box = unset_bounds();  ///< unset: the field's domain
  std::vector<GradientMethod> methods{GradientMethod::ClusterFd, GradientMethod::AdvectedGradient};
  std::vector<double> cluster_spacings{1e-6};
  /// Velocity grid spacing for the noise, cluster and rtol studies; 0 keeps the source field
  /// as is, NaN selects 2^-11 for the noise study and 0 otherwise.
  double dx = std::numeric_limits<double>::quiet_NaN();
  Bounds velocity_box = unset_bounds();  ///< unset: the field's sampling bounds
  double slice_dt = 0.1;             ///< time-slice spacing when discretizing unsteady fields
  double noise = 0.0;                ///< node noise magnitude when the axis is not the noise level
  std::optional<std::uint64_t> seed;  ///< required whenever noise is applied
  Interpolation interpolation = Interpolation::Bicubic;
  IntegratorConfig integrator;
  double threshold = 1.0;

  void validate() const;
  double resolved_dx() const;
  Provenance snapshot() const;
};

/// Throws Config for unknown keys or malformed values.
StudyConfig study_config_from(const Provenance& kv);

struct StudyRow {
  double axis = 0.0;
  GradientMethod method = GradientMethod::ClusterFd;
  double cluster_spacing = 0.0;  ///< 0 for the advected gradient
  double phi_e = std::numeric_limits<double>::quiet_NaN();
  double relative = std::numeric_limits<double>::quiet_NaN();
  std::size_t nodes = 0;
  std::size_t skipped = 0;
  double seconds = 0.0;
  std::string error;  ///< non-empty marks a failed row

  bool failed() const { return !error.empty(); }
};

struct StudyResult {
  Provenance snapshot;
  std::vector<StudyRow> rows;
  std::string reference;  ///< how the reference field was obtained

  bool complete() const;
  /// Row for (axis, method, cluster spacing); nullptr when absent.
  const StudyRow* find(double axis, GradientMethod m, double cluster_spacing = 0.0) const;
};

/// Runs the study axis points in order. When `output` is non-empty the result file is
/// rewritten after every axis point, so an interrupted or failing run leaves partial rows.
StudyResult run_study(const StudyConfig& cfg, const std::string& output = "");

void save_study(const std::string& path, const StudyResult& r);

struct PipelineConfig {
  std::string field = "swirl";
  std::string ftle_input;  ///< saved FtleField to reuse instead of computing one
  double t0 = 0.0;
  double window = 2.0;
  double ftle_spacing = 0.01;
  Bounds ftle_box = unset_bounds();
  GradientMethod method = GradientMethod::ClusterFd;
  double cluster_spacing = 1e-6;
  IntegratorConfig integrator;
  RidgeTrackerConfig tracker;
  RefinementSchedule schedule;
  double max_spacing = 0.0;  ///< refined point spacing cap (points are inserted); 0 disables
  bool refine = true;
  bool advect = true;
  bool classify = true;
  AlignmentTolerances tolerances;
  std::string output_dir;  ///< empty: nothing is written
  Provenance extra;        ///< appended to every artifact's provenance

  void validate() const;
  Provenance snapshot() const;
};

/// With allow_unknown, keys that are not pipeline keys are ignored instead of rejected.
PipelineConfig pipeline_config_from(const Provenance& kv, bool allow_unknown = false);

/// Settings for sampling a field onto a lattice.
struct DiscretizeConfig {
  double dx = 0.0;
  Bounds box = unset_bounds();  ///< unset: the field's sampling bounds
  double t0 = 0.0;
  double window = 2.0;          ///< time slices cover [t0, t0 + T] for unsteady fields
  double slice_dt = 0.1;
  Interpolation interpolation = Interpolation::Bicubic;
};

/// Reads dx, velocity_box, t0, T, slice_dt and interpolation; other keys are ignored.
DiscretizeConfig discretize_config_from(const Provenance& kv);
GriddedField discretize_with(const VelocityField& f, const DiscretizeConfig& cfg);

struct PipelineResult {
  FtleField ftle;
  std::vector<Ridge> tracked;
  std::vector<Ridge> refined;
  std::vector<Ridge> advected;
  std::vector<ClassificationProfile> profiles;
  std::vector<std::string> artifacts;
  std::vector<std::string> flagged;  ///< human-readable flagged failures

  bool clean() const { return flagged.empty(); }
};

/// FTLE, seeds, tracking, refinement, advection and classification. Artifacts are written as
/// each stage completes. A failing stage throws Error with the stage name in the message and
/// the original code; artifacts of earlier stages stay on disk.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace ftlekit
