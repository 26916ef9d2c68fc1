#pragma once

// Normal-maximum FTLE ridges: seed detection on line sets, parabola-fit tracking on
// the interpolated field, refinement against fresh FTLE evaluations, and advection.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ftlekit/advection.hpp"
#include "ftlekit/flowmap.hpp"
#include "ftlekit/linalg.hpp"

namespace ftlekit {

enum class RidgeState : std::uint8_t { Tracked = 0, Refined = 1, Advected = 2 };
const char* to_string(RidgeState s);
RidgeState ridge_state_from_string(const std::string& s);

enum class StopReason : std::uint8_t {
  None = 0,
  DomainExit = 1,      ///< (i) left the domain or the valid part of the FTLE field
  Collision = 2,       ///< (ii) reached the start or end of another ridge (or closed on itself)
  NoMaximum = 3,       ///< (iii) no transverse maximum
  BelowThreshold = 4,  ///< (iv) FTLE below the stop threshold
  MaxPoints = 5,
};
const char* to_string(StopReason r);
StopReason stop_reason_from_string(const std::string& s);

enum class InitialStep : std::uint8_t { Gradient = 0, GradientNormal = 1 };
const char* to_string(InitialStep m);
InitialStep initial_step_from_string(const std::string& s);

/// Offset of the vertex of the parabola through (-h, fm), (0, f0), (h, fp).
double parabola_vertex(double fm, double f0, double fp, double h);

/// Per-point flag bits.
namespace ridge_flag {
inline constexpr std::uint8_t kFrozen = 1;        ///< normal windows of neighbours crossed during refinement
inline constexpr std::uint8_t kEvalFailed = 2;    ///< no valid FTLE sample at some refinement step
inline constexpr std::uint8_t kOutOfDomain = 4;   ///< frozen outside the domain during advection
inline constexpr std::uint8_t kUnrefined = 8;     ///< advected without prior refinement
}  // namespace ridge_flag

struct RefinementSchedule {
  double initial_window = 0.0;  ///< W0; 0 selects the FTLE grid spacing
  double shrink = 0.5;
  std::size_t samples = 11;     ///< samples per normal, odd, >= 3
  double final_window = 1e-5;
  std::size_t max_iterations = 60;

  void validate() const;
  friend bool operator==(const RefinementSchedule&, const RefinementSchedule&) = default;
};

struct Ridge {
  std::vector<Vec2> points;
  std::vector<double> s;
  std::vector<Vec2> tangent;
  std::vector<Vec2> normal;
  std::vector<double> phi;
  std::vector<std::uint8_t> flags;
  RidgeState state = RidgeState::Tracked;
  Vec2 seed;
  StopReason stop_start = StopReason::None;
  StopReason stop_end = StopReason::None;
  RefinementSchedule schedule;     ///< valid when refined
  std::size_t refine_iterations = 0;

  std::size_t size() const { return points.size(); }
  /// Recomputes s (normalized arc length), tangents (central differences, one-sided at the
  /// ends) and normals (tangent rotated +90 degrees) from the polyline.
  void update_geometry();
  double length() const;
};

/// Resolved tracker settings; zero / NaN fields pick defaults relative to the FTLE grid.
struct RidgeTrackerConfig {
  double line_spacing = 0.0;  ///< seed line spacing; 0 selects 10 grid cells
  double seed_threshold = std::numeric_limits<double>::quiet_NaN();  ///< NaN selects 0.4 max(Phi)
  double step = 0.0;          ///< tracking step; 0 selects 2 grid cells
  double lateral = 0.0;       ///< transverse sample offset h; 0 selects step / 2
  InitialStep initial = InitialStep::GradientNormal;
  double stop_threshold = std::numeric_limits<double>::quiet_NaN();  ///< NaN selects 0.25 max(Phi)
  std::size_t max_points = 20000;
  std::size_t min_points = 8;  ///< shorter ridges are discarded

  /// Returns a copy with every default filled in for `ftle`.
  RidgeTrackerConfig resolved(const FtleField& ftle) const;
  void validate() const;
};

/// Cubic-convolution interpolant of an FTLE grid, falling back to bilinear over the valid corners
/// next to flagged or boundary nodes. Cells without valid corners give NaN.
class FtleInterpolant {
 public:
  explicit FtleInterpolant(const FtleField& f) : f_(&f) {}

  double value(const Vec2& x) const;
  /// Central differences with step equal to the grid spacing; NaN components if invalid.
  Vec2 gradient(const Vec2& x) const;
  bool inside(const Vec2& x) const { return f_->grid.bounds().contains(x); }
  const FtleField& field() const { return *f_; }

 private:
  const FtleField* f_;
};

struct Seed {
  Vec2 position;
  double phi = 0.0;
  Vec2 line_direction;  ///< direction of the seed line it was found on
};

/// Strict along-line maxima above the seed threshold on horizontal and vertical lines,
/// merged within one grid cell, sorted by (x, y).
std::vector<Seed> find_seeds(const FtleField& ftle, const RidgeTrackerConfig& cfg);

/// Tracks one ridge in both directions from the seed. `others` are previously accepted ridges
/// consulted for stop condition (ii).
Ridge track_ridge(const Seed& seed, const FtleInterpolant& phi, const RidgeTrackerConfig& cfg,
                  std::span<const Ridge> others = {});

/// Seeds, then tracks in seed order, skipping seeds that lie on an already tracked ridge.
std::vector<Ridge> extract_ridges(const FtleField& ftle, const RidgeTrackerConfig& cfg);

/// Exact FTLE at arbitrary points; NaN marks failed evaluations.
using PhiEvaluator = std::function<std::vector<double>(std::span<const Vec2>)>;

PhiEvaluator make_ftle_evaluator(const VelocityField& field, double t0, double t1, GradientMethod method, double da,
                                 const IntegratorConfig& cfg);

/// Normal-window refinement. W0 at each point is capped at half its distance to `others`.
/// Points whose windows cross a neighbour's are frozen for that iteration and flagged.
Ridge refine_ridge(const Ridge& r, const PhiEvaluator& eval, const RefinementSchedule& sched,
                   std::span<const Ridge> others = {}, double max_spacing = 0.0);

/// Refines each ridge with every other ridge as a neighbour.
std::vector<Ridge> refine_ridges(const std::vector<Ridge>& ridges, const PhiEvaluator& eval,
                                 const RefinementSchedule& sched, double max_spacing = 0.0);

/// Advects the ridge points; frozen points are flagged and kept in sequence.
Ridge advect_ridge(const Ridge& r, const VelocityField& field, double t0, double t1, const IntegratorConfig& cfg);

/// Exact FTLE along the ridge points.
std::vector<double> ridge_phi(const Ridge& r, const PhiEvaluator& eval);

/// Minimum distance from p to the polyline.
double polyline_distance(std::span<const Vec2> poly, const Vec2& p);

}  // namespace ftlekit
