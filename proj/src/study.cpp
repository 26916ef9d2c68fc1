#include "ftlekit/study.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ftlekit/error.hpp"
#include "ftlekit/format.hpp"
#include "ftlekit/oracle.hpp"

namespace ftlekit {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : ",") + fmt_double(x);
  return out;
}

std::string bounds_text(const Bounds& b) {
  if (!is_set(b)) return "auto";
  return join({b.xmin, b.xmax, b.ymin, b.ymax});
}

// Typed lookups over a flat key/value list; every key must be consumed.
class Keys {
 public:
  explicit Keys(const Provenance& kv) : kv_(kv) {}

  const std::string* get(const std::string& k) {
    used_.insert(k);
    return find_key(kv_, k);
  }

  template <class F>
  auto parse(const std::string& k, F&& f) {
    const std::string* v = get(k);
    try {
      return f(*v);
    } catch (const Error& e) {
      fail(ErrorCode::Config, "config key '" + k + "': " + e.what());
    }
  }

  void num(const std::string& k, double& out) {
    if (get(k)) out = parse(k, [](const std::string& s) { return parse_double(s); });
  }
  void count(const std::string& k, std::uint64_t& out) {
    if (get(k)) out = parse(k, parse_count);
  }
  void flag(const std::string& k, bool& out) {
    if (const std::string* v = get(k)) {
      if (*v == "1" || *v == "true" || *v == "yes" || *v == "on")
        out = true;
      else if (*v == "0" || *v == "false" || *v == "no" || *v == "off")
        out = false;
      else
        fail(ErrorCode::Config, "config key '" + k + "': expected a boolean, got '" + *v + "'");
    }
  }
  void text(const std::string& k, std::string& out) {
    if (const std::string* v = get(k)) out = *v;
  }
  void list(const std::string& k, std::vector<double>& out) {
    if (get(k))
      out = parse(k, [](const std::string& s) {
        std::vector<double> v;
        for (const std::string& item : split(s, ',')) v.push_back(parse_double(item));
        return v;
      });
  }
  void box(const std::string& k, Bounds& out) {
    const std::string* v = get(k);
    if (!v) return;
    if (*v == "auto") {
      out = unset_bounds();
      return;
    }
    std::vector<double> b;
    list(k, b);
    if (b.size() != 4 || !(b[0] < b[1]) || !(b[2] < b[3]))
      fail(ErrorCode::Config, "config key '" + k + "': expected xmin,xmax,ymin,ymax");
    out = {b[0], b[1], b[2], b[3]};
  }
  template <class E, class F>
  void choice(const std::string& k, E& out, F&& from_string) {
    if (get(k)) out = parse(k, [&](const std::string& s) {
      try {
        return from_string(s);
      } catch (const std::exception& e) {
        fail(ErrorCode::Config, e.what());
      }
    });
  }
  void integrator(IntegratorConfig& c) {
    num("integrator.rtol", c.rtol);
    num("integrator.atol", c.atol);
    num("integrator.initial_step", c.initial_step);
    num("integrator.max_step", c.max_step);
    count("integrator.max_steps", c.max_steps);
    choice("integrator.mode", c.mode, batch_step_mode_from_string);
  }

  void finish() const {
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) fail(ErrorCode::Config, "unknown config key '" + k + "'");
  }

 private:
  static std::uint64_t parse_count(const std::string& s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      fail(ErrorCode::Config, "expected a non-negative integer, got '" + s + "'");
    return v;
  }

  const Provenance& kv_;
  std::set<std::string> used_;
};

// Config errors from lower-level validation keep their message but take the config code.
template <class F>
void as_config(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    fail(ErrorCode::Config, e.what());
  }
}

bool steady(const VelocityField& f) {
  switch (f.kind()) {
    case FieldKind::Swirl:
    case FieldKind::Linear: return true;
    case FieldKind::Gridded: return static_cast<const GriddedField&>(f).slice_count() == 1;
    default: return false;
  }
}

std::vector<double> slice_times(const VelocityField& f, double t0, double t1, double slice_dt) {
  if (steady(f)) return {std::min(t0, t1)};
  const double lo = std::min(t0, t1), span = std::abs(t1 - t0);
  const auto n = static_cast<std::size_t>(std::ceil(span / slice_dt - 1e-9)) + 1;
  std::vector<double> t(std::max<std::size_t>(n, 2));
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = lo + static_cast<double>(k) * slice_dt;
  return t;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

StudyRow row_for(double axis, GradientMethod m, double da) {
  StudyRow r;
  r.axis = axis;
  r.method = m;
  r.cluster_spacing = da;
  return r;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r' || c == ',') c = ';';
  return s;
}

}  // namespace

// -- metric -------------------------------------------------------------------

PhiError phi_e(const FtleField& numeric, const FtleField& reference, double threshold) {
  if (!(numeric.grid == reference.grid)) fail(ErrorCode::Argument, "phi_e: FTLE grids differ");
  if (numeric.phi.size() != numeric.grid.size() || reference.phi.size() != reference.grid.size())
    fail(ErrorCode::Argument, "phi_e: FTLE arrays do not match their grid");
  PhiError out;
  double sum = 0.0, ref_sum = 0.0;
  for (std::size_t k = 0; k < reference.phi.size(); ++k) {
    if (reference.flags[k] != NodeFlag::Ok || !(reference.phi[k] >= threshold)) continue;
    if (numeric.flags[k] != NodeFlag::Ok) {
      ++out.skipped;
      continue;
    }
    sum += std::abs(numeric.phi[k] - reference.phi[k]);
    ref_sum += reference.phi[k];
    ++out.nodes;
  }
  if (out.nodes == 0)
    fail(ErrorCode::Argument, "phi_e: no valid nodes with reference Phi >= " + fmt_double(threshold) +
                                  " (threshold too high?)");
  out.value = sum / static_cast<double>(out.nodes);
  out.relative = ref_sum > 0.0 ? sum / ref_sum : std::numeric_limits<double>::quiet_NaN();
  return out;
}

// -- fields and grids ---------------------------------------------------------

bool is_builtin_field(const std::string& s) {
  return s == "swirl" || s == "double-gyre" || s == "saddle" || s == "rotation" || s == "zero";
}

FieldPtr open_field(const std::string& source) {
  if (source == "swirl") return std::make_shared<SwirlField>();
  if (source == "double-gyre") return std::make_shared<DoubleGyreField>();
  if (source == "saddle") return std::make_shared<LinearField>(LinearField::saddle());
  if (source == "rotation") return std::make_shared<LinearField>(LinearField::rotation());
  if (source == "zero") return std::make_shared<LinearField>(LinearField::zero());
  if (source.empty()) fail(ErrorCode::Config, "no field source given");
  return std::make_shared<GriddedField>(load_gridded_any(source).field);
}

GridGeometry grid_over(const Bounds& box, double spacing) {
  if (!(spacing > 0.0) || !(box.xmax > box.xmin) || !(box.ymax > box.ymin))
    fail(ErrorCode::Config, "grid needs a positive spacing and a non-empty box");
  const auto cells = [&](double w) {
    const double c = std::round(w / spacing);
    if (c < 1.0 || c > 1e6) fail(ErrorCode::Config, "grid spacing does not fit the box");
    return static_cast<std::size_t>(c) + 1;
  };
  return {box.xmin, box.ymin, spacing, cells(box.xmax - box.xmin), cells(box.ymax - box.ymin)};
}

// -- config text --------------------------------------------------------------

Provenance parse_config(const std::string& text) {
  Provenance out;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const std::size_t hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos || eq == 0)
      fail(ErrorCode::Config, "config line " + std::to_string(no) + ": expected key=value");
    out.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  return out;
}

Provenance read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Provenance merge_config(Provenance base, const Provenance& overrides) {
  for (const auto& [k, v] : overrides) {
    bool replaced = false;
    for (auto& [bk, bv] : base)
      if (bk == k) {
        bv = v;
        replaced = true;
      }
    if (!replaced) base.emplace_back(k, v);
  }
  return base;
}

DiscretizeConfig discretize_config_from(const Provenance& kv) {
  DiscretizeConfig c;
  Keys k(kv);
  k.num("dx", c.dx);
  k.box("velocity_box", c.box);
  k.num("t0", c.t0);
  k.num("T", c.window);
  k.num("slice_dt", c.slice_dt);
  k.choice("interpolation", c.interpolation, interpolation_from_string);
  if (!(c.dx > 0.0)) fail(ErrorCode::Config, "dx must be positive");
  if (!(c.slice_dt > 0.0)) fail(ErrorCode::Config, "slice_dt must be positive");
  return c;
}

GriddedField discretize_with(const VelocityField& f, const DiscretizeConfig& cfg) {
  return discretize_field(f, cfg.dx, is_set(cfg.box) ? cfg.box : f.sampling_bounds(),
                          slice_times(f, cfg.t0, cfg.t0 + cfg.window, cfg.slice_dt), cfg.interpolation);
}

// -- studies ------------------------------------------------------------------

const char* to_string(StudyKind k) {
  switch (k) {
    case StudyKind::Dx: return "dx";
    case StudyKind::Noise: return "noise";
    case StudyKind::Cluster: return "cluster";
    case StudyKind::Rtol: return "rtol";
  }
  return "unknown";
}

StudyKind study_kind_from_string(const std::string& s) {
  for (StudyKind k : {StudyKind::Dx, StudyKind::Noise, StudyKind::Cluster, StudyKind::Rtol})
    if (s == to_string(k)) return k;
  fail(ErrorCode::Config, "unknown study '" + s + "'");
}

double StudyConfig::resolved_dx() const {
  if (kind == StudyKind::Dx) return 0.0;
  if (std::isnan(dx)) return kind == StudyKind::Noise ? std::ldexp(1.0, -11) : 0.0;
  return dx;
}

void StudyConfig::validate() const {
  if (axis.empty()) fail(ErrorCode::Config, "study axis is empty");
  for (double v : axis) {
    const bool ok = kind == StudyKind::Noise ? v >= 0.0 && std::isfinite(v) : v > 0.0 && std::isfinite(v);
    if (!ok) fail(ErrorCode::Config, "study axis values must be positive, got " + fmt_double(v));
  }
  if (!(window != 0.0) || !std::isfinite(window)) fail(ErrorCode::Config, "time window T must be non-zero");
  if (!(ftle_spacing > 0.0)) fail(ErrorCode::Config, "ftle_spacing must be positive");
  if (methods.empty()) fail(ErrorCode::Config, "no gradient methods selected");
  for (GradientMethod m : methods)
    if (m == GradientMethod::Analytic) fail(ErrorCode::Config, "the analytic method is the reference, not a study method");
  if (kind != StudyKind::Cluster)
    for (double d : cluster_spacings)
      if (!(d > 0.0)) fail(ErrorCode::Config, "cluster spacings must be positive");
  if (kind == StudyKind::Cluster &&
      std::find(methods.begin(), methods.end(), GradientMethod::ClusterFd) == methods.end())
    fail(ErrorCode::Config, "the cluster study needs the cluster-fd method");
  const double d = resolved_dx();
  if (!(d >= 0.0)) fail(ErrorCode::Config, "dx must be non-negative");
  if (!(noise >= 0.0)) fail(ErrorCode::Config, "noise must be non-negative");
  const bool noisy = kind == StudyKind::Noise || noise > 0.0;
  if (noisy && !seed) fail(ErrorCode::Config, "a random seed is required when noise is applied");
  if (noisy && kind != StudyKind::Dx && d == 0.0 && is_builtin_field(field))
    fail(ErrorCode::Config, "noise needs a gridded field: set dx > 0");
  if (!(slice_dt > 0.0)) fail(ErrorCode::Config, "slice_dt must be positive");
  if (!(threshold == threshold)) fail(ErrorCode::Config, "threshold must be a number");
  as_config([&] { integrator.validate(); });
}

Provenance StudyConfig::snapshot() const {
  Provenance p;
  p.emplace_back("study", to_string(kind));
  p.emplace_back("axis", join(axis));
  p.emplace_back("field", field);
  p.emplace_back("t0", fmt_double(t0));
  p.emplace_back("T", fmt_double(window));
  p.emplace_back("ftle_spacing", fmt_double(ftle_spacing));
  p.emplace_back("ftle_box", bounds_text(ftle_box));
  std::string ms;
  for (GradientMethod m : methods) ms += (ms.empty() ? "" : ",") + std::string(to_string(m));
  p.emplace_back("methods", ms);
  p.emplace_back("cluster_spacings", join(cluster_spacings));
  p.emplace_back("dx", fmt_double(dx));
  p.emplace_back("velocity_box", bounds_text(velocity_box));
  p.emplace_back("slice_dt", fmt_double(slice_dt));
  p.emplace_back("noise", fmt_double(noise));
  p.emplace_back("seed", seed ? std::to_string(*seed) : "none");
  p.emplace_back("interpolation", to_string(interpolation));
  append_integrator(p, "integrator.", integrator);
  p.emplace_back("threshold", fmt_double(threshold));
  return p;
}

StudyConfig study_config_from(const Provenance& kv) {
  StudyConfig c;
  Keys k(kv);
  k.choice("study", c.kind, study_kind_from_string);
  k.list("axis", c.axis);
  k.text("field", c.field);
  k.num("t0", c.t0);
  k.num("T", c.window);
  k.num("ftle_spacing", c.ftle_spacing);
  k.box("ftle_box", c.ftle_box);
  if (const std::string* v = k.get("methods")) {
    c.methods.clear();
    for (const std::string& m : split(*v, ','))
      c.methods.push_back(k.parse("methods", [&](const std::string&) { return gradient_method_from_string(m); }));
  }
  k.list("cluster_spacings", c.cluster_spacings);
  k.num("dx", c.dx);
  k.box("velocity_box", c.velocity_box);
  k.num("slice_dt", c.slice_dt);
  k.num("noise", c.noise);
  if (const std::string* v = k.get("seed"); v && *v != "none") {
    std::uint64_t s = 0;
    k.count("seed", s);
    c.seed = s;
  }
  k.choice("interpolation", c.interpolation, interpolation_from_string);
  k.integrator(c.integrator);
  k.num("threshold", c.threshold);
  k.finish();
  c.validate();
  return c;
}

bool StudyResult::complete() const {
  for (const StudyRow& r : rows)
    if (r.failed()) return false;
  return true;
}

const StudyRow* StudyResult::find(double axis, GradientMethod m, double cluster_spacing) const {
  for (const StudyRow& r : rows)
    if (r.axis == axis && r.method == m && (m != GradientMethod::ClusterFd || r.cluster_spacing == cluster_spacing))
      return &r;
  return nullptr;
}

void save_study(const std::string& path, const StudyResult& r) {
  std::string body = "axis,method,cluster_spacing,phi_e,relative,nodes,skipped,seconds,status\n";
  for (const StudyRow& row : r.rows)
    body += fmt_double(row.axis) + ',' + to_string(row.method) + ',' + fmt_double(row.cluster_spacing) + ',' +
            fmt_double(row.phi_e) + ',' + fmt_double(row.relative) + ',' + std::to_string(row.nodes) + ',' +
            std::to_string(row.skipped) + ',' + fmt_double(row.seconds) + ',' +
            (row.failed() ? "failed: " + one_line(row.error) : std::string("ok")) + '\n';
  write_text_artifact(path, "study", {{"rows", std::to_string(r.rows.size())}, {"reference", r.reference}},
                      r.snapshot, body);
}

StudyResult run_study(const StudyConfig& cfg, const std::string& output) {
  cfg.validate();
  StudyResult res;
  res.snapshot = cfg.snapshot();
  const FieldPtr src = open_field(cfg.field);
  if (cfg.kind == StudyKind::Dx && src->kind() == FieldKind::Gridded)
    fail(ErrorCode::Config, "the dx study resamples an analytic field; '" + cfg.field + "' is gridded");
  const double t1 = cfg.t0 + cfg.window;
  const GridGeometry grid = grid_over(is_set(cfg.ftle_box) ? cfg.ftle_box : src->domain(), cfg.ftle_spacing);
  const Bounds vbox = is_set(cfg.velocity_box) ? cfg.velocity_box : src->sampling_bounds();
  const std::vector<double> times = slice_times(*src, cfg.t0, t1, cfg.slice_dt);

  FtleField reference;
  if (src->kind() == FieldKind::Swirl) {
    reference = oracle_ftle_field(grid, cfg.window);
    res.reference = "closed-form oracle";
  } else {
    IntegratorConfig tight = cfg.integrator;
    tight.rtol = 1e-11;
    tight.atol = 1e-13;
    tight.max_steps = std::max<std::uint64_t>(tight.max_steps, 2000000);
    reference = compute_ftle_field(*src, grid, cfg.t0, t1, GradientMethod::AdvectedGradient, 0.0, tight);
    res.reference = "advected gradient on the source field at rtol 1e-11";
  }

  auto discretized = [&](double dx) -> FieldPtr {
    if (dx == 0.0) return src;
    return std::make_shared<GriddedField>(discretize_field(*src, dx, vbox, times, cfg.interpolation));
  };
  auto noisy = [&](const FieldPtr& f, double magnitude) -> FieldPtr {
    if (magnitude == 0.0) return f;
    const auto* g = dynamic_cast<const GriddedField*>(f.get());
    if (!g) fail(ErrorCode::Config, "noise needs a gridded field: set dx > 0");
    return std::make_shared<GriddedField>(add_noise(*g, magnitude, *cfg.seed));
  };

  FieldPtr fixed;
  for (double v : cfg.axis) {
    std::vector<StudyRow> rows;
    for (GradientMethod m : cfg.methods) {
      if (m == GradientMethod::ClusterFd) {
        for (double da : cfg.kind == StudyKind::Cluster ? std::vector<double>{v} : cfg.cluster_spacings)
          rows.push_back(row_for(v, m, da));
      } else if (cfg.kind != StudyKind::Cluster) {
        rows.push_back(row_for(v, m, 0.0));
      }
    }
    try {
      FieldPtr field;
      switch (cfg.kind) {
        case StudyKind::Dx: field = noisy(discretized(v), cfg.noise); break;
        case StudyKind::Noise:
          if (!fixed) fixed = discretized(cfg.resolved_dx());
          field = noisy(fixed, v);
          break;
        default:
          if (!fixed) fixed = noisy(discretized(cfg.resolved_dx()), cfg.noise);
          field = fixed;
      }
      IntegratorConfig integ = cfg.integrator;
      if (cfg.kind == StudyKind::Rtol) integ.rtol = v;
      for (StudyRow& row : rows) {
        const auto start = std::chrono::steady_clock::now();
        try {
          const FtleField f = compute_ftle_field(*field, grid, cfg.t0, t1, row.method, row.cluster_spacing, integ);
          const PhiError e = phi_e(f, reference, cfg.threshold);
          row.phi_e = e.value;
          row.relative = e.relative;
          row.nodes = e.nodes;
          row.skipped = e.skipped;
        } catch (const Error& e) {
          row.error = e.what();
        }
        row.seconds = seconds_since(start);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Config) throw;
      for (StudyRow& row : rows) row.error = e.what();
    }
    res.rows.insert(res.rows.end(), rows.begin(), rows.end());
    if (!output.empty()) save_study(output, res);
  }
  return res;
}

// -- pipeline -----------------------------------------------------------------

void PipelineConfig::validate() const {
  if (ftle_input.empty() && (!(window != 0.0) || !std::isfinite(window)))
    fail(ErrorCode::Config, "time window T must be non-zero");
  if (!(ftle_spacing > 0.0)) fail(ErrorCode::Config, "ftle_spacing must be positive");
  if (method == GradientMethod::Analytic) fail(ErrorCode::Config, "pipeline method must be cluster-fd or advected-gradient");
  if (method == GradientMethod::ClusterFd && !(cluster_spacing > 0.0))
    fail(ErrorCode::Config, "cluster_spacing must be positive");
  if (!(max_spacing >= 0.0)) fail(ErrorCode::Config, "refine.max_spacing must be non-negative");
  as_config([&] {
    integrator.validate();
    // Zero / NaN entries are resolved against the FTLE field later; check the rest now.
    RidgeTrackerConfig t = tracker;
    for (double* v : {&t.line_spacing, &t.step, &t.lateral})
      if (*v == 0.0) *v = 1.0;
    for (double* v : {&t.seed_threshold, &t.stop_threshold})
      if (std::isnan(*v)) *v = 0.0;
    t.validate();
    if (schedule.initial_window != 0.0) schedule.validate();
  });
}

Provenance PipelineConfig::snapshot() const {
  Provenance p;
  p.emplace_back("field", field);
  p.emplace_back("ftle_input", ftle_input.empty() ? "none" : ftle_input);
  p.emplace_back("t0", fmt_double(t0));
  p.emplace_back("T", fmt_double(window));
  p.emplace_back("ftle_spacing", fmt_double(ftle_spacing));
  p.emplace_back("ftle_box", bounds_text(ftle_box));
  p.emplace_back("method", to_string(method));
  p.emplace_back("cluster_spacing", fmt_double(cluster_spacing));
  append_integrator(p, "integrator.", integrator);
  p.emplace_back("ridge.line_spacing", fmt_double(tracker.line_spacing));
  p.emplace_back("ridge.seed_threshold", fmt_double(tracker.seed_threshold));
  p.emplace_back("ridge.step", fmt_double(tracker.step));
  p.emplace_back("ridge.lateral", fmt_double(tracker.lateral));
  p.emplace_back("ridge.initial", to_string(tracker.initial));
  p.emplace_back("ridge.stop_threshold", fmt_double(tracker.stop_threshold));
  p.emplace_back("ridge.max_points", std::to_string(tracker.max_points));
  p.emplace_back("ridge.min_points", std::to_string(tracker.min_points));
  p.emplace_back("refine", refine ? "true" : "false");
  p.emplace_back("refine.W0", fmt_double(schedule.initial_window));
  p.emplace_back("refine.shrink", fmt_double(schedule.shrink));
  p.emplace_back("refine.samples", std::to_string(schedule.samples));
  p.emplace_back("refine.W_final", fmt_double(schedule.final_window));
  p.emplace_back("refine.max_iterations", std::to_string(schedule.max_iterations));
  p.emplace_back("refine.max_spacing", fmt_double(max_spacing));
  p.emplace_back("advect", advect ? "true" : "false");
  p.emplace_back("classify", classify ? "true" : "false");
  p.emplace_back("classify.b_tol", fmt_double(tolerances.b_tol));
  p.emplace_back("classify.delta_tol", fmt_double(tolerances.delta_tol));
  p.emplace_back("output_dir", output_dir.empty() ? "none" : output_dir);
  return p;
}

PipelineConfig pipeline_config_from(const Provenance& kv, bool allow_unknown) {
  PipelineConfig c;
  Keys k(kv);
  k.text("field", c.field);
  k.text("ftle_input", c.ftle_input);
  if (c.ftle_input == "none") c.ftle_input.clear();
  k.num("t0", c.t0);
  k.num("T", c.window);
  k.num("ftle_spacing", c.ftle_spacing);
  k.box("ftle_box", c.ftle_box);
  k.choice("method", c.method, gradient_method_from_string);
  k.num("cluster_spacing", c.cluster_spacing);
  k.integrator(c.integrator);
  k.num("ridge.line_spacing", c.tracker.line_spacing);
  k.num("ridge.seed_threshold", c.tracker.seed_threshold);
  k.num("ridge.step", c.tracker.step);
  k.num("ridge.lateral", c.tracker.lateral);
  k.choice("ridge.initial", c.tracker.initial, initial_step_from_string);
  k.num("ridge.stop_threshold", c.tracker.stop_threshold);
  k.count("ridge.max_points", c.tracker.max_points);
  k.count("ridge.min_points", c.tracker.min_points);
  k.flag("refine", c.refine);
  k.num("refine.W0", c.schedule.initial_window);
  k.num("refine.shrink", c.schedule.shrink);
  k.count("refine.samples", c.schedule.samples);
  k.num("refine.W_final", c.schedule.final_window);
  k.count("refine.max_iterations", c.schedule.max_iterations);
  k.num("refine.max_spacing", c.max_spacing);
  k.flag("advect", c.advect);
  k.flag("classify", c.classify);
  k.num("classify.b_tol", c.tolerances.b_tol);
  k.num("classify.delta_tol", c.tolerances.delta_tol);
  k.text("output_dir", c.output_dir);
  if (c.output_dir == "none") c.output_dir.clear();
  if (!allow_unknown) k.finish();
  c.validate();
  return c;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  PipelineResult res;
  Provenance prov = cfg.snapshot();
  prov.insert(prov.end(), cfg.extra.begin(), cfg.extra.end());
  const double t1 = cfg.t0 + cfg.window;
  namespace fs = std::filesystem;

  auto stage = [&](const char* name, auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      throw Error(e.code(), std::string("stage '") + name + "' failed: " + e.what());
    }
  };
  auto out_path = [&](const char* file) { return (fs::path(cfg.output_dir) / file).string(); };
  auto written = [&](const char* file) { res.artifacts.push_back(out_path(file)); };

  if (!cfg.output_dir.empty()) {
    stage("output", [&] {
      std::error_code ec;
      fs::create_directories(cfg.output_dir, ec);
      if (ec) fail(ErrorCode::Io, "cannot create '" + cfg.output_dir + "': " + ec.message());
    });
  }

  FieldPtr field;
  stage("field", [&] { field = open_field(cfg.field); });

  stage("ftle", [&] {
    if (!cfg.ftle_input.empty()) {
      res.ftle = load_ftle_any(cfg.ftle_input).field;
    } else {
      const GridGeometry grid = grid_over(is_set(cfg.ftle_box) ? cfg.ftle_box : field->domain(), cfg.ftle_spacing);
      res.ftle = compute_ftle_field(*field, grid, cfg.t0, t1, cfg.method, cfg.cluster_spacing, cfg.integrator);
    }
    std::size_t failures = 0;
    for (NodeFlag f : res.ftle.flags) failures += f == NodeFlag::IntegrationFailure || f == NodeFlag::Degenerate;
    if (failures) res.flagged.push_back(std::to_string(failures) + " FTLE nodes failed to integrate");
    if (!cfg.output_dir.empty()) {
      save_ftle(out_path("ftle.bin"), res.ftle, prov);
      written("ftle.bin");
      save_ftle_csv(out_path("ftle.csv"), res.ftle, prov);
      written("ftle.csv");
    }
  });

  // Times and settings that go with the FTLE actually used.
  const double ft0 = res.ftle.t0, ft1 = res.ftle.t1;
  const GradientMethod method = res.ftle.method == GradientMethod::Analytic ? cfg.method : res.ftle.method;
  const double da = method == GradientMethod::ClusterFd
                        ? (res.ftle.cluster_spacing > 0.0 ? res.ftle.cluster_spacing : cfg.cluster_spacing)
                        : 0.0;

  stage("track", [&] {
    res.tracked = extract_ridges(res.ftle, cfg.tracker);
    if (!cfg.output_dir.empty()) {
      save_ridges(out_path("ridges_tracked.csv"), res.tracked, prov);
      written("ridges_tracked.csv");
    }
  });

  const std::vector<Ridge>* final_ridges = &res.tracked;
  if (cfg.refine) {
    stage("refine", [&] {
      RefinementSchedule sched = cfg.schedule;
      if (sched.initial_window == 0.0) sched.initial_window = res.ftle.grid.spacing;
      sched.validate();
      const PhiEvaluator eval = make_ftle_evaluator(*field, ft0, ft1, method, da, cfg.integrator);
      res.refined = refine_ridges(res.tracked, eval, sched, cfg.max_spacing);
      for (std::size_t r = 0; r < res.refined.size(); ++r) {
        std::size_t bad = 0;
        for (std::uint8_t f : res.refined[r].flags) bad += (f & ridge_flag::kEvalFailed) != 0;
        if (bad) res.flagged.push_back("ridge " + std::to_string(r) + ": " + std::to_string(bad) +
                                       " points without a valid FTLE sample during refinement");
      }
      if (!cfg.output_dir.empty()) {
        save_ridges(out_path("ridges_refined.csv"), res.refined, prov);
        written("ridges_refined.csv");
      }
    });
    final_ridges = &res.refined;
  }

  if (cfg.advect) {
    stage("advect", [&] {
      for (std::size_t r = 0; r < final_ridges->size(); ++r) {
        res.advected.push_back(advect_ridge((*final_ridges)[r], *field, ft0, ft1, cfg.integrator));
        std::size_t out = 0;
        for (std::uint8_t f : res.advected.back().flags) out += (f & ridge_flag::kOutOfDomain) != 0;
        if (out) res.flagged.push_back("ridge " + std::to_string(r) + ": " + std::to_string(out) +
                                       " points left the domain during advection");
      }
      if (!cfg.output_dir.empty()) {
        save_ridges(out_path("ridges_advected.csv"), res.advected, prov);
        written("ridges_advected.csv");
      }
    });
  }

  if (cfg.classify) {
    stage("classify", [&] {
      for (std::size_t r = 0; r < final_ridges->size(); ++r) {
        res.profiles.push_back(
            classify_ridge((*final_ridges)[r], *field, ft0, ft1, da, cfg.integrator, method, cfg.tolerances));
        const std::size_t bad = res.profiles.back().points.size() - res.profiles.back().valid_count();
        if (bad) res.flagged.push_back("ridge " + std::to_string(r) + ": " + std::to_string(bad) +
                                       " points without a valid flow-map gradient");
      }
      if (!cfg.output_dir.empty()) {
        save_profiles(out_path("profiles.csv"), res.profiles, prov);
        written("profiles.csv");
      }
    });
  }
  return res;
}

}  // namespace ftlekit
