#include "ftlekit/ftlekit.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "ftlekit/error.hpp"
#include "ftlekit/format.hpp"
#include "ftlekit/io.hpp"
#include "ftlekit/study.hpp"

using namespace ftlekit;

struct ftk_config {
  Provenance kv;
};
struct ftk_field {
  FieldPtr f;
};
struct ftk_ftle {
  FtleField f;
};
struct ftk_ridges {
  std::vector<Ridge> r;
};
struct ftk_profiles {
  std::vector<ClassificationProfile> p;
};
struct ftk_study {
  StudyResult r;
};
struct ftk_pipeline {
  PipelineResult r;
};

namespace {

thread_local std::string g_error;

template <class F>
ftk_status guard(F&& f) {
  try {
    f();
    return FTK_OK;
  } catch (const Error& e) {
    g_error = e.what();
    return static_cast<ftk_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
  } catch (const std::exception& e) {
    g_error = e.what();
  } catch (...) {
    g_error = "unknown error";
  }
  return FTK_ERR_INTERNAL;
}

template <class... P>
void need(const P*... p) {
  if (((p == nullptr) || ...)) fail(ErrorCode::Argument, "null argument");
}

const Provenance& kv_of(const ftk_config* c) {
  static const Provenance empty;
  return c ? c->kv : empty;
}

// Integration window and gradient settings: from the FTLE field when given, else from the config.
struct Window {
  double t0, t1;
  GradientMethod method;
  double da;
  double spacing;
};

Window window_of(const ftk_ftle* ftle, const PipelineConfig& pc) {
  if (ftle) {
    const FtleField& f = ftle->f;
    const GradientMethod m = f.method == GradientMethod::Analytic ? pc.method : f.method;
    const double da = m == GradientMethod::ClusterFd ? (f.cluster_spacing > 0.0 ? f.cluster_spacing : pc.cluster_spacing) : 0.0;
    return {f.t0, f.t1, m, da, f.grid.spacing};
  }
  return {pc.t0, pc.t0 + pc.window, pc.method, pc.method == GradientMethod::ClusterFd ? pc.cluster_spacing : 0.0,
          pc.ftle_spacing};
}

const GriddedField& gridded(const ftk_field* f) {
  const auto* g = dynamic_cast<const GriddedField*>(f->f.get());
  if (!g) fail(ErrorCode::Argument, f->f->describe() + " is not a gridded field");
  return *g;
}

}  // namespace

extern "C" {

const char* ftk_version(void) { return "1.0.0"; }

const char* ftk_status_name(ftk_status s) {
  if (s == FTK_OK) return "ok";
  if (s == FTK_ERR_INTERNAL) return "internal";
  if (s >= FTK_ERR_ARGUMENT && s <= FTK_ERR_CONFIG) return to_string(static_cast<ErrorCode>(s));
  return "unknown";
}

const char* ftk_last_error(void) { return g_error.c_str(); }

// -- configuration ------------------------------------------------------------

ftk_status ftk_config_new(ftk_config** out) {
  return guard([&] {
    need(out);
    *out = new ftk_config;
  });
}

void ftk_config_free(ftk_config* c) { delete c; }

ftk_status ftk_config_set(ftk_config* c, const char* key, const char* value) {
  return guard([&] {
    need(c, key, value);
    if (!*key) fail(ErrorCode::Config, "empty config key");
    c->kv = merge_config(std::move(c->kv), {{key, value}});
  });
}

ftk_status ftk_config_load(ftk_config* c, const char* path) {
  return guard([&] {
    need(c, path);
    c->kv = merge_config(std::move(c->kv), read_config_file(path));
  });
}

ftk_status ftk_config_get(const ftk_config* c, const char* key, const char** value) {
  return guard([&] {
    need(c, key, value);
    const std::string* v = find_key(c->kv, key);
    *value = v ? v->c_str() : nullptr;
  });
}

size_t ftk_config_size(const ftk_config* c) { return c ? c->kv.size() : 0; }

ftk_status ftk_config_entry(const ftk_config* c, size_t i, const char** key, const char** value) {
  return guard([&] {
    need(c, key, value);
    if (i >= c->kv.size()) fail(ErrorCode::Argument, "config entry index out of range");
    *key = c->kv[i].first.c_str();
    *value = c->kv[i].second.c_str();
  });
}

ftk_status ftk_config_resolve(const ftk_config* c, ftk_config** out) {
  return guard([&] {
    need(c, out);
    *out = new ftk_config{merge_config(c->kv, pipeline_config_from(c->kv, true).snapshot())};
  });
}

// -- velocity fields ------------------------------------------------------------

ftk_status ftk_field_open(const char* source, ftk_field** out) {
  return guard([&] {
    need(source, out);
    *out = new ftk_field{open_field(source)};
  });
}

void ftk_field_free(ftk_field* f) { delete f; }

ftk_status ftk_field_discretize(const ftk_field* f, const ftk_config* cfg, ftk_field** out) {
  return guard([&] {
    need(f, out);
    const DiscretizeConfig dc = discretize_config_from(kv_of(cfg));
    *out = new ftk_field{std::make_shared<GriddedField>(discretize_with(*f->f, dc))};
  });
}

ftk_status ftk_field_add_noise(const ftk_field* f, double magnitude, uint64_t seed, ftk_field** out) {
  return guard([&] {
    need(f, out);
    *out = new ftk_field{std::make_shared<GriddedField>(add_noise(gridded(f), magnitude, seed))};
  });
}

ftk_status ftk_field_save(const ftk_field* f, const char* path, int text, const ftk_config* prov) {
  return guard([&] {
    need(f, path);
    if (text)
      save_gridded_text(path, gridded(f), kv_of(prov));
    else
      save_gridded(path, gridded(f), kv_of(prov));
  });
}

ftk_status ftk_field_velocity(const ftk_field* f, double x, double y, double t, double* u, double* v) {
  return guard([&] {
    need(f, u, v);
    const Vec2 w = f->f->sample_velocity({x, y}, t);
    *u = w.x;
    *v = w.y;
  });
}

ftk_status ftk_field_describe(const ftk_field* f, char* buf, size_t cap, size_t* needed) {
  return guard([&] {
    need(f);
    std::ostringstream os;
    const VelocityField& v = *f->f;
    const Bounds d = v.domain();
    os << "kind: " << to_string(v.kind()) << "\n"
       << "description: " << v.describe() << "\n"
       << "domain: " << fmt_double(d.xmin) << ' ' << fmt_double(d.xmax) << ' ' << fmt_double(d.ymin) << ' '
       << fmt_double(d.ymax) << "\n";
    if (const auto* g = dynamic_cast<const GriddedField*>(&v)) {
      const GridGeometry& gg = g->geometry();
      os << "nodes: " << gg.nx << " x " << gg.ny << "\n"
         << "spacing: " << fmt_double(gg.spacing) << "\n"
         << "slices: " << g->slice_count() << " (t0 " << fmt_double(g->t0()) << ", dt " << fmt_double(g->dt())
         << ")\n"
         << "interpolation: " << to_string(g->interpolation()) << "\n"
         << "source: " << g->source() << "\n"
         << "noise: " << (g->noise().applied ? fmt_double(g->noise().magnitude) + " seed " +
                                                   std::to_string(g->noise().seed)
                                             : std::string("none"))
         << "\n";
    }
    const std::string s = os.str();
    if (needed) *needed = s.size() + 1;
    if (buf && cap > 0) {
      const size_t n = std::min(cap - 1, s.size());
      std::memcpy(buf, s.data(), n);
      buf[n] = '\0';
    }
  });
}

// -- FTLE -----------------------------------------------------------------------

ftk_status ftk_ftle_compute(const ftk_field* f, const ftk_config* cfg, ftk_ftle** out) {
  return guard([&] {
    need(f, out);
    const PipelineConfig pc = pipeline_config_from(kv_of(cfg), true);
    const GridGeometry grid = grid_over(is_set(pc.ftle_box) ? pc.ftle_box : f->f->domain(), pc.ftle_spacing);
    *out = new ftk_ftle{compute_ftle_field(*f->f, grid, pc.t0, pc.t0 + pc.window, pc.method, pc.cluster_spacing,
                                           pc.integrator)};
  });
}

ftk_status ftk_ftle_load(const char* path, ftk_ftle** out) {
  return guard([&] {
    need(path, out);
    *out = new ftk_ftle{load_ftle_any(path).field};
  });
}

ftk_status ftk_ftle_save(const ftk_ftle* f, const char* path, int csv, const ftk_config* prov) {
  return guard([&] {
    need(f, path);
    if (csv)
      save_ftle_csv(path, f->f, kv_of(prov));
    else
      save_ftle(path, f->f, kv_of(prov));
  });
}

void ftk_ftle_free(ftk_ftle* f) { delete f; }

ftk_status ftk_ftle_info(const ftk_ftle* f, ftk_grid* grid, double* t0, double* t1, size_t* valid, double* max_value) {
  return guard([&] {
    need(f);
    if (grid) *grid = {f->f.grid.x0, f->f.grid.y0, f->f.grid.spacing, f->f.grid.nx, f->f.grid.ny};
    if (t0) *t0 = f->f.t0;
    if (t1) *t1 = f->f.t1;
    if (valid) *valid = f->f.valid_count();
    if (max_value) *max_value = f->f.valid_count() ? f->f.max_value() : 0.0;
  });
}

ftk_status ftk_ftle_values(const ftk_ftle* f, double* out, size_t n) {
  return guard([&] {
    need(f, out);
    if (n != f->f.phi.size()) fail(ErrorCode::Argument, "buffer size does not match the grid");
    std::copy(f->f.phi.begin(), f->f.phi.end(), out);
  });
}

ftk_status ftk_phi_e(const ftk_ftle* numeric, const ftk_ftle* reference, double threshold, double* value,
                     size_t* nodes) {
  return guard([&] {
    need(numeric, reference, value);
    const PhiError e = phi_e(numeric->f, reference->f, threshold);
    *value = e.value;
    if (nodes) *nodes = e.nodes;
  });
}

// -- ridges ---------------------------------------------------------------------

ftk_status ftk_ridges_track(const ftk_ftle* ftle, const ftk_config* cfg, ftk_ridges** out) {
  return guard([&] {
    need(ftle, out);
    const PipelineConfig pc = pipeline_config_from(kv_of(cfg), true);
    *out = new ftk_ridges{extract_ridges(ftle->f, pc.tracker)};
  });
}

ftk_status ftk_ridges_refine(const ftk_ridges* r, const ftk_field* f, const ftk_ftle* ftle, const ftk_config* cfg,
                             ftk_ridges** out) {
  return guard([&] {
    need(r, f, out);
    const PipelineConfig pc = pipeline_config_from(kv_of(cfg), true);
    const Window w = window_of(ftle, pc);
    RefinementSchedule sched = pc.schedule;
    if (sched.initial_window == 0.0) sched.initial_window = w.spacing;
    sched.validate();
    const PhiEvaluator eval = make_ftle_evaluator(*f->f, w.t0, w.t1, w.method, w.da, pc.integrator);
    *out = new ftk_ridges{refine_ridges(r->r, eval, sched, pc.max_spacing)};
  });
}

ftk_status ftk_ridges_advect(const ftk_ridges* r, const ftk_field* f, const ftk_ftle* ftle, const ftk_config* cfg,
                             ftk_ridges** out) {
  return guard([&] {
    need(r, f, out);
    const PipelineConfig pc = pipeline_config_from(kv_of(cfg), true);
    const Window w = window_of(ftle, pc);
    auto res = std::make_unique<ftk_ridges>();
    for (const Ridge& x : r->r) res->r.push_back(advect_ridge(x, *f->f, w.t0, w.t1, pc.integrator));
    *out = res.release();
  });
}

ftk_status ftk_ridges_load(const char* path, ftk_ridges** out) {
  return guard([&] {
    need(path, out);
    *out = new ftk_ridges{load_ridges(path).ridges};
  });
}

ftk_status ftk_ridges_save(const ftk_ridges* r, const char* path, const ftk_config* prov) {
  return guard([&] {
    need(r, path);
    save_ridges(path, r->r, kv_of(prov));
  });
}

void ftk_ridges_free(ftk_ridges* r) { delete r; }

size_t ftk_ridges_count(const ftk_ridges* r) { return r ? r->r.size() : 0; }

ftk_status ftk_ridge_size(const ftk_ridges* r, size_t i, size_t* n) {
  return guard([&] {
    need(r, n);
    if (i >= r->r.size()) fail(ErrorCode::Argument, "ridge index out of range");
    *n = r->r[i].size();
  });
}

ftk_status ftk_ridge_points(const ftk_ridges* r, size_t i, double* xy, size_t n) {
  return guard([&] {
    need(r, xy);
    if (i >= r->r.size()) fail(ErrorCode::Argument, "ridge index out of range");
    if (n != r->r[i].size()) fail(ErrorCode::Argument, "buffer size does not match the ridge");
    for (size_t k = 0; k < n; ++k) {
      xy[2 * k] = r->r[i].points[k].x;
      xy[2 * k + 1] = r->r[i].points[k].y;
    }
  });
}

// -- classification ---------------------------------------------------------------

ftk_status ftk_classify(const ftk_ridges* r, const ftk_field* f, const ftk_ftle* ftle, const ftk_config* cfg,
                        ftk_profiles** out) {
  return guard([&] {
    need(r, f, out);
    const PipelineConfig pc = pipeline_config_from(kv_of(cfg), true);
    const Window w = window_of(ftle, pc);
    auto res = std::make_unique<ftk_profiles>();
    for (const Ridge& x : r->r)
      res->p.push_back(classify_ridge(x, *f->f, w.t0, w.t1, w.da, pc.integrator, w.method, pc.tolerances));
    *out = res.release();
  });
}

ftk_status ftk_profiles_load(const char* path, ftk_profiles** out) {
  return guard([&] {
    need(path, out);
    *out = new ftk_profiles{load_profiles(path).profiles};
  });
}

ftk_status ftk_profiles_save(const ftk_profiles* p, const char* path, const ftk_config* prov) {
  return guard([&] {
    need(p, path);
    save_profiles(path, p->p, kv_of(prov));
  });
}

void ftk_profiles_free(ftk_profiles* p) { delete p; }

size_t ftk_profiles_count(const ftk_profiles* p) { return p ? p->p.size() : 0; }

ftk_status ftk_profile_size(const ftk_profiles* p, size_t i, size_t* n, size_t* valid) {
  return guard([&] {
    need(p);
    if (i >= p->p.size()) fail(ErrorCode::Argument, "profile index out of range");
    if (n) *n = p->p[i].points.size();
    if (valid) *valid = p->p[i].valid_count();
  });
}

// -- studies and pipeline -----------------------------------------------------------

ftk_status ftk_study_run(const ftk_config* cfg, const char* output, ftk_study** out) {
  return guard([&] {
    need(out);
    const StudyConfig sc = study_config_from(kv_of(cfg));
    *out = new ftk_study{run_study(sc, output ? output : "")};
  });
}

void ftk_study_free(ftk_study* s) { delete s; }

size_t ftk_study_rows(const ftk_study* s) { return s ? s->r.rows.size() : 0; }

ftk_status ftk_study_row_at(const ftk_study* s, size_t i, ftk_study_row* row) {
  return guard([&] {
    need(s, row);
    if (i >= s->r.rows.size()) fail(ErrorCode::Argument, "study row index out of range");
    const StudyRow& r = s->r.rows[i];
    *row = {r.axis,     to_string(r.method), r.cluster_spacing, r.phi_e, r.relative, r.nodes, r.seconds,
            r.failed() ? r.error.c_str() : nullptr};
  });
}

int ftk_study_complete(const ftk_study* s) { return s && s->r.complete() ? 1 : 0; }

ftk_status ftk_pipeline_run(const ftk_config* cfg, ftk_pipeline** out) {
  return guard([&] {
    need(out);
    const PipelineConfig pc = pipeline_config_from(kv_of(cfg));
    *out = new ftk_pipeline{run_pipeline(pc)};
  });
}

void ftk_pipeline_free(ftk_pipeline* p) { delete p; }

size_t ftk_pipeline_ridges(const ftk_pipeline* p) { return p ? p->r.tracked.size() : 0; }
size_t ftk_pipeline_flagged(const ftk_pipeline* p) { return p ? p->r.flagged.size() : 0; }

const char* ftk_pipeline_flag(const ftk_pipeline* p, size_t i) {
  return p && i < p->r.flagged.size() ? p->r.flagged[i].c_str() : nullptr;
}

size_t ftk_pipeline_artifacts(const ftk_pipeline* p) { return p ? p->r.artifacts.size() : 0; }

const char* ftk_pipeline_artifact(const ftk_pipeline* p, size_t i) {
  return p && i < p->r.artifacts.size() ? p->r.artifacts[i].c_str() : nullptr;
}

ftk_status ftk_pipeline_result(const ftk_pipeline* p, ftk_ridges** ridges, ftk_profiles** profiles) {
  return guard([&] {
    need(p);
    if (ridges) *ridges = new ftk_ridges{p->r.refined.empty() ? p->r.tracked : p->r.refined};
    if (profiles) *profiles = new ftk_profiles{p->r.profiles};
  });
}

}  // extern "C"
