#ifndef FTLEKIT_H
#define FTLEKIT_H

/* C interface to ftlekit. All objects are opaque handles released with the matching
 * *_free function (NULL is accepted). Every call returns a status; on failure the message
 * is available from ftk_last_error() on the same thread until the next failing call.
 *
 * Settings are passed as a flat key/value configuration (ftk_config). Keys follow the
 * configuration file format documented in the README. */

#include <stddef.h>
#include <stdint.h>

#if defined(FTLEKIT_BUILDING)
#define FTK_API __attribute__((visibility("default")))
#else
#define FTK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ftk_status {
  FTK_OK = 0,
  FTK_ERR_ARGUMENT = 1,
  FTK_ERR_DOMAIN = 2,
  FTK_ERR_INTEGRATION = 3,
  FTK_ERR_DIVERGENCE = 4,
  FTK_ERR_DEGENERATE = 5,
  FTK_ERR_IO = 6,
  FTK_ERR_VERSION = 7,
  FTK_ERR_TRUNCATED = 8,
  FTK_ERR_CHECKSUM = 9,
  FTK_ERR_FORMAT = 10,
  FTK_ERR_CONFIG = 11,
  FTK_ERR_INTERNAL = 100
} ftk_status;

typedef struct ftk_config ftk_config;
typedef struct ftk_field ftk_field;
typedef struct ftk_ftle ftk_ftle;
typedef struct ftk_ridges ftk_ridges;
typedef struct ftk_profiles ftk_profiles;
typedef struct ftk_study ftk_study;
typedef struct ftk_pipeline ftk_pipeline;

FTK_API const char* ftk_version(void);
FTK_API const char* ftk_status_name(ftk_status s);
FTK_API const char* ftk_last_error(void);

/* -- configuration ---------------------------------------------------------- */

FTK_API ftk_status ftk_config_new(ftk_config** out);
FTK_API void ftk_config_free(ftk_config* c);
/* Later values replace earlier ones with the same key. */
FTK_API ftk_status ftk_config_set(ftk_config* c, const char* key, const char* value);
/* Merges a key=value file into c. */
FTK_API ftk_status ftk_config_load(ftk_config* c, const char* path);
/* *value is NULL when the key is absent; the pointer lives until c changes. */
FTK_API ftk_status ftk_config_get(const ftk_config* c, const char* key, const char** value);
FTK_API size_t ftk_config_size(const ftk_config* c);
FTK_API ftk_status ftk_config_entry(const ftk_config* c, size_t i, const char** key, const char** value);
/* Every pipeline setting with defaults filled in, as a new configuration. Unknown keys are kept. */
FTK_API ftk_status ftk_config_resolve(const ftk_config* c, ftk_config** out);

/* -- velocity fields --------------------------------------------------------- */

/* Builtin name (swirl, double-gyre, saddle, rotation, zero) or a gridded-field file. */
FTK_API ftk_status ftk_field_open(const char* source, ftk_field** out);
FTK_API void ftk_field_free(ftk_field* f);
/* Samples f on a lattice. Keys: dx (required), velocity_box, t0, T, slice_dt, interpolation. */
FTK_API ftk_status ftk_field_discretize(const ftk_field* f, const ftk_config* cfg, ftk_field** out);
/* Gridded fields only. */
FTK_API ftk_status ftk_field_add_noise(const ftk_field* f, double magnitude, uint64_t seed, ftk_field** out);
/* Gridded fields only; text != 0 writes the plain-text variant. prov may be NULL. */
FTK_API ftk_status ftk_field_save(const ftk_field* f, const char* path, int text, const ftk_config* prov);
FTK_API ftk_status ftk_field_velocity(const ftk_field* f, double x, double y, double t, double* u, double* v);
/* Multi-line description (copied into buf, truncated to cap - 1 characters). *needed may be NULL. */
FTK_API ftk_status ftk_field_describe(const ftk_field* f, char* buf, size_t cap, size_t* needed);

/* -- FTLE fields ------------------------------------------------------------- */

typedef struct ftk_grid {
  double x0, y0, spacing;
  size_t nx, ny;
} ftk_grid;

/* Keys: t0, T, ftle_spacing, ftle_box, method, cluster_spacing, integrator.*. */
FTK_API ftk_status ftk_ftle_compute(const ftk_field* f, const ftk_config* cfg, ftk_ftle** out);
/* Binary or CSV, detected from the content. */
FTK_API ftk_status ftk_ftle_load(const char* path, ftk_ftle** out);
FTK_API ftk_status ftk_ftle_save(const ftk_ftle* f, const char* path, int csv, const ftk_config* prov);
FTK_API void ftk_ftle_free(ftk_ftle* f);
FTK_API ftk_status ftk_ftle_info(const ftk_ftle* f, ftk_grid* grid, double* t0, double* t1, size_t* valid,
                                 double* max_value);
/* Copies nx * ny values (row-major, NaN at flagged nodes). */
FTK_API ftk_status ftk_ftle_values(const ftk_ftle* f, double* out, size_t n);
FTK_API ftk_status ftk_phi_e(const ftk_ftle* numeric, const ftk_ftle* reference, double threshold, double* value,
                             size_t* nodes);

/* -- ridges ------------------------------------------------------------------ */

/* Keys: ridge.*. */
FTK_API ftk_status ftk_ridges_track(const ftk_ftle* ftle, const ftk_config* cfg, ftk_ridges** out);
/* Times, gradient method and cluster spacing come from ftle when given, else from cfg
 * (t0, T, method, cluster_spacing). Refinement also reads refine.*. */
FTK_API ftk_status ftk_ridges_refine(const ftk_ridges* r, const ftk_field* f, const ftk_ftle* ftle,
                                     const ftk_config* cfg, ftk_ridges** out);
FTK_API ftk_status ftk_ridges_advect(const ftk_ridges* r, const ftk_field* f, const ftk_ftle* ftle,
                                     const ftk_config* cfg, ftk_ridges** out);
FTK_API ftk_status ftk_ridges_load(const char* path, ftk_ridges** out);
FTK_API ftk_status ftk_ridges_save(const ftk_ridges* r, const char* path, const ftk_config* prov);
FTK_API void ftk_ridges_free(ftk_ridges* r);
FTK_API size_t ftk_ridges_count(const ftk_ridges* r);
FTK_API ftk_status ftk_ridge_size(const ftk_ridges* r, size_t i, size_t* n);
/* Copies 2 * n coordinates (x0, y0, x1, y1, ...). */
FTK_API ftk_status ftk_ridge_points(const ftk_ridges* r, size_t i, double* xy, size_t n);

/* -- classification -------------------------------------------------------- */

/* Keys as for refinement plus classify.b_tol, classify.delta_tol. */
FTK_API ftk_status ftk_classify(const ftk_ridges* r, const ftk_field* f, const ftk_ftle* ftle, const ftk_config* cfg,
                                ftk_profiles** out);
FTK_API ftk_status ftk_profiles_load(const char* path, ftk_profiles** out);
FTK_API ftk_status ftk_profiles_save(const ftk_profiles* p, const char* path, const ftk_config* prov);
FTK_API void ftk_profiles_free(ftk_profiles* p);
FTK_API size_t ftk_profiles_count(const ftk_profiles* p);
/* Points of profile i and how many of them carry a valid gradient. */
FTK_API ftk_status ftk_profile_size(const ftk_profiles* p, size_t i, size_t* n, size_t* valid);

/* -- studies and pipeline ---------------------------------------------------- */

typedef struct ftk_study_row {
  double axis;
  const char* method;
  double cluster_spacing;
  double phi_e;
  double relative;
  size_t nodes;
  double seconds;
  const char* error; /* NULL for rows that completed */
} ftk_study_row;

/* Study keys (study, axis, field, ...). output may be NULL; when given it is rewritten after
 * every axis point. A study with failed rows still returns FTK_OK. */
FTK_API ftk_status ftk_study_run(const ftk_config* cfg, const char* output, ftk_study** out);
FTK_API void ftk_study_free(ftk_study* s);
FTK_API size_t ftk_study_rows(const ftk_study* s);
/* Strings in *row live as long as s. */
FTK_API ftk_status ftk_study_row_at(const ftk_study* s, size_t i, ftk_study_row* row);
FTK_API int ftk_study_complete(const ftk_study* s);

/* Pipeline keys. A failing stage returns its error with the stage name in the message. */
FTK_API ftk_status ftk_pipeline_run(const ftk_config* cfg, ftk_pipeline** out);
FTK_API void ftk_pipeline_free(ftk_pipeline* p);
FTK_API size_t ftk_pipeline_ridges(const ftk_pipeline* p);
FTK_API size_t ftk_pipeline_flagged(const ftk_pipeline* p);
FTK_API const char* ftk_pipeline_flag(const ftk_pipeline* p, size_t i);
FTK_API size_t ftk_pipeline_artifacts(const ftk_pipeline* p);
FTK_API const char* ftk_pipeline_artifact(const ftk_pipeline* p, size_t i);
/* Final ridges of the run (refined when refinement is on) and their profiles; the handles are
 * new copies owned by the caller. */
FTK_API ftk_status ftk_pipeline_result(const ftk_pipeline* p, ftk_ridges** ridges, ftk_profiles** profiles);

#ifdef __cplusplus
}
#endif

#endif
