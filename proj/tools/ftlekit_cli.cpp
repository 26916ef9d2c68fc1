// ftlekit command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ftlekit/ftlekit.h"

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumeric = 3, kIo = 4 };

int exit_code(ftk_status s) {
  switch (s) {
    case FTK_OK: return kOk;
    case FTK_ERR_ARGUMENT:
    case FTK_ERR_CONFIG: return kConfig;
    case FTK_ERR_IO:
    case FTK_ERR_VERSION:
    case FTK_ERR_TRUNCATED:
    case FTK_ERR_CHECKSUM:
    case FTK_ERR_FORMAT: return kIo;
    default: return kNumeric;
  }
}

struct Failure {
  int code;
};

void check(ftk_status s) {
  if (s == FTK_OK) return;
  std::cerr << "ftlekit: " << ftk_status_name(s) << " error: " << ftk_last_error() << "\n";
  throw Failure{exit_code(s)};
}

[[noreturn]] void usage_error(const std::string& msg) {
  std::cerr << "ftlekit: " << msg << "\n";
  throw Failure{kConfig};
}

// RAII wrappers over the opaque handles.
template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  operator T*() const { return p; }
};
using Config = Handle<ftk_config, ftk_config_free>;
using Field = Handle<ftk_field, ftk_field_free>;
using Ftle = Handle<ftk_ftle, ftk_ftle_free>;
using Ridges = Handle<ftk_ridges, ftk_ridges_free>;
using Profiles = Handle<ftk_profiles, ftk_profiles_free>;
using Study = Handle<ftk_study, ftk_study_free>;
using Pipeline = Handle<ftk_pipeline, ftk_pipeline_free>;

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::string input, output, ftle, ridges;
  bool text = false;
  std::string csv;
};

// --key value / --key=value pairs left over by the parser become config overrides.
std::vector<std::pair<std::string, std::string>> overrides(const std::vector<std::string>& rest) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const std::string& a = rest[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3) usage_error("unexpected argument '" + a + "'");
    const std::string body = a.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else {
      if (i + 1 >= rest.size()) usage_error("option '" + a + "' needs a value");
      out.emplace_back(body, rest[++i]);
    }
  }
  return out;
}

void build_config(ftk_config* cfg, const Common& c, const std::vector<std::string>& rest) {
  if (!c.config_file.empty()) check(ftk_config_load(cfg, c.config_file.c_str()));
  for (const std::string& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) usage_error("--set expects key=value, got '" + s + "'");
    check(ftk_config_set(cfg, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str()));
  }
  for (const auto& [k, v] : overrides(rest)) check(ftk_config_set(cfg, k.c_str(), v.c_str()));
}

std::string get(const ftk_config* cfg, const char* key, const std::string& fallback = "") {
  const char* v = nullptr;
  check(ftk_config_get(cfg, key, &v));
  return v ? v : fallback;
}

// The command name followed by the resolved configuration.
void provenance(ftk_config* prov, const ftk_config* cfg, const std::string& command) {
  check(ftk_config_set(prov, "command", command.c_str()));
  Config full;
  check(ftk_config_resolve(cfg, full.out()));
  for (std::size_t i = 0; i < ftk_config_size(full); ++i) {
    const char *k = nullptr, *v = nullptr;
    check(ftk_config_entry(full, i, &k, &v));
    check(ftk_config_set(prov, k, v));
  }
}

void need_path(const std::string& p, const char* what) {
  if (p.empty()) usage_error(std::string("missing ") + what);
}

void open_field(ftk_config* cfg, Field& f) { check(ftk_field_open(get(cfg, "field", "swirl").c_str(), f.out())); }

void load_optional_ftle(const std::string& path, Ftle& f) {
  if (!path.empty()) check(ftk_ftle_load(path.c_str(), f.out()));
}

void report_ridges(const ftk_ridges* r) {
  const std::size_t n = ftk_ridges_count(r);
  std::printf("%zu ridges\n", n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t pts = 0;
    check(ftk_ridge_size(r, i, &pts));
    std::printf("  ridge %zu: %zu points\n", i, pts);
  }
}

int run(CLI::App* leaf, const Common& c, const std::string& command) {
  Config cfg, prov;
  check(ftk_config_new(cfg.out()));
  check(ftk_config_new(prov.out()));
  build_config(cfg, c, leaf->remaining());
  provenance(prov, cfg, command);
  for (const auto& [k, v] : {std::pair<const char*, const std::string&>{"input.field", c.input},
                             {"input.ftle", c.ftle}, {"input.ridges", c.ridges}})
    if (!v.empty()) check(ftk_config_set(prov, k, v.c_str()));

  if (command == "field make") {
    need_path(c.output, "--output");
    Field src, grid;
    open_field(cfg, src);
    check(ftk_field_discretize(src, cfg, grid.out()));
    const std::string noise = get(cfg, "noise");
    if (!noise.empty() && std::strtod(noise.c_str(), nullptr) > 0.0) {
      const std::string seed = get(cfg, "seed");
      if (seed.empty()) usage_error("noise needs --seed");
      Field noisy;
      check(ftk_field_add_noise(grid, std::strtod(noise.c_str(), nullptr), std::strtoull(seed.c_str(), nullptr, 10),
                                noisy.out()));
      check(ftk_field_save(noisy, c.output.c_str(), c.text, prov));
    } else {
      check(ftk_field_save(grid, c.output.c_str(), c.text, prov));
    }
    std::printf("wrote %s\n", c.output.c_str());
  } else if (command == "field noise") {
    need_path(c.input, "--input");
    need_path(c.output, "--output");
    const std::string noise = get(cfg, "noise"), seed = get(cfg, "seed");
    if (noise.empty()) usage_error("missing --noise");
    if (seed.empty()) usage_error("a random seed is required: --seed N");
    char* end = nullptr;
    const double mag = std::strtod(noise.c_str(), &end);
    if (*end) usage_error("invalid --noise value '" + noise + "'");
    const unsigned long long s = std::strtoull(seed.c_str(), &end, 10);
    if (*end) usage_error("invalid --seed value '" + seed + "'");
    Field in, out;
    check(ftk_field_open(c.input.c_str(), in.out()));
    check(ftk_field_add_noise(in, mag, s, out.out()));
    check(ftk_field_save(out, c.output.c_str(), c.text, prov));
    std::printf("wrote %s\n", c.output.c_str());
  } else if (command == "field info") {
    Field f;
    check(ftk_field_open(c.input.empty() ? get(cfg, "field", "swirl").c_str() : c.input.c_str(), f.out()));
    std::size_t need = 0;
    check(ftk_field_describe(f, nullptr, 0, &need));
    std::string buf(need, '\0');
    check(ftk_field_describe(f, buf.data(), buf.size(), nullptr));
    std::fputs(buf.c_str(), stdout);
  } else if (command == "ftle compute") {
    need_path(c.output, "--output");
    Field f;
    Ftle ftle;
    open_field(cfg, f);
    check(ftk_ftle_compute(f, cfg, ftle.out()));
    check(ftk_ftle_save(ftle, c.output.c_str(), 0, prov));
    if (!c.csv.empty()) check(ftk_ftle_save(ftle, c.csv.c_str(), 1, prov));
    ftk_grid g;
    std::size_t valid = 0;
    double mx = 0.0;
    check(ftk_ftle_info(ftle, &g, nullptr, nullptr, &valid, &mx));
    std::printf("%zu x %zu nodes, %zu valid, max %.6g\n", g.nx, g.ny, valid, mx);
  } else if (command == "ridge track") {
    need_path(c.ftle, "--ftle");
    need_path(c.output, "--output");
    Ftle ftle;
    Ridges r;
    check(ftk_ftle_load(c.ftle.c_str(), ftle.out()));
    check(ftk_ridges_track(ftle, cfg, r.out()));
    check(ftk_ridges_save(r, c.output.c_str(), prov));
    report_ridges(r);
  } else if (command == "ridge refine" || command == "ridge advect" || command == "classify") {
    need_path(c.ridges, "--ridges");
    need_path(c.output, "--output");
    Field f;
    Ftle ftle;
    Ridges in;
    open_field(cfg, f);
    load_optional_ftle(c.ftle, ftle);
    check(ftk_ridges_load(c.ridges.c_str(), in.out()));
    if (command == "classify") {
      Profiles p;
      check(ftk_classify(in, f, ftle, cfg, p.out()));
      check(ftk_profiles_save(p, c.output.c_str(), prov));
      bool all_valid = true;
      for (std::size_t i = 0; i < ftk_profiles_count(p); ++i) {
        std::size_t n = 0, valid = 0;
        check(ftk_profile_size(p, i, &n, &valid));
        std::printf("  profile %zu: %zu points, %zu valid\n", i, n, valid);
        all_valid = all_valid && n == valid;
      }
      if (!all_valid) return kNumeric;
    } else {
      Ridges out;
      if (command == "ridge refine")
        check(ftk_ridges_refine(in, f, ftle, cfg, out.out()));
      else
        check(ftk_ridges_advect(in, f, ftle, cfg, out.out()));
      check(ftk_ridges_save(out, c.output.c_str(), prov));
      report_ridges(out);
    }
  } else if (command.rfind("study ", 0) == 0) {
    check(ftk_config_set(cfg, "study", command.substr(6).c_str()));
    Study s;
    check(ftk_study_run(cfg, c.output.empty() ? nullptr : c.output.c_str(), s.out()));
    std::printf("%-12s %-18s %-10s %-12s %-12s %8s %9s\n", "axis", "method", "da", "phi_e", "relative", "nodes",
                "seconds");
    for (std::size_t i = 0; i < ftk_study_rows(s); ++i) {
      ftk_study_row r;
      check(ftk_study_row_at(s, i, &r));
      if (r.error)
        std::printf("%-12.6g %-18s %-10.3g FAILED: %s\n", r.axis, r.method, r.cluster_spacing, r.error);
      else
        std::printf("%-12.6g %-18s %-10.3g %-12.4e %-12.4e %8zu %9.2f\n", r.axis, r.method, r.cluster_spacing,
                    r.phi_e, r.relative, r.nodes, r.seconds);
    }
    if (!ftk_study_complete(s)) return kNumeric;
  } else if (command == "pipeline run") {
    if (!c.output.empty()) check(ftk_config_set(cfg, "output_dir", c.output.c_str()));
    Pipeline p;
    check(ftk_pipeline_run(cfg, p.out()));
    std::printf("%zu ridges\n", ftk_pipeline_ridges(p));
    for (std::size_t i = 0; i < ftk_pipeline_artifacts(p); ++i) std::printf("wrote %s\n", ftk_pipeline_artifact(p, i));
    for (std::size_t i = 0; i < ftk_pipeline_flagged(p); ++i) std::printf("flagged: %s\n", ftk_pipeline_flag(p, i));
    if (ftk_pipeline_flagged(p) > 0) return kNumeric;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FTLE fields, ridges and their classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ftk_version());

  Common c;
  std::vector<std::pair<CLI::App*, std::string>> leaves;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, const std::string& command) {
    CLI::App* sub = parent->add_subcommand(name, help);
    sub->allow_extras();
    sub->add_option("--config", c.config_file, "key=value configuration file");
    sub->add_option("--set", c.sets, "extra key=value override (repeatable)");
    sub->footer("Any configuration key can also be given as --key value or --key=value.");
    leaves.emplace_back(sub, command);
    return sub;
  };

  CLI::App* field = app.add_subcommand("field", "velocity fields")->require_subcommand(1);
  CLI::App* make = leaf(field, "make", "sample a field onto a lattice", "field make");
  make->add_option("-o,--output", c.output, "output file");
  make->add_flag("--text", c.text, "write the plain-text variant");
  CLI::App* noise = leaf(field, "noise", "add frozen uniform node noise", "field noise");
  noise->add_option("-i,--input", c.input, "gridded field file");
  noise->add_option("-o,--output", c.output, "output file");
  noise->add_flag("--text", c.text, "write the plain-text variant");
  leaf(field, "info", "describe a field", "field info")->add_option("-i,--input", c.input, "field source");

  CLI::App* ftle = app.add_subcommand("ftle", "FTLE fields")->require_subcommand(1);
  CLI::App* compute = leaf(ftle, "compute", "compute an FTLE field", "ftle compute");
  compute->add_option("-o,--output", c.output, "binary output file");
  compute->add_option("--csv", c.csv, "also write a CSV export");

  CLI::App* ridge = app.add_subcommand("ridge", "FTLE ridges")->require_subcommand(1);
  CLI::App* track = leaf(ridge, "track", "seed and track ridges", "ridge track");
  track->add_option("--ftle", c.ftle, "FTLE field file");
  track->add_option("-o,--output", c.output, "ridge CSV");
  for (const char* name : {"refine", "advect"}) {
    CLI::App* sub = leaf(ridge, name, std::string(name) + " ridges", std::string("ridge ") + name);
    sub->add_option("--ridges", c.ridges, "input ridge CSV");
    sub->add_option("--ftle", c.ftle, "FTLE field the ridges came from (supplies times and method)");
    sub->add_option("-o,--output", c.output, "output ridge CSV");
  }
  CLI::App* classify = leaf(&app, "classify", "classify ridges", "classify");
  classify->add_option("--ridges", c.ridges, "ridge CSV");
  classify->add_option("--ftle", c.ftle, "FTLE field the ridges came from (supplies times and method)");
  classify->add_option("-o,--output", c.output, "profile CSV");

  CLI::App* study = app.add_subcommand("study", "parameter studies")->require_subcommand(1);
  for (const char* name : {"dx", "noise", "cluster", "rtol"})
    leaf(study, name, std::string(name) + " study", std::string("study ") + name)
        ->add_option("-o,--output", c.output, "result CSV");

  CLI::App* pipeline = app.add_subcommand("pipeline", "end-to-end runs")->require_subcommand(1);
  leaf(pipeline, "run", "FTLE, ridges, refinement, advection and classification", "pipeline run")
      ->add_option("-o,--output", c.output, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfig;
  }

  try {
    for (auto& [sub, cmd] : leaves)
      if (sub->parsed()) return run(sub, c, cmd);
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "ftlekit: " << e.what() << "\n";
    return kNumeric;
  }
  return kConfig;
}
