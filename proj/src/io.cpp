#include "ftlekit/io.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>

#include "ftlekit/error.hpp"
#include "ftlekit/format.hpp"

namespace ftlekit {

namespace {

constexpr char kMagic[8] = {'F', 'T', 'L', 'E', 'K', 'I', 'T', '\0'};
constexpr std::uint32_t kKindGridded = 1;
constexpr std::uint32_t kKindFtle = 2;
constexpr std::size_t kFraming = 8 + 4 + 4 + 8 + 8 + 4;

std::uint32_t crc_of(std::string_view data) {
  return static_cast<std::uint32_t>(
      crc32_z(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<z_size_t>(data.size())));
}

void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_u64(std::string& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_f64(std::string& b, double v) { put_u64(b, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::string_view b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}
std::uint64_t get_u64(std::string_view b, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}
double get_f64(std::string_view b, std::size_t at) { return std::bit_cast<double>(get_u64(b, at)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorCode::Io, "read error on '" + path + "'");
  return std::move(ss).str();
}

// Written next to the target and renamed into place, so a failed write leaves the old file.
void write_file(const std::string& path, const std::string& data) {
  const std::string tmp = path + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) fail(ErrorCode::Io, "write error on '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::Io, "cannot move output into place at '" + path + "': " + ec.message());
}

void check_value(const std::string& key, const std::string& value) {
  if (key.empty() || key.find_first_of("=\n\r ") != std::string::npos)
    fail(ErrorCode::Argument, "invalid metadata key '" + key + "'");
  if (value.find_first_of("\n\r") != std::string::npos)
    fail(ErrorCode::Argument, "metadata value for '" + key + "' contains a line break");
}

// Structural key/value block with typed accessors.
class Meta {
 public:
  Meta() = default;
  explicit Meta(Provenance kv) : kv_(std::move(kv)) {}

  void set(const std::string& k, const std::string& v) {
    check_value(k, v);
    kv_.emplace_back(k, v);
  }
  void set(const std::string& k, double v) { set(k, fmt_double(v)); }
  void set_u(const std::string& k, std::uint64_t v) { set(k, std::to_string(v)); }
  void set(const std::string& k, const char* v) { set(k, std::string(v)); }

  const std::string& str(const std::string& k) const {
    const std::string* v = find_key(kv_, k);
    if (!v) fail(ErrorCode::Format, "missing header key '" + k + "'");
    return *v;
  }
  double num(const std::string& k) const { return parse_double(str(k)); }
  std::uint64_t u(const std::string& k) const {
    const std::string& s = str(k);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      fail(ErrorCode::Format, "header key '" + k + "' is not an unsigned integer");
    return v;
  }
  const Provenance& items() const { return kv_; }

 private:
  Provenance kv_;
};

std::pair<std::string, std::string> split_kv(std::string_view line) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos || eq == 0) fail(ErrorCode::Format, "malformed header line '" + std::string(line) + "'");
  return {std::string(line.substr(0, eq)), std::string(line.substr(eq + 1))};
}

// Space separated key=value tokens on one line.
Meta parse_tokens(std::string_view line) {
  Meta m;
  std::size_t at = 0;
  while (at < line.size()) {
    while (at < line.size() && line[at] == ' ') ++at;
    if (at >= line.size()) break;
    std::size_t end = line.find(' ', at);
    if (end == std::string_view::npos) end = line.size();
    auto [k, v] = split_kv(line.substr(at, end - at));
    m.set(k, v);
    at = end;
  }
  return m;
}

std::string token_line(const Meta& m) {
  std::string out;
  for (const auto& [k, v] : m.items()) {
    if (v.find(' ') != std::string::npos) fail(ErrorCode::Argument, "value for '" + k + "' contains a space");
    if (!out.empty()) out += ' ';
    out += k + '=' + v;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t at = 0;
  while (at < s.size()) {
    std::size_t end = s.find('\n', at);
    if (end == std::string_view::npos) end = s.size();
    lines.push_back(s.substr(at, end - at));
    at = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t at = 0;
  while (true) {
    const std::size_t end = line.find(',', at);
    out.push_back(line.substr(at, end == std::string_view::npos ? std::string_view::npos : end - at));
    if (end == std::string_view::npos) break;
    at = end + 1;
  }
  return out;
}

std::uint64_t parse_u(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail(ErrorCode::Format, "invalid integer '" + std::string(s) + "'");
  return v;
}

long parse_i(std::string_view s) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail(ErrorCode::Format, "invalid integer '" + std::string(s) + "'");
  return v;
}

// -- binary container ---------------------------------------------------------

std::string pack(std::uint32_t kind, const Meta& meta, const Provenance& prov, const std::string& payload) {
  std::string text;
  for (const auto& [k, v] : meta.items()) text += k + '=' + v + '\n';
  text += "--\n";
  for (const auto& [k, v] : prov) {
    check_value(k, v);
    text += k + '=' + v + '\n';
  }
  std::string b(kMagic, sizeof kMagic);
  put_u32(b, kFormatVersion);
  put_u32(b, kind);
  put_u64(b, text.size());
  b += text;
  put_u64(b, payload.size());
  b += payload;
  put_u32(b, crc_of(b));
  return b;
}

struct Unpacked {
  Meta meta;
  Provenance prov;
  std::string payload;
};

Unpacked unpack(const std::string& path, std::uint32_t kind) {
  const std::string b = read_file(path);
  if (b.size() < 16) fail(ErrorCode::Truncated, "'" + path + "' is too short to be an ftlekit file");
  if (std::string_view(b.data(), 8) != std::string_view(kMagic, 8))
    fail(ErrorCode::Format, "'" + path + "' is not an ftlekit binary file");
  const std::uint32_t version = get_u32(b, 8);
  if (version != kFormatVersion)
    fail(ErrorCode::Version, "'" + path + "' has format version " + std::to_string(version) + ", expected " +
                                 std::to_string(kFormatVersion));
  if (b.size() < kFraming) fail(ErrorCode::Truncated, "'" + path + "' is truncated");
  const std::uint32_t stored = get_u32(b, b.size() - 4);
  if (crc_of(std::string_view(b.data(), b.size() - 4)) != stored)
    fail(ErrorCode::Checksum, "checksum mismatch in '" + path + "' (corrupt or truncated)");
  if (get_u32(b, 12) != kind) fail(ErrorCode::Format, "'" + path + "' holds a different artifact kind");

  const std::uint64_t meta_len = get_u64(b, 16);
  if (meta_len > b.size() - kFraming) fail(ErrorCode::Format, "inconsistent header length in '" + path + "'");
  const std::uint64_t payload_len = get_u64(b, 24 + meta_len);
  if (payload_len != b.size() - kFraming - meta_len)
    fail(ErrorCode::Format, "inconsistent payload length in '" + path + "'");

  Unpacked u;
  bool in_prov = false;
  for (std::string_view line : split_lines(std::string_view(b).substr(24, meta_len))) {
    if (line == "--") {
      in_prov = true;
      continue;
    }
    auto [k, v] = split_kv(line);
    if (in_prov)
      u.prov.emplace_back(std::move(k), std::move(v));
    else
      u.meta.set(k, v);
  }
  u.payload = b.substr(32 + meta_len, payload_len);
  return u;
}

// -- text container -----------------------------------------------------------

std::string text_begin(const char* kind) {
  return std::string("# ftlekit ") + kind + " version=" + std::to_string(kFormatVersion) + "\n";
}

void text_header(std::string& out, const Meta& meta, const Provenance& prov) {
  for (const auto& [k, v] : meta.items()) out += "# " + k + '=' + v + '\n';
  for (const auto& [k, v] : prov) {
    check_value(k, v);
    out += "## " + k + '=' + v + '\n';
  }
}

void text_finish(const std::string& path, std::string out) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "# crc32=%08x\n", crc_of(out));
  out += buf;
  write_file(path, out);
}

// Validated body lines (between the version line and the checksum line).
struct TextBody {
  std::string data;
  std::vector<std::string_view> lines;
};

TextBody text_open(const std::string& path, const char* kind) {
  TextBody t;
  t.data = read_file(path);
  const std::string prefix = std::string("# ftlekit ") + kind + " version=";
  const std::size_t first_end = t.data.find('\n');
  if (first_end == std::string::npos) fail(ErrorCode::Truncated, "'" + path + "' is truncated");
  const std::string_view first(t.data.data(), first_end);
  if (first.substr(0, prefix.size()) != prefix)
    fail(ErrorCode::Format, "'" + path + "' is not an ftlekit " + kind + " file");
  const std::uint64_t version = parse_u(first.substr(prefix.size()));
  if (version != kFormatVersion)
    fail(ErrorCode::Version, "'" + path + "' has format version " + std::to_string(version) + ", expected " +
                                 std::to_string(kFormatVersion));

  const std::string_view all(t.data);
  const std::size_t last_start = all.size() >= 2 ? all.rfind('\n', all.size() - 2) : std::string_view::npos;
  const std::string_view tag = "# crc32=";
  bool ok = !all.empty() && all.back() == '\n' && last_start != std::string_view::npos && last_start >= first_end;
  if (ok) {
    const std::string_view last = all.substr(last_start + 1, all.size() - last_start - 2);
    ok = last.substr(0, tag.size()) == tag && last.size() == tag.size() + 8;
    if (ok) {
      std::uint32_t stored = 0;
      const auto res = std::from_chars(last.data() + tag.size(), last.data() + last.size(), stored, 16);
      ok = res.ec == std::errc() && stored == crc_of(all.substr(0, last_start + 1));
    }
  }
  if (!ok) fail(ErrorCode::Checksum, "checksum mismatch in '" + path + "' (corrupt or truncated)");
  t.lines = split_lines(all.substr(first_end + 1, last_start - first_end));
  return t;
}

// Splits leading "# k=v" / "## k=v" lines off; returns the index of the first other line.
std::size_t read_text_header(const TextBody& t, Meta& meta, Provenance& prov) {
  std::size_t i = 0;
  for (; i < t.lines.size(); ++i) {
    const std::string_view l = t.lines[i];
    if (l.substr(0, 3) == "## ") {
      auto [k, v] = split_kv(l.substr(3));
      prov.emplace_back(std::move(k), std::move(v));
    } else if (l.substr(0, 2) == "# " && l.find('=') != std::string_view::npos && l.substr(0, 8) != "# ridge " &&
               l.substr(0, 10) != "# profile ") {
      auto [k, v] = split_kv(l.substr(2));
      meta.set(k, v);
    } else {
      break;
    }
  }
  return i;
}

void expect_line(const TextBody& t, std::size_t i, std::string_view want, const std::string& path) {
  if (i >= t.lines.size() || t.lines[i] != want)
    fail(ErrorCode::Format, "'" + path + "': expected '" + std::string(want) + "'");
}

// -- shared field metadata ----------------------------------------------------

void put_grid(Meta& m, const GridGeometry& g) {
  m.set("x0", g.x0);
  m.set("y0", g.y0);
  m.set("spacing", g.spacing);
  m.set_u("nx", g.nx);
  m.set_u("ny", g.ny);
}

GridGeometry get_grid(const Meta& m) {
  GridGeometry g;
  g.x0 = m.num("x0");
  g.y0 = m.num("y0");
  g.spacing = m.num("spacing");
  g.nx = m.u("nx");
  g.ny = m.u("ny");
  if (g.nx < 2 || g.ny < 2 || !(g.spacing > 0.0)) fail(ErrorCode::Format, "invalid grid in header");
  return g;
}

Meta gridded_meta(const GriddedField& f) {
  Meta m;
  put_grid(m, f.geometry());
  m.set("t0", f.t0());
  m.set("dt", f.dt());
  m.set_u("nt", f.slice_count());
  m.set("interpolation", to_string(f.interpolation()));
  m.set("source", f.source());
  m.set("noise_magnitude", f.noise().magnitude);
  m.set_u("noise_seed", f.noise().seed);
  m.set_u("noise_applied", f.noise().applied ? 1 : 0);
  return m;
}

GriddedField gridded_from(const Meta& m, std::vector<double> values) {
  NoiseDescriptor noise{m.num("noise_magnitude"), m.u("noise_seed"), m.u("noise_applied") != 0};
  return GriddedField(get_grid(m), m.num("t0"), m.num("dt"), m.u("nt"), std::move(values),
                      interpolation_from_string(m.str("interpolation")), m.str("source"), noise);
}

Meta ftle_meta(const FtleField& f) {
  Meta m;
  put_grid(m, f.grid);
  m.set("t0", f.t0);
  m.set("t1", f.t1);
  m.set("method", to_string(f.method));
  m.set("cluster_spacing", f.cluster_spacing);
  Provenance integ;
  append_integrator(integ, "integrator.", f.integrator);
  for (const auto& [k, v] : integ) m.set(k, v);
  m.set("field", f.field_description);
  return m;
}

FtleField ftle_from(const Meta& m) {
  FtleField f;
  f.grid = get_grid(m);
  f.t0 = m.num("t0");
  f.t1 = m.num("t1");
  f.method = gradient_method_from_string(m.str("method"));
  f.cluster_spacing = m.num("cluster_spacing");
  f.integrator.rtol = m.num("integrator.rtol");
  f.integrator.atol = m.num("integrator.atol");
  f.integrator.initial_step = m.num("integrator.initial_step");
  f.integrator.max_step = m.num("integrator.max_step");
  f.integrator.max_steps = m.u("integrator.max_steps");
  f.integrator.mode = batch_step_mode_from_string(m.str("integrator.mode"));
  f.field_description = m.str("field");
  return f;
}

NodeFlag node_flag_from(std::uint64_t v) {
  if (v > static_cast<std::uint64_t>(NodeFlag::Degenerate)) fail(ErrorCode::Format, "invalid node flag");
  return static_cast<NodeFlag>(v);
}

}  // namespace

const std::string* find_key(const Provenance& p, const std::string& key) {
  for (const auto& [k, v] : p)
    if (k == key) return &v;
  return nullptr;
}

void write_text_artifact(const std::string& path, const std::string& kind, const Provenance& meta,
                         const Provenance& prov, const std::string& body) {
  std::string out = text_begin(kind.c_str());
  Meta m;
  for (const auto& [k, v] : meta) m.set(k, v);
  text_header(out, m, prov);
  out += body;
  text_finish(path, std::move(out));
}

void append_integrator(Provenance& p, const std::string& prefix, const IntegratorConfig& cfg) {
  p.emplace_back(prefix + "rtol", fmt_double(cfg.rtol));
  p.emplace_back(prefix + "atol", fmt_double(cfg.atol));
  p.emplace_back(prefix + "initial_step", fmt_double(cfg.initial_step));
  p.emplace_back(prefix + "max_step", fmt_double(cfg.max_step));
  p.emplace_back(prefix + "max_steps", std::to_string(cfg.max_steps));
  p.emplace_back(prefix + "mode", to_string(cfg.mode));
}

// -- gridded fields -----------------------------------------------------------

void save_gridded(const std::string& path, const GriddedField& f, const Provenance& prov) {
  std::string payload;
  payload.reserve(8 * f.values().size());
  for (double v : f.values()) put_f64(payload, v);
  write_file(path, pack(kKindGridded, gridded_meta(f), prov, payload));
}

LoadedGridded load_gridded(const std::string& path) {
  Unpacked u = unpack(path, kKindGridded);
  if (u.payload.size() % 8 != 0) fail(ErrorCode::Format, "gridded payload is not a whole number of doubles");
  std::vector<double> values(u.payload.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_f64(u.payload, 8 * i);
  return {gridded_from(u.meta, std::move(values)), std::move(u.prov)};
}

void save_gridded_text(const std::string& path, const GriddedField& f, const Provenance& prov) {
  std::string out = text_begin("gridded");
  text_header(out, gridded_meta(f), prov);
  out += "k,i,j,u,v\n";
  const GridGeometry& g = f.geometry();
  for (std::size_t k = 0; k < f.slice_count(); ++k)
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) {
        const Vec2 v = f.node_value(k, i, j);
        out += std::to_string(k) + ',' + std::to_string(i) + ',' + std::to_string(j) + ',' + fmt_double(v.x) + ',' +
               fmt_double(v.y) + '\n';
      }
  text_finish(path, std::move(out));
}

LoadedGridded load_gridded_text(const std::string& path) {
  const TextBody t = text_open(path, "gridded");
  Meta meta;
  Provenance prov;
  std::size_t i = read_text_header(t, meta, prov);
  expect_line(t, i++, "k,i,j,u,v", path);
  std::vector<double> values;
  values.reserve(2 * (t.lines.size() - i));
  for (; i < t.lines.size(); ++i) {
    const auto c = split_csv(t.lines[i]);
    if (c.size() != 5) fail(ErrorCode::Format, "'" + path + "': expected 5 columns");
    values.push_back(parse_double(c[3]));
    values.push_back(parse_double(c[4]));
  }
  return {gridded_from(meta, std::move(values)), std::move(prov)};
}

LoadedGridded load_gridded_any(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "' for reading");
  char head[2] = {0, 0};
  in.read(head, 2);
  return head[0] == '#' ? load_gridded_text(path) : load_gridded(path);
}

// -- FTLE fields --------------------------------------------------------------

void save_ftle(const std::string& path, const FtleField& f, const Provenance& prov) {
  if (f.phi.size() != f.grid.size() || f.flags.size() != f.grid.size())
    fail(ErrorCode::Argument, "FTLE field arrays do not match its grid");
  std::string payload;
  payload.reserve(9 * f.phi.size());
  for (double v : f.phi) put_f64(payload, v);
  for (NodeFlag fl : f.flags) payload.push_back(static_cast<char>(fl));
  write_file(path, pack(kKindFtle, ftle_meta(f), prov, payload));
}

LoadedFtle load_ftle(const std::string& path) {
  Unpacked u = unpack(path, kKindFtle);
  FtleField f = ftle_from(u.meta);
  const std::size_t n = f.grid.size();
  if (u.payload.size() != 9 * n) fail(ErrorCode::Format, "FTLE payload does not match the grid");
  f.phi.resize(n);
  f.flags.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.phi[i] = get_f64(u.payload, 8 * i);
  for (std::size_t i = 0; i < n; ++i) f.flags[i] = node_flag_from(static_cast<unsigned char>(u.payload[8 * n + i]));
  return {std::move(f), std::move(u.prov)};
}

void save_ftle_csv(const std::string& path, const FtleField& f, const Provenance& prov) {
  if (f.phi.size() != f.grid.size() || f.flags.size() != f.grid.size())
    fail(ErrorCode::Argument, "FTLE field arrays do not match its grid");
  std::string out = text_begin("ftle");
  text_header(out, ftle_meta(f), prov);
  out += "i,j,x,y,phi,flag\n";
  for (std::size_t j = 0; j < f.grid.ny; ++j)
    for (std::size_t i = 0; i < f.grid.nx; ++i) {
      const Vec2 p = f.grid.node(i, j);
      const std::size_t k = j * f.grid.nx + i;
      out += std::to_string(i) + ',' + std::to_string(j) + ',' + fmt_double(p.x) + ',' + fmt_double(p.y) + ',' +
             fmt_double(f.phi[k]) + ',' + std::to_string(static_cast<int>(f.flags[k])) + '\n';
    }
  text_finish(path, std::move(out));
}

LoadedFtle load_ftle_csv(const std::string& path) {
  const TextBody t = text_open(path, "ftle");
  Meta meta;
  Provenance prov;
  std::size_t line = read_text_header(t, meta, prov);
  FtleField f = ftle_from(meta);
  expect_line(t, line++, "i,j,x,y,phi,flag", path);
  const std::size_t n = f.grid.size();
  if (t.lines.size() - line != n) fail(ErrorCode::Format, "'" + path + "': row count does not match the grid");
  f.phi.assign(n, 0.0);
  f.flags.assign(n, NodeFlag::Ok);
  std::vector<bool> seen(n, false);
  for (; line < t.lines.size(); ++line) {
    const auto c = split_csv(t.lines[line]);
    if (c.size() != 6) fail(ErrorCode::Format, "'" + path + "': expected 6 columns");
    const std::uint64_t i = parse_u(c[0]), j = parse_u(c[1]);
    if (i >= f.grid.nx || j >= f.grid.ny) fail(ErrorCode::Format, "'" + path + "': node index out of range");
    const std::size_t k = j * f.grid.nx + i;
    if (seen[k]) fail(ErrorCode::Format, "'" + path + "': duplicate node");
    seen[k] = true;
    f.phi[k] = parse_double(c[4]);
    f.flags[k] = node_flag_from(parse_u(c[5]));
  }
  return {std::move(f), std::move(prov)};
}

LoadedFtle load_ftle_any(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "' for reading");
  char head[2] = {0, 0};
  in.read(head, 2);
  return head[0] == '#' ? load_ftle_csv(path) : load_ftle(path);
}

// -- ridges -------------------------------------------------------------------

void save_ridges(const std::string& path, const std::vector<Ridge>& ridges, const Provenance& prov) {
  std::string out = text_begin("ridges");
  Meta meta;
  meta.set_u("ridges", ridges.size());
  text_header(out, meta, prov);
  for (std::size_t r = 0; r < ridges.size(); ++r) {
    const Ridge& rg = ridges[r];
    const std::size_t n = rg.size();
    if (rg.s.size() != n || rg.tangent.size() != n || rg.phi.size() != n || rg.flags.size() != n)
      fail(ErrorCode::Argument, "ridge " + std::to_string(r) + " geometry is not up to date");
    Meta h;
    h.set_u("points", n);
    h.set("state", to_string(rg.state));
    h.set("seed_x", rg.seed.x);
    h.set("seed_y", rg.seed.y);
    h.set("stop_start", to_string(rg.stop_start));
    h.set("stop_end", to_string(rg.stop_end));
    h.set("refine_iterations", std::to_string(rg.refine_iterations));
    h.set("W0", rg.schedule.initial_window);
    h.set("shrink", rg.schedule.shrink);
    h.set_u("samples", rg.schedule.samples);
    h.set("W_final", rg.schedule.final_window);
    h.set_u("max_iterations", rg.schedule.max_iterations);
    out += "# ridge " + std::to_string(r) + ' ' + token_line(h) + '\n';
  }
  out += "ridge,index,s,x,y,phi,tx,ty,flags\n";
  for (std::size_t r = 0; r < ridges.size(); ++r) {
    const Ridge& rg = ridges[r];
    for (std::size_t i = 0; i < rg.size(); ++i)
      out += std::to_string(r) + ',' + std::to_string(i) + ',' + fmt_double(rg.s[i]) + ',' +
             fmt_double(rg.points[i].x) + ',' + fmt_double(rg.points[i].y) + ',' + fmt_double(rg.phi[i]) + ',' +
             fmt_double(rg.tangent[i].x) + ',' + fmt_double(rg.tangent[i].y) + ',' + std::to_string(rg.flags[i]) +
             '\n';
  }
  text_finish(path, std::move(out));
}

LoadedRidges load_ridges(const std::string& path) {
  const TextBody t = text_open(path, "ridges");
  Meta meta;
  LoadedRidges out;
  std::size_t line = read_text_header(t, meta, out.provenance);
  const std::uint64_t count = meta.u("ridges");
  std::vector<std::size_t> sizes;
  for (std::uint64_t r = 0; r < count; ++r, ++line) {
    const std::string prefix = "# ridge " + std::to_string(r) + ' ';
    if (line >= t.lines.size() || t.lines[line].substr(0, prefix.size()) != prefix)
      fail(ErrorCode::Format, "'" + path + "': missing header for ridge " + std::to_string(r));
    const Meta h = parse_tokens(t.lines[line].substr(prefix.size()));
    Ridge rg;
    rg.state = ridge_state_from_string(h.str("state"));
    rg.seed = {h.num("seed_x"), h.num("seed_y")};
    rg.stop_start = stop_reason_from_string(h.str("stop_start"));
    rg.stop_end = stop_reason_from_string(h.str("stop_end"));
    rg.refine_iterations = h.u("refine_iterations");
    rg.schedule.initial_window = h.num("W0");
    rg.schedule.shrink = h.num("shrink");
    rg.schedule.samples = h.u("samples");
    rg.schedule.final_window = h.num("W_final");
    rg.schedule.max_iterations = h.u("max_iterations");
    sizes.push_back(h.u("points"));
    out.ridges.push_back(std::move(rg));
  }
  expect_line(t, line++, "ridge,index,s,x,y,phi,tx,ty,flags", path);
  for (std::size_t r = 0; r < count; ++r) {
    Ridge& rg = out.ridges[r];
    for (std::size_t i = 0; i < sizes[r]; ++i, ++line) {
      if (line >= t.lines.size()) fail(ErrorCode::Format, "'" + path + "': fewer rows than declared");
      const auto c = split_csv(t.lines[line]);
      if (c.size() != 9 || parse_u(c[0]) != r || parse_u(c[1]) != i)
        fail(ErrorCode::Format, "'" + path + "': malformed ridge row");
      rg.s.push_back(parse_double(c[2]));
      rg.points.push_back({parse_double(c[3]), parse_double(c[4])});
      rg.phi.push_back(parse_double(c[5]));
      rg.tangent.push_back({parse_double(c[6]), parse_double(c[7])});
      rg.normal.push_back(rot90(rg.tangent.back()));
      const std::uint64_t fl = parse_u(c[8]);
      if (fl > 255) fail(ErrorCode::Format, "'" + path + "': invalid ridge flags");
      rg.flags.push_back(static_cast<std::uint8_t>(fl));
    }
  }
  if (line != t.lines.size()) fail(ErrorCode::Format, "'" + path + "': more rows than declared");
  return out;
}

// -- classification profiles --------------------------------------------------

void save_profiles(const std::string& path, const std::vector<ClassificationProfile>& profiles,
                   const Provenance& prov) {
  std::string out = text_begin("profiles");
  Meta meta;
  meta.set_u("profiles", profiles.size());
  text_header(out, meta, prov);
  for (std::size_t r = 0; r < profiles.size(); ++r) {
    const ClassificationProfile& p = profiles[r];
    Meta h;
    h.set_u("points", p.points.size());
    h.set("t0", p.t0);
    h.set("t1", p.t1);
    h.set("method", to_string(p.method));
    h.set("cluster_spacing", p.cluster_spacing);
    h.set("b_tol", p.tolerances.b_tol);
    h.set("delta_tol", p.tolerances.delta_tol);
    out += "# profile " + std::to_string(r) + ' ' + token_line(h) + '\n';
  }
  out += "ridge,s,x,y,phi,n_l,e_l,rho_l,sigma_l,sign_rho,sign_sigma,b,delta,flags,e_mag,n_mag,rho,sigma,e_tx,e_ty\n";
  for (std::size_t r = 0; r < profiles.size(); ++r)
    for (const ProfilePoint& q : profiles[r].points) {
      const PointClassification& m = q.metrics;
      out += std::to_string(r) + ',' + fmt_double(q.s) + ',' + fmt_double(q.x.x) + ',' + fmt_double(q.x.y) + ',' +
             fmt_double(q.phi) + ',' + fmt_double(m.n_l) + ',' + fmt_double(m.e_l) + ',' + fmt_double(m.rho_l) + ',' +
             fmt_double(m.sigma_l) + ',' + std::to_string(m.rho_sign()) + ',' + std::to_string(m.sigma_sign()) +
             ',' + fmt_double(q.alignment.b) + ',' + fmt_double(q.alignment.delta) + ',' + std::to_string(q.flags) +
             ',' + fmt_double(m.e_magnitude) + ',' + fmt_double(m.n_magnitude) + ',' + fmt_double(m.rho) + ',' +
             fmt_double(m.sigma) + ',' + fmt_double(m.e_t.x) + ',' + fmt_double(m.e_t.y) + '\n';
    }
  text_finish(path, std::move(out));
}

LoadedProfiles load_profiles(const std::string& path) {
  const TextBody t = text_open(path, "profiles");
  Meta meta;
  LoadedProfiles out;
  std::size_t line = read_text_header(t, meta, out.provenance);
  const std::uint64_t count = meta.u("profiles");
  std::vector<std::size_t> sizes;
  for (std::uint64_t r = 0; r < count; ++r, ++line) {
    const std::string prefix = "# profile " + std::to_string(r) + ' ';
    if (line >= t.lines.size() || t.lines[line].substr(0, prefix.size()) != prefix)
      fail(ErrorCode::Format, "'" + path + "': missing header for profile " + std::to_string(r));
    const Meta h = parse_tokens(t.lines[line].substr(prefix.size()));
    ClassificationProfile p;
    p.t0 = h.num("t0");
    p.t1 = h.num("t1");
    p.method = gradient_method_from_string(h.str("method"));
    p.cluster_spacing = h.num("cluster_spacing");
    p.tolerances.b_tol = h.num("b_tol");
    p.tolerances.delta_tol = h.num("delta_tol");
    sizes.push_back(h.u("points"));
    out.profiles.push_back(std::move(p));
  }
  expect_line(t, line++,
              "ridge,s,x,y,phi,n_l,e_l,rho_l,sigma_l,sign_rho,sign_sigma,b,delta,flags,e_mag,n_mag,rho,sigma,e_tx,e_ty",
              path);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t i = 0; i < sizes[r]; ++i, ++line) {
      if (line >= t.lines.size()) fail(ErrorCode::Format, "'" + path + "': fewer rows than declared");
      const auto c = split_csv(t.lines[line]);
      if (c.size() != 20 || parse_u(c[0]) != r) fail(ErrorCode::Format, "'" + path + "': malformed profile row");
      ProfilePoint q;
      q.s = parse_double(c[1]);
      q.x = {parse_double(c[2]), parse_double(c[3])};
      q.phi = parse_double(c[4]);
      PointClassification& m = q.metrics;
      m.n_l = parse_double(c[5]);
      m.e_l = parse_double(c[6]);
      m.rho_l = parse_double(c[7]);
      m.sigma_l = parse_double(c[8]);
      q.alignment.b = parse_double(c[11]);
      q.alignment.delta = parse_double(c[12]);
      const std::uint64_t fl = parse_u(c[13]);
      if (fl > 0xffffffffu) fail(ErrorCode::Format, "'" + path + "': invalid profile flags");
      q.flags = static_cast<std::uint32_t>(fl);
      m.e_magnitude = parse_double(c[14]);
      m.n_magnitude = parse_double(c[15]);
      m.rho = parse_double(c[16]);
      m.sigma = parse_double(c[17]);
      m.e_t = {parse_double(c[18]), parse_double(c[19])};
      m.n_t = rot90(m.e_t);
      if (parse_i(c[9]) != m.rho_sign() || parse_i(c[10]) != m.sigma_sign())
        fail(ErrorCode::Format, "'" + path + "': sign columns disagree with rho/sigma");
      m.zero_shear = (q.flags & profile_flag::kZeroShear) != 0;
      q.alignment.isotropic = (q.flags & profile_flag::kIsotropic) != 0;
      q.alignment.strainline_sensitive = (q.flags & profile_flag::kStrainlineSensitive) != 0;
      q.alignment.stretchline_sensitive = (q.flags & profile_flag::kStretchlineSensitive) != 0;
      out.profiles[r].points.push_back(q);
    }
  }
  if (line != t.lines.size()) fail(ErrorCode::Format, "'" + path + "': more rows than declared");
  return out;
}

}  // namespace ftlekit
