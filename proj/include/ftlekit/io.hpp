#pragma once

// Persistence for gridded fields, FTLE fields, ridges and classification profiles.
//
// Binary container layout (all integers little-endian):
//   magic "FTLEKIT\0" | u32 version | u32 kind | u64 meta length | meta text |
//   u64 payload length | payload | u32 crc32 of every preceding byte
// The meta block is key=value lines. Text artifacts start with a "# ftlekit <kind> version=N"
// line and end with a "# crc32=xxxxxxxx" line covering every byte before it.
//
// Load errors: Version for an unknown version, Truncated when the file is too short to hold
// the fixed framing, Checksum when the stored crc does not match (which includes files cut
// anywhere past the framing), Format for structurally invalid content with a valid crc.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ftlekit/classification.hpp"
#include "ftlekit/flowmap.hpp"
#include "ftlekit/ridge.hpp"
#include "ftlekit/velocity_field.hpp"

namespace ftlekit {

inline constexpr std::uint32_t kFormatVersion = 1;

/// Ordered key/value provenance (config snapshot) carried by every artifact.
using Provenance = std::vector<std::pair<std::string, std::string>>;

const std::string* find_key(const Provenance& p, const std::string& key);

struct LoadedGridded {
  GriddedField field;
  Provenance provenance;
};
struct LoadedFtle {
  FtleField field;
  Provenance provenance;
};
struct LoadedRidges {
  std::vector<Ridge> ridges;
  Provenance provenance;
};
struct LoadedProfiles {
  std::vector<ClassificationProfile> profiles;
  Provenance provenance;
};

void save_gridded(const std::string& path, const GriddedField& f, const Provenance& prov = {});
LoadedGridded load_gridded(const std::string& path);
/// Debug variant: text header plus one "u v" line per node, shortest round-trip decimals.
void save_gridded_text(const std::string& path, const GriddedField& f, const Provenance& prov = {});
LoadedGridded load_gridded_text(const std::string& path);
/// Picks the binary or text loader from the first bytes of the file.
LoadedGridded load_gridded_any(const std::string& path);

void save_ftle(const std::string& path, const FtleField& f, const Provenance& prov = {});
LoadedFtle load_ftle(const std::string& path);
/// Columns i, j, x, y, phi, flag; the header carries the grid and computation settings.
void save_ftle_csv(const std::string& path, const FtleField& f, const Provenance& prov = {});
LoadedFtle load_ftle_csv(const std::string& path);
LoadedFtle load_ftle_any(const std::string& path);

/// Columns ridge, index, s, x, y, phi, tx, ty, flags; per-ridge header lines hold the seed,
/// state, stop reasons and refinement schedule.
void save_ridges(const std::string& path, const std::vector<Ridge>& ridges, const Provenance& prov = {});
LoadedRidges load_ridges(const std::string& path);

/// Columns ridge, s, x, y, phi, n_l, e_l, rho_l, sigma_l, sign_rho, sign_sigma, b, delta, flags,
/// followed by the raw quantities needed for an exact reload.
void save_profiles(const std::string& path, const std::vector<ClassificationProfile>& profiles,
                   const Provenance& prov = {});
LoadedProfiles load_profiles(const std::string& path);

/// Generic text artifact: version line, "# key=value" meta, "## key=value" provenance, the
/// body verbatim, then the checksum line.
void write_text_artifact(const std::string& path, const std::string& kind, const Provenance& meta,
                         const Provenance& prov, const std::string& body);

/// Integrator settings as provenance entries with the given key prefix.
void append_integrator(Provenance& p, const std::string& prefix, const IntegratorConfig& cfg);

}  // namespace ftlekit
