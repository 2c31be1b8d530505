#ifndef STABLEFK_IO_HPP
#define STABLEFK_IO_HPP

#include <string>
#include <vector>

#include "stablefk/forms.hpp"
#include "stablefk/verify.hpp"

namespace stablefk {

/// "# <tool version> config=<digest>" followed by the header row and the rows.
std::string csv_text(const Table& table, const std::string& digest);
void write_csv(const std::string& path, const Table& table, const std::string& digest);

/// JSON manifest: tool, config digest, overall pass flag and one record per check.
std::string manifest_text(const std::vector<CheckReport>& reports, const std::string& digest);
void write_manifest(const std::string& path, const std::vector<CheckReport>& reports, const std::string& digest);

/// Binary cache of an assembled system: magic "FKFORMS1", u32 version,
/// u64 n, f64 L, alpha, mass, kappa, the digest, then the four matrices
/// (row-major) and the seven node vectors, all little-endian.
void write_cache(const std::string& path, const FormSystem& sys, const std::string& digest);
/// Throws ConfigError on a malformed file or a version mismatch.
FormSystem read_cache(const std::string& path, std::string* digest = nullptr);

}  // namespace stablefk

#endif  // STABLEFK_IO_HPP
