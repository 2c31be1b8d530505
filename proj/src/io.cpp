#include "stablefk/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stablefk/config.hpp"
#include "stablefk/errors.hpp"

namespace stablefk {

namespace {

constexpr char kMagic[8] = {'F', 'K', 'F', 'O', 'R', 'M', 'S', '1'};
constexpr std::uint32_t kCacheVersion = 1;

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ConfigError("cache file truncated");
  return v;
}

void put_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(os, m(i, j));
  }
}

Matrix get_matrix(std::istream& is, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = get<double>(is);
  }
  return m;
}

void put_vector(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(os, v(i));
}

Vector get_vector(std::istream& is, int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = get<double>(is);
  return v;
}

}  // namespace

std::string csv_text(const Table& table, const std::string& digest) {
  std::ostringstream os;
  os << "# " << kToolVersion << " config=" << digest << "\n";
  for (std::size_t j = 0; j < table.columns.size(); ++j) os << (j ? "," : "") << csv_cell(table.columns[j]);
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << csv_cell(row[j]);
    os << "\n";
  }
  return os.str();
}

void write_csv(const std::string& path, const Table& table, const std::string& digest) {
  write_text(path, csv_text(table, digest));
}

std::string manifest_text(const std::vector<CheckReport>& reports, const std::string& digest) {
  nlohmann::ordered_json j;
  j["tool"] = kToolVersion;
  j["config_digest"] = digest;
  bool all = true;
  auto checks = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    all = all && r.pass;
    nlohmann::ordered_json c;
    c["name"] = r.name;
    c["inputs_digest"] = r.inputs_digest;
    c["statistic"] = num(r.statistic);
    c["tolerance"] = num(r.tolerance);
    c["pass"] = r.pass;
    c["predicate"] = r.predicate;
    c["artifacts"] = r.artifacts;
    checks.push_back(c);
  }
  j["all_pass"] = all;
  j["checks"] = checks;
  return j.dump(2) + "\n";
}

void write_manifest(const std::string& path, const std::vector<CheckReport>& reports, const std::string& digest) {
  write_text(path, manifest_text(reports, digest));
}

void write_cache(const std::string& path, const FormSystem& sys, const std::string& digest) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kCacheVersion);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(sys.size()));
  put<double>(os, sys.grid.half_width());
  put<double>(os, sys.spec.alpha);
  put<double>(os, sys.spec.mass);
  put<double>(os, sys.spec.intensity_multiplier);
  put<std::uint64_t>(os, digest.size());
  os.write(digest.data(), static_cast<std::streamsize>(digest.size()));
  for (const Matrix* m : {&sys.a_base, &sys.a_minus, &sys.a_schr, &sys.a_y}) put_matrix(os, *m);
  for (const Vector* v : {&sys.b_rho, &sys.mu_plus, &sys.mu_minus, &sys.xi_gplus, &sys.xi_gminus, &sys.rho_plus,
                          &sys.rho_minus}) {
    put_vector(os, *v);
  }
  if (!os) throw ConfigError("write failed for '" + path + "'");
}

FormSystem read_cache(const std::string& path, std::string* digest) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open cache '" + path + "'");
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ConfigError("not a form cache: '" + path + "'");
  if (get<std::uint32_t>(is) != kCacheVersion) throw ConfigError("cache version mismatch");
  const auto n = get<std::uint64_t>(is);
  if (n < 16 || n > 100000) throw ConfigError("cache has an implausible size");
  FormSystem sys;
  const double L = get<double>(is);
  sys.spec.alpha = get<double>(is);
  sys.spec.mass = get<double>(is);
  sys.spec.intensity_multiplier = get<double>(is);
  const auto len = get<std::uint64_t>(is);
  if (len > 256) throw ConfigError("cache digest too long");
  std::string d(len, '\0');
  is.read(d.data(), static_cast<std::streamsize>(len));
  if (!is) throw ConfigError("cache file truncated");
  if (digest) *digest = d;
  try {
    sys.grid = Grid(L, static_cast<int>(n));
    sys.weights = assemble_weights(sys.grid, StableKernel(sys.spec));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("cache header: ") + e.what());
  }
  const int m = static_cast<int>(n);
  for (Matrix* a : {&sys.a_base, &sys.a_minus, &sys.a_schr, &sys.a_y}) *a = get_matrix(is, m);
  for (Vector* v : {&sys.b_rho, &sys.mu_plus, &sys.mu_minus, &sys.xi_gplus, &sys.xi_gminus, &sys.rho_plus,
                    &sys.rho_minus}) {
    *v = get_vector(is, m);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw ConfigError("cache file has trailing bytes");
  return sys;
}

}  // namespace stablefk
