#pragma once

// Field files, run configuration and output provenance.
//
// Raw grid layout (little endian):
//   bytes 0-3    magic "HCGR"
//   byte  4      format version (1)
//   byte  5      1 for the complex model, 0 for the real one
//   bytes 6-7    uint16 dimension (n complex or d real)
//   bytes 8-31   uint32 node count per real axis, unused axes 0
//   then one float64 per node, row-major, last axis fastest.

#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hessiancone/error.hpp"
#include "hessiancone/grid.hpp"

namespace hessiancone {

inline constexpr std::string_view kVersion = "0.1.0";

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// "# hessiancone <version> command=<cmd> seed=<seed> config=<hash>"
inline std::string provenance_line(std::string_view command, std::uint64_t seed, std::uint64_t config_hash) {
  std::ostringstream os;
  os << "# hessiancone " << kVersion << " command=" << command << " seed=" << seed << " config=" << hex64(config_hash)
     << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Config files: "key = value" lines, '#' starts a comment.

class Config {
 public:
  static Config parse(std::string_view text) {
    Config c;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos)
        fail(ErrorKind::Parse, "config line " + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) fail(ErrorKind::Parse, "config line " + std::to_string(lineno) + ": empty key");
      if (c.values_.count(key)) fail(ErrorKind::Parse, "config line " + std::to_string(lineno) + ": duplicate key " + key);
      c.values_[key] = value;
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) > 0; }

  [[nodiscard]] std::string get(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }
  [[nodiscard]] std::string require(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) fail(ErrorKind::Parse, "config is missing key " + key);
    return it->second;
  }
  [[nodiscard]] double get_double(const std::string& key, double fallback) const {
    return has(key) ? to_double(key, values_.at(key)) : fallback;
  }
  [[nodiscard]] long get_int(const std::string& key, long fallback) const {
    return has(key) ? to_int(key, values_.at(key)) : fallback;
  }
  [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = values_.at(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(ErrorKind::Parse, "config key " + key + ": expected a boolean, got '" + v + "'");
  }
  [[nodiscard]] std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const std::string& item : split(values_.at(key), ',')) out.push_back(to_double(key, item));
    return out;
  }
  [[nodiscard]] std::vector<long> get_ints(const std::string& key, std::vector<long> fallback) const {
    if (!has(key)) return fallback;
    std::vector<long> out;
    for (const std::string& item : split(values_.at(key), ',')) out.push_back(to_int(key, item));
    return out;
  }

  /// Rejects keys outside `known`.
  void require_known(const std::set<std::string>& known) const {
    for (const auto& [k, v] : values_)
      if (!known.count(k)) fail(ErrorKind::Parse, "unknown config key " + k);
  }

  /// Sorted "key=value" lines; hashing this ignores comments and layout.
  [[nodiscard]] std::string canonical() const {
    std::string s;
    for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
    return s;
  }
  [[nodiscard]] std::uint64_t hash() const { return fnv1a64(canonical()); }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  static std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
  }
  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }
  static double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
      fail(ErrorKind::Parse, "config key " + key + ": expected a number, got '" + v + "'");
    return x;
  }
  static long to_int(const std::string& key, const std::string& v) {
    long x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
      fail(ErrorKind::Parse, "config key " + key + ": expected an integer, got '" + v + "'");
    return x;
  }

  std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// Field CSV: one row per node, axis indices then the value.

inline void write_field_csv(std::ostream& out, const ScalarField& f) {
  const GridGeometry& g = *f.grid;
  for (int a = 0; a < g.axes(); ++a) out << 'i' << a << ',';
  out << "value\n";
  out << std::setprecision(17);
  for (std::size_t node = 0; node < g.size(); ++node) {
    for (int a = 0; a < g.axes(); ++a) out << g.coord(node, a) << ',';
    out << f[node] << '\n';
  }
}

/// Reads values written by write_field_csv onto an existing grid. Lines
/// starting with '#' are skipped.
inline ScalarField read_field_csv(std::istream& in, GridPtr grid) {
  ScalarField f(grid);
  std::vector<bool> seen(grid->size(), false);
  std::string line;
  bool header = false;
  std::array<int, kMaxAxes> coords{};
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    for (int a = 0; a < grid->axes(); ++a) {
      if (!std::getline(row, cell, ',')) fail(ErrorKind::Parse, "field row too short: " + line);
      coords[a] = std::stoi(cell);
    }
    if (!std::getline(row, cell)) fail(ErrorKind::Parse, "field row has no value: " + line);
    const std::size_t node = grid->index(std::span<const int>(coords.data(), grid->axes()));
    f[node] = std::stod(cell);
    seen[node] = true;
  }
  for (bool s : seen)
    if (!s) fail(ErrorKind::Parse, "field file does not cover every node");
  return f;
}

// ---------------------------------------------------------------------------
// Raw little-endian grids.

namespace detail {

template <class T>
void put_le(std::string& buf, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace detail

inline constexpr std::size_t kRawHeaderBytes = 32;

inline std::string encode_raw(const ScalarField& f) {
  const GridGeometry& g = *f.grid;
  std::string buf = "HCGR";
  detail::put_le<std::uint8_t>(buf, 1);
  detail::put_le<std::uint8_t>(buf, g.is_complex() ? 1 : 0);
  detail::put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(g.dim()));
  for (int a = 0; a < kMaxAxes; ++a)
    detail::put_le<std::uint32_t>(buf, a < g.axes() ? static_cast<std::uint32_t>(g.extent(a)) : 0u);
  buf.reserve(kRawHeaderBytes + 8 * g.size());
  for (double v : f.values) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    detail::put_le<std::uint64_t>(buf, bits);
  }
  return buf;
}

inline ScalarField decode_raw(std::string_view bytes) {
  if (bytes.size() < kRawHeaderBytes || bytes.substr(0, 4) != "HCGR") fail(ErrorKind::Parse, "not a raw grid file");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (p[4] != 1) fail(ErrorKind::Parse, "unsupported raw grid version " + std::to_string(p[4]));
  const bool complex = p[5] == 1;
  const int dim = detail::get_le<std::uint16_t>(p + 6);
  const int axes = complex ? 2 * dim : dim;
  if (dim < 1 || axes > kMaxAxes) fail(ErrorKind::Parse, "raw grid dimension out of range");
  const int normal = complex ? 2 * (dim - 1) : dim - 1;
  std::vector<int> intervals(axes);
  for (int a = 0; a < axes; ++a) {
    const auto count = static_cast<int>(detail::get_le<std::uint32_t>(p + 8 + 4 * a));
    intervals[a] = a == normal ? count - 1 : count;
  }
  GridPtr grid = complex ? GridGeometry::complex_model(dim, intervals) : GridGeometry::real_model(dim, intervals);
  if (bytes.size() != kRawHeaderBytes + 8 * grid->size()) fail(ErrorKind::Parse, "raw grid payload has the wrong size");
  ScalarField f(grid);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const std::uint64_t bits = detail::get_le<std::uint64_t>(p + kRawHeaderBytes + 8 * i);
    std::memcpy(&f.values[i], &bits, sizeof bits);
  }
  return f;
}

inline void write_raw(const std::string& path, const ScalarField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  const std::string buf = encode_raw(f);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline ScalarField read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return decode_raw(ss.str());
}

}  // namespace hessiancone
