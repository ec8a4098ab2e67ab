#pragma once

// Artifact persistence: CSV tables (header row carries schema version and
// config hash), interior field dumps in the shared plain-text array format,
// all written atomically (write to temp, then rename).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcm/grid.hpp"
#include "bcm/signal.hpp"

namespace bcm {

inline constexpr int kSchemaVersion = 1;

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const std::string& raw) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(raw)));
  return buf;
}

inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

class CsvTable {
 public:
  CsvTable(std::vector<std::string> columns, const std::string& cfg_hash)
      : columns_(std::move(columns)), hash_(cfg_hash) {}

  void add_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size())
      throw std::invalid_argument("csv row width mismatch");
    rows_.push_back(cells);
  }

  std::string serialize() const {
    std::ostringstream os;
    os << "# schema_version=" << kSchemaVersion << " config_hash=" << hash_ << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i)
      os << columns_[i] << (i + 1 < columns_.size() ? "," : "\n");
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i)
        os << r[i] << (i + 1 < r.size() ? "," : "\n");
    }
    return os.str();
  }

  void write(const std::string& path) const { atomic_write(path, serialize()); }

 private:
  std::vector<std::string> columns_;
  std::string hash_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Interior field dump: same header style as the boundary-signal format.
inline void write_field(const std::string& path, const Grid& g,
                        const std::vector<double>& field, const std::string& cfg_hash) {
  if (static_cast<int>(field.size()) != g.n_nodes())
    throw std::invalid_argument("write_field: size mismatch");
  std::ostringstream os;
  os << "interior_field " << kSchemaVersion << " " << g.nx << " " << g.ny << " "
     << fmt_g(g.hx) << " " << fmt_g(g.hy) << " " << cfg_hash << "\n";
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j)
      os << fmt_g(field[g.node(i, j)]) << (j + 1 < g.ny ? " " : "");
    os << "\n";
  }
  atomic_write(path, os.str());
}

inline void write_signal_atomic(const std::string& path, const BoundarySignal& f) {
  atomic_write(path, to_string(f));
}

}  // namespace bcm
