#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "lowmach/grid.hpp"

namespace lowmach {

// Named columns sharing one grid.
struct FieldBundle {
  GridPtr grid;
  std::vector<std::string> names;
  std::vector<Vec> columns;

  void add(const std::string& name, const Vec& v) {
    if (v.size() != grid->size()) throw GridMismatchError("column '" + name + "' has wrong size");
    names.push_back(name);
    columns.push_back(v);
  }
  void add(const std::string& name, const ScalarField& f) {
    require_same_grid(grid, f.grid);
    add(name, f.v);
  }
  void add(const std::string& name, const VectorField& f) {
    require_same_grid(grid, f.grid);
    add(name + "_r", f.r);
    add(name + "_phi", f.phi);
  }
  const Vec& column(const std::string& name) const {
    for (size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return columns[k];
    throw Error("no column named '" + name + "'");
  }
};

inline void ensure_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

// r, phi, <columns...>; 17 significant digits so the text round-trips.
inline void write_csv(const std::filesystem::path& path, const FieldBundle& b) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string());
  out << "r,phi";
  for (const auto& n : b.names) out << ',' << n;
  out << '\n' << std::setprecision(17);
  const auto& g = *b.grid;
  for (int i = 0; i <= g.nr(); ++i)
    for (int j = 0; j < g.nphi(); ++j) {
      const int k = g.index(i, j);
      out << g.r(i) << ',' << g.phi(j);
      for (const auto& c : b.columns) out << ',' << c[k];
      out << '\n';
    }
}

// Generic table writer for time series and reports. Numbers are stored with
// 17 significant digits so identical runs give identical files.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format(v));
    add(std::move(cells));
  }
  // leading text cells followed by one number
  void row_mixed(std::vector<std::string> keys, double value) {
    keys.push_back(format(value));
    add(std::move(keys));
  }
  size_t size() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::string>& row_cells(size_t k) const { return rows_.at(k); }
  void write(const std::filesystem::path& path) const {
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string());
    write(out);
  }
  void write(std::ostream& out) const {
    for (size_t k = 0; k < header_.size(); ++k) out << (k ? "," : "") << header_[k];
    out << '\n';
    for (const auto& r : rows_) {
      for (size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << r[k];
      out << '\n';
    }
  }

  static std::string format(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
  }

 private:
  void add(std::vector<std::string> cells) {
    if (cells.size() != header_.size()) throw Error("csv row has wrong column count");
    rows_.push_back(std::move(cells));
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// ---- binary checkpoints ----------------------------------------------------
//
// header: "LMCK" | u32 version | f64 r1, r2 | i32 nr, nphi | i32 ncols |
//         per column: u32 name length + bytes | f64 time
// payload: each column row-major in (i, j), little-endian doubles.

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {
template <class T>
void put(std::ostream& o, const T& v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& i) {
  T v{};
  i.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!i) throw Error("truncated checkpoint");
  return v;
}
}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const FieldBundle& b, double time) {
  ensure_parent(path);
  std::ofstream o(path, std::ios::binary);
  if (!o) throw Error("cannot open " + path.string());
  o.write("LMCK", 4);
  detail::put(o, kCheckpointVersion);
  detail::put(o, b.grid->r1());
  detail::put(o, b.grid->r2());
  detail::put(o, std::int32_t(b.grid->nr()));
  detail::put(o, std::int32_t(b.grid->nphi()));
  detail::put(o, std::int32_t(b.columns.size()));
  for (const auto& n : b.names) {
    detail::put(o, std::uint32_t(n.size()));
    o.write(n.data(), std::streamsize(n.size()));
  }
  detail::put(o, time);
  for (const auto& c : b.columns)
    o.write(reinterpret_cast<const char*>(c.data()), std::streamsize(c.size() * sizeof(double)));
}

struct Checkpoint {
  FieldBundle fields;
  double time = 0.0;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LMCK", 4) != 0) throw Error(path.string() + " is not a checkpoint");
  auto version = detail::get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw Error("unsupported checkpoint version");
  double r1 = detail::get<double>(in), r2 = detail::get<double>(in);
  int nr = detail::get<std::int32_t>(in), nphi = detail::get<std::int32_t>(in);
  int ncols = detail::get<std::int32_t>(in);
  Checkpoint ck;
  ck.fields.grid = make_grid(r1, r2, nr, nphi);
  std::vector<std::string> names(ncols);
  for (auto& n : names) {
    auto len = detail::get<std::uint32_t>(in);
    n.resize(len);
    in.read(n.data(), len);
  }
  ck.time = detail::get<double>(in);
  for (const auto& n : names) {
    Vec v(ck.fields.grid->size());
    in.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
    if (!in) throw Error("truncated checkpoint payload");
    ck.fields.add(n, v);
  }
  return ck;
}

}  // namespace lowmach
