// Shared I/O plumbing: bench error types and deterministic number formatting
// for text artifacts (PLY, TUM, CSV).

#ifndef MIRRORBENCH_IO_UTIL_HPP
#define MIRRORBENCH_IO_UTIL_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace mirrorbench {

/// Invalid or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// No feasible mirror placement exists in the search space (exit code 3).
struct InfeasibleSpaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem failure (exit code 4).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 9 significant digits, shortest form. All CSV/PLY payload numbers go
/// through here so identical runs produce identical bytes.
inline std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

/// Fixed 9 decimals, used for TUM rows.
inline std::string format_f9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  return out;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open for reading: " + path.string());
  }
  return in;
}

}  // namespace mirrorbench

#endif  // MIRRORBENCH_IO_UTIL_HPP
