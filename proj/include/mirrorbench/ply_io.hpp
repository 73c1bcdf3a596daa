// ASCII PLY reader/writer for point clouds. Fixed vertex-only schema:
// three float properties x y z, '.'-decimal, one point per line.

#ifndef MIRRORBENCH_PLY_IO_HPP
#define MIRRORBENCH_PLY_IO_HPP

#include <filesystem>
#include <sstream>
#include <string>

#include "mirrorbench/geometry.hpp"
#include "mirrorbench/io_util.hpp"

namespace mirrorbench {

inline void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out = open_output(path);
  out << "ply\n"
      << "format ascii 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "end_header\n";
  for (const Vec3& p : cloud.points) {
    out << format_g9(p.x()) << ' ' << format_g9(p.y()) << ' ' << format_g9(p.z()) << '\n';
  }
  if (!out) {
    throw IoError("short write: " + path.string());
  }
}

/// Reads the schema written by write_ply. `comment` lines are tolerated;
/// anything else unexpected is an IoError. The frame tag defaults to Sensor;
/// the caller retags as needed.
inline PointCloud read_ply(const std::filesystem::path& path, Frame frame = Frame::Sensor) {
  std::ifstream in = open_input(path);
  std::string line;
  auto next_line = [&](const char* what) {
    do {
      if (!std::getline(in, line)) {
        throw IoError(std::string("ply: missing ") + what + " in " + path.string());
      }
    } while (line.rfind("comment", 0) == 0);
  };

  next_line("magic");
  if (line != "ply") throw IoError("ply: bad magic in " + path.string());
  next_line("format");
  if (line != "format ascii 1.0") throw IoError("ply: unsupported format in " + path.string());
  next_line("element");
  std::size_t count = 0;
  {
    std::istringstream iss(line);
    std::string element, vertex;
    if (!(iss >> element >> vertex >> count) || element != "element" || vertex != "vertex") {
      throw IoError("ply: bad element line in " + path.string());
    }
  }
  for (const char* axis : {"x", "y", "z"}) {
    next_line("property");
    if (line != std::string("property float ") + axis) {
      throw IoError("ply: unexpected property line in " + path.string());
    }
  }
  next_line("end_header");
  if (line != "end_header") throw IoError("ply: missing end_header in " + path.string());

  PointCloud cloud(frame);
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    next_line("vertex row");
    std::istringstream iss(line);
    double x, y, z;
    if (!(iss >> x >> y >> z)) {
      throw IoError("ply: malformed vertex row in " + path.string());
    }
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

}  // namespace mirrorbench

#endif  // MIRRORBENCH_PLY_IO_HPP
