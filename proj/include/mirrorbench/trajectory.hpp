// Timestamped pose sequences and TUM-format trajectory files
// (`timestamp tx ty tz qx qy qz qw`, one pose per line).

#ifndef MIRRORBENCH_TRAJECTORY_HPP
#define MIRRORBENCH_TRAJECTORY_HPP

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "mirrorbench/geometry.hpp"
#include "mirrorbench/io_util.hpp"

namespace mirrorbench {

struct Trajectory {
  std::vector<RigidPose> poses;

  std::size_t size() const { return poses.size(); }
  bool empty() const { return poses.empty(); }

  bool timestamps_strictly_increasing() const {
    for (std::size_t i = 1; i < poses.size(); ++i) {
      if (!(poses[i].timestamp > poses[i - 1].timestamp)) return false;
    }
    return true;
  }

  /// Re-expresses every pose relative to the first one, so the trajectory
  /// starts at identity.
  Trajectory start_relative() const {
    Trajectory out;
    if (poses.empty()) return out;
    const RigidPose inv0 = poses.front().inverse();
    out.poses.reserve(poses.size());
    for (const RigidPose& p : poses) {
      RigidPose rel = inv0 * p;
      rel.timestamp = p.timestamp;
      out.poses.push_back(rel);
    }
    return out;
  }
};

inline void write_tum(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out = open_output(path);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const RigidPose& p : traj.poses) {
    Eigen::Quaterniond q(p.rotation);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();  // canonical sign
    out << format_f9(p.timestamp) << ' ' << format_f9(p.translation.x()) << ' '
        << format_f9(p.translation.y()) << ' ' << format_f9(p.translation.z()) << ' '
        << format_f9(q.x()) << ' ' << format_f9(q.y()) << ' ' << format_f9(q.z()) << ' '
        << format_f9(q.w()) << '\n';
  }
  if (!out) {
    throw IoError("short write: " + path.string());
  }
}

inline Trajectory read_tum(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  Trajectory traj;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream iss(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(iss >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw IoError("tum: malformed row in " + path.string());
    }
    RigidPose p;
    p.timestamp = ts;
    p.translation = Vec3(tx, ty, tz);
    p.rotation = Eigen::Quaterniond(qw, qx, qy, qz).normalized().toRotationMatrix();
    traj.poses.push_back(p);
  }
  return traj;
}

}  // namespace mirrorbench

#endif  // MIRRORBENCH_TRAJECTORY_HPP
