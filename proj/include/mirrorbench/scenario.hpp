// Scenario configuration: one JSON document describing the world, route,
// sensor, mirror, victim, and search settings for a bench run. Angles are
// degrees in the file and radians in memory; the loader converts at the
// boundary.

#ifndef MIRRORBENCH_SCENARIO_HPP
#define MIRRORBENCH_SCENARIO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mirrorbench/geometry.hpp"
#include "mirrorbench/io_util.hpp"
#include "mirrorbench/mirror.hpp"
#include "mirrorbench/odometry.hpp"
#include "mirrorbench/optimizer.hpp"
#include "mirrorbench/world.hpp"

namespace mirrorbench {

struct ScenarioConfig {
  int config_version = 1;

  WorldModel world;
  Polyline route;
  double speed = 2.0;  // m/s along the route

  LidarModel lidar;
  Mirror mirror;                  // nominal placement for simulate/explicit runs
  ActuationSchedule actuation;
  OdometryParams odometry;
  SearchSpace search;
  OptimizerConfig optimizer;

  double alpha = 0.3;    // EMA coefficient
  double d_voxel = 1.0;  // downsampling cell for the point ratios

  std::uint64_t seed = 1;
  std::string out_dir = "out";

  void validate() const;
};

inline void ScenarioConfig::validate() const {
  if (config_version != 1) throw ConfigError("unsupported config_version");
  if (!world.valid()) throw ConfigError("world: every obstacle needs min < max per axis");
  if (!route.valid()) throw ConfigError("route: need >= 2 distinct finite vertices");
  if (!(speed > 0.0)) throw ConfigError("speed must be > 0");
  if (!lidar.valid()) throw ConfigError("lidar: invalid field (fov/steps/range/period)");
  if (!mirror.valid()) throw ConfigError("mirror: width/height must be > 0");
  if (!actuation.valid()) throw ConfigError("actuation: speed and amplitude must be >= 0");
  if (!odometry.valid()) throw ConfigError("odometry: all parameters must be positive");
  if (!search.valid()) throw ConfigError("search: empty bounds or negative route distance");
  if (!optimizer.valid()) throw ConfigError("optimizer: invalid budget/fraction/scales");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
  if (!(d_voxel > 0.0)) throw ConfigError("d_voxel must be > 0");
  if (route.length() < speed * lidar.scan_period) {
    throw ConfigError("route shorter than one frame step");
  }
}

// ---------------------------------------------------------------------------
// JSON (de)serialization

namespace detail {

inline nlohmann::json vec3_to_json(const Vec3& v) {
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

inline Vec3 vec3_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(std::string(what) + ": expected [x, y, z]");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace detail

inline nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["config_version"] = cfg.config_version;

  nlohmann::json world;
  world["obstacles"] = nlohmann::json::array();
  for (const Aabb& box : cfg.world.obstacles) {
    world["obstacles"].push_back(
        {{"min", detail::vec3_to_json(box.min)}, {"max", detail::vec3_to_json(box.max)}});
  }
  if (cfg.world.ground_z) world["ground_z"] = *cfg.world.ground_z;
  j["world"] = world;

  nlohmann::json route;
  route["vertices"] = nlohmann::json::array();
  for (const Vec3& v : cfg.route.vertices) route["vertices"].push_back(detail::vec3_to_json(v));
  route["speed"] = cfg.speed;
  j["route"] = route;

  j["lidar"] = {{"horizontal_fov_deg", rad_to_deg(cfg.lidar.horizontal_fov)},
                {"vertical_fov_deg", rad_to_deg(cfg.lidar.vertical_fov)},
                {"azimuth_steps", cfg.lidar.azimuth_steps},
                {"elevation_channels", cfg.lidar.elevation_channels},
                {"max_range", cfg.lidar.max_range},
                {"scan_period", cfg.lidar.scan_period},
                {"range_noise_sigma", cfg.lidar.range_noise_sigma}};

  j["mirror"] = {{"center", detail::vec3_to_json(cfg.mirror.center)},
                 {"yaw_deg", rad_to_deg(cfg.mirror.yaw)},
                 {"width", cfg.mirror.width},
                 {"height", cfg.mirror.height}};

  j["actuation"] = {{"angular_speed_deg_per_s", rad_to_deg(cfg.actuation.angular_speed)},
                    {"amplitude_deg", rad_to_deg(cfg.actuation.amplitude)},
                    {"phase", cfg.actuation.phase}};

  j["odometry"] = {{"max_correspondence_dist", cfg.odometry.max_correspondence_dist},
                   {"map_voxel_size", cfg.odometry.map_voxel_size},
                   {"scan_voxel_size", cfg.odometry.scan_voxel_size},
                   {"max_iterations", cfg.odometry.max_iterations},
                   {"convergence_eps", cfg.odometry.convergence_eps},
                   {"local_map_radius", cfg.odometry.local_map_radius},
                   {"max_points_per_voxel", cfg.odometry.max_points_per_voxel}};

  j["search"] = {{"x_min", cfg.search.x_min},
                 {"x_max", cfg.search.x_max},
                 {"y_min", cfg.search.y_min},
                 {"y_max", cfg.search.y_max},
                 {"theta_min_deg", rad_to_deg(cfg.search.theta_min)},
                 {"theta_max_deg", rad_to_deg(cfg.search.theta_max)},
                 {"min_route_distance", cfg.search.min_route_distance}};

  j["optimizer"] = {
      {"budget", cfg.optimizer.budget},
      {"strategy", cfg.optimizer.strategy == OptimizerStrategy::PureRandom ? "pure_random"
                                                                           : "random_then_refine"},
      {"refine_fraction", cfg.optimizer.refine_fraction},
      {"sigma_x", cfg.optimizer.sigma_x},
      {"sigma_y", cfg.optimizer.sigma_y},
      {"sigma_theta_deg", rad_to_deg(cfg.optimizer.sigma_theta)}};

  j["objective"] = {{"alpha", cfg.alpha}, {"d_voxel", cfg.d_voxel}};
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  return j;
}

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig cfg;
  try {
    cfg.config_version = j.value("config_version", 1);

    if (j.contains("world")) {
      const auto& world = j.at("world");
      for (const auto& box : world.value("obstacles", nlohmann::json::array())) {
        Aabb b;
        b.min = detail::vec3_from_json(box.at("min"), "world.obstacles.min");
        b.max = detail::vec3_from_json(box.at("max"), "world.obstacles.max");
        cfg.world.obstacles.push_back(b);
      }
      if (world.contains("ground_z")) cfg.world.ground_z = world.at("ground_z").get<double>();
    }

    if (j.contains("route")) {
      const auto& route = j.at("route");
      for (const auto& v : route.value("vertices", nlohmann::json::array())) {
        cfg.route.vertices.push_back(detail::vec3_from_json(v, "route.vertices"));
      }
      cfg.speed = route.value("speed", cfg.speed);
    }

    if (j.contains("lidar")) {
      const auto& l = j.at("lidar");
      cfg.lidar.horizontal_fov =
          deg_to_rad(l.value("horizontal_fov_deg", rad_to_deg(cfg.lidar.horizontal_fov)));
      cfg.lidar.vertical_fov =
          deg_to_rad(l.value("vertical_fov_deg", rad_to_deg(cfg.lidar.vertical_fov)));
      cfg.lidar.azimuth_steps = l.value("azimuth_steps", cfg.lidar.azimuth_steps);
      cfg.lidar.elevation_channels = l.value("elevation_channels", cfg.lidar.elevation_channels);
      cfg.lidar.max_range = l.value("max_range", cfg.lidar.max_range);
      cfg.lidar.scan_period = l.value("scan_period", cfg.lidar.scan_period);
      cfg.lidar.range_noise_sigma = l.value("range_noise_sigma", cfg.lidar.range_noise_sigma);
    }

    if (j.contains("mirror")) {
      const auto& m = j.at("mirror");
      if (m.contains("center")) cfg.mirror.center = detail::vec3_from_json(m.at("center"), "mirror.center");
      cfg.mirror.yaw = deg_to_rad(m.value("yaw_deg", rad_to_deg(cfg.mirror.yaw)));
      cfg.mirror.width = m.value("width", cfg.mirror.width);
      cfg.mirror.height = m.value("height", cfg.mirror.height);
    }

    if (j.contains("actuation")) {
      const auto& a = j.at("actuation");
      cfg.actuation.angular_speed =
          deg_to_rad(a.value("angular_speed_deg_per_s", rad_to_deg(cfg.actuation.angular_speed)));
      cfg.actuation.amplitude =
          deg_to_rad(a.value("amplitude_deg", rad_to_deg(cfg.actuation.amplitude)));
      cfg.actuation.phase = a.value("phase", cfg.actuation.phase);
    }

    if (j.contains("odometry")) {
      const auto& o = j.at("odometry");
      cfg.odometry.max_correspondence_dist =
          o.value("max_correspondence_dist", cfg.odometry.max_correspondence_dist);
      cfg.odometry.map_voxel_size = o.value("map_voxel_size", cfg.odometry.map_voxel_size);
      cfg.odometry.scan_voxel_size = o.value("scan_voxel_size", cfg.odometry.scan_voxel_size);
      cfg.odometry.max_iterations = o.value("max_iterations", cfg.odometry.max_iterations);
      cfg.odometry.convergence_eps = o.value("convergence_eps", cfg.odometry.convergence_eps);
      cfg.odometry.local_map_radius = o.value("local_map_radius", cfg.odometry.local_map_radius);
      cfg.odometry.max_points_per_voxel =
          o.value("max_points_per_voxel", cfg.odometry.max_points_per_voxel);
    }

    if (j.contains("search")) {
      const auto& s = j.at("search");
      cfg.search.x_min = s.value("x_min", cfg.search.x_min);
      cfg.search.x_max = s.value("x_max", cfg.search.x_max);
      cfg.search.y_min = s.value("y_min", cfg.search.y_min);
      cfg.search.y_max = s.value("y_max", cfg.search.y_max);
      cfg.search.theta_min = deg_to_rad(s.value("theta_min_deg", rad_to_deg(cfg.search.theta_min)));
      cfg.search.theta_max = deg_to_rad(s.value("theta_max_deg", rad_to_deg(cfg.search.theta_max)));
      cfg.search.min_route_distance = s.value("min_route_distance", cfg.search.min_route_distance);
    }

    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      cfg.optimizer.budget = o.value("budget", cfg.optimizer.budget);
      const std::string strategy = o.value("strategy", std::string("random_then_refine"));
      if (strategy == "random_then_refine") {
        cfg.optimizer.strategy = OptimizerStrategy::RandomThenRefine;
      } else if (strategy == "pure_random") {
        cfg.optimizer.strategy = OptimizerStrategy::PureRandom;
      } else {
        throw ConfigError("optimizer.strategy: expected random_then_refine or pure_random");
      }
      cfg.optimizer.refine_fraction = o.value("refine_fraction", cfg.optimizer.refine_fraction);
      cfg.optimizer.sigma_x = o.value("sigma_x", cfg.optimizer.sigma_x);
      cfg.optimizer.sigma_y = o.value("sigma_y", cfg.optimizer.sigma_y);
      cfg.optimizer.sigma_theta =
          deg_to_rad(o.value("sigma_theta_deg", rad_to_deg(cfg.optimizer.sigma_theta)));
    }

    if (j.contains("objective")) {
      const auto& o = j.at("objective");
      cfg.alpha = o.value("alpha", cfg.alpha);
      cfg.d_voxel = o.value("d_voxel", cfg.d_voxel);
    }

    cfg.seed = j.value("seed", cfg.seed);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  return cfg;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  ScenarioConfig cfg = scenario_from_json(j);
  cfg.validate();
  return cfg;
}

inline void save_scenario(const std::filesystem::path& path, const ScenarioConfig& cfg) {
  std::ofstream out = open_output(path);
  out << scenario_to_json(cfg).dump(2) << '\n';
  if (!out) throw IoError("cannot write config: " + path.string());
}

/// FNV-1a over the canonical dump, excluding the output directory (moving
/// artifacts must not change the scenario identity).
inline std::uint64_t scenario_hash(const ScenarioConfig& cfg) {
  nlohmann::json j = scenario_to_json(cfg);
  j.erase("out_dir");
  const std::string dump = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Default bench scenario

/// Straight 40 m corridor: side walls, an end wall closing the view,
/// pillars and crates for registration texture, ground plane, sensor at
/// 1.2 m height moving at 2 m/s. The nominal mirror leans against the left
/// side 2 m off the route, facing it.
inline ScenarioConfig default_scenario() {
  ScenarioConfig cfg;

  cfg.world.ground_z = 0.0;
  auto box = [&](double x0, double y0, double z0, double x1, double y1, double z1) {
    cfg.world.obstacles.push_back({Vec3(x0, y0, z0), Vec3(x1, y1, z1)});
  };
  box(-10.0, 6.0, 0.0, 55.0, 6.4, 4.0);     // left wall
  box(-10.0, -6.4, 0.0, 55.0, -6.0, 4.0);   // right wall
  box(50.0, -6.4, 0.0, 50.4, 6.4, 4.0);     // end wall
  // Structural ribs on both walls. Smooth parallel walls leave forward
  // translation unobservable to scan matching; the rib faces pin it down.
  for (double x = 2.0; x <= 46.0; x += 4.0) box(x - 0.15, 5.7, 0.0, x + 0.15, 6.0, 4.0);
  for (double x = 0.0; x <= 48.0; x += 4.0) box(x - 0.15, -6.0, 0.0, x + 0.15, -5.7, 4.0);
  // Pillars, alternating sides.
  for (double x : {8.0, 24.0, 40.0}) box(x - 0.2, 4.3, 0.0, x + 0.2, 4.7, 3.0);
  for (double x : {16.0, 32.0}) box(x - 0.2, -4.7, 0.0, x + 0.2, -4.3, 3.0);
  // Crates, clustered in the first half of the corridor.
  box(9.4, -4.2, 0.0, 10.6, -3.0, 1.2);
  box(13.4, 2.8, 0.0, 14.6, 4.0, 1.2);
  box(17.4, -4.0, 0.0, 18.6, -2.8, 1.2);
  box(21.4, 3.0, 0.0, 22.6, 4.2, 1.2);

  cfg.route.vertices = {Vec3(0.0, 0.0, 1.2), Vec3(40.0, 0.0, 1.2)};
  cfg.speed = 2.0;

  cfg.mirror.center = Vec3(12.0, 2.0, 1.2);
  cfg.mirror.yaw = deg_to_rad(-90.0);  // normal faces the route

  cfg.search.x_min = 2.0;
  cfg.search.x_max = 38.0;
  cfg.search.y_min = -5.5;
  cfg.search.y_max = 5.5;
  cfg.search.theta_min = deg_to_rad(-180.0);
  cfg.search.theta_max = deg_to_rad(180.0);
  cfg.search.min_route_distance = 1.5;

  return cfg;
}

}  // namespace mirrorbench

#endif  // MIRRORBENCH_SCENARIO_HPP
