#include "llloc/scenarios.hpp"

#include "llloc/errors.hpp"

#include <cmath>

namespace llloc {

namespace sl = scenario_layout;

SensorSpec scenario_sensor() {
  SensorSpec s;
  s.fov_mode = FovMode::Wide;
  s.theta_l = 2.0 * M_PI;
  s.horizontal_rays = 360;
  s.vertical_rays = 16;
  s.elevation_min = -15.0 * M_PI / 180.0;
  s.elevation_max = 15.0 * M_PI / 180.0;
  s.d_min = 0.5;
  s.d_max = 30.0;
  s.scan_rate = 10.0;
  s.imu_rate = 200.0;
  s.range_noise_sigma = 0.01;
  s.accel_noise_sigma = 0.01;
  s.gyro_noise_sigma = 0.001;
  return s;
}

WorldSpec scenario_world(std::uint64_t seed) {
  const double z0 = sl::kFloorZ, z1 = sl::kCeilingZ, W = sl::kWidthY;
  const double X = sl::kHallBEndX, D = sl::kDividerX;
  WorldSpec w;
  w.seed = seed;
  auto& s = w.surfaces;
  s.push_back(Surface::slab("floor", 0.0, 0.0, X, W, z0));
  s.push_back(Surface::slab("ceiling", 0.0, 0.0, X, W, z1));
  s.push_back(Surface::wall("wall_south", 0.0, 0.0, X, 0.0, z0, z1));
  s.push_back(Surface::wall("wall_north", 0.0, W, X, W, z0, z1));
  s.push_back(Surface::wall("wall_west", 0.0, 0.0, 0.0, W, z0, z1));
  s.push_back(Surface::wall("wall_east", X, 0.0, X, W, z0, z1));
  s.push_back(Surface::wall("divider_south", D, 0.0, D, 9.0, z0, z1));
  s.push_back(Surface::wall("divider_north", D, 11.0, D, W, z0, z1));
  s.push_back(Surface::wall("divider_lintel", D, 9.0, D, 11.0, 3.0, z1));
  s.push_back(Surface::wall(sl::kDoor, D, 9.0, D, 11.0, z0, 3.0));
  s.push_back(Surface::wall(sl::kPartition, 12.0, 0.0, 12.0, 4.0, z0, z1));

  auto pillar = [&](const char* name, double x, double y) {
    s.push_back(Surface::box(name, Point3(x - 0.3, y - 0.3, z0), Point3(x + 0.3, y + 0.3, z1)));
  };
  pillar("pillar_a1", 8.0, 11.5);
  pillar("pillar_a2", 16.0, 11.0);
  pillar("pillar_a3", 22.0, 11.5);
  pillar("pillar_a4", 20.0, 2.0);
  pillar("pillar_b1", 36.0, 6.0);
  pillar("pillar_b2", 36.0, 14.0);
  pillar("pillar_b3", 44.0, 10.5);
  pillar("pillar_b4", 50.0, 5.0);
  pillar("pillar_b5", 50.0, 15.0);

  // low clutter for vertical structure
  s.push_back(Surface::box("crate_a1", Point3(2.0, 18.0, z0), Point3(3.5, 19.2, z0 + 1.0)));
  s.push_back(Surface::box("crate_a2", Point3(26.5, 1.0, z0), Point3(28.0, 2.5, z0 + 1.5)));
  s.push_back(Surface::box("crate_b1", Point3(40.0, 18.0, z0), Point3(42.0, 19.0, z0 + 1.2)));
  s.push_back(Surface::box("crate_b2", Point3(53.0, 1.0, z0), Point3(54.2, 3.0, z0 + 0.8)));
  return w;
}

std::vector<std::string> scenario_names() {
  return {"mapped_static", "changed_wall", "unmapped_loop", "reentry"};
}

SplineTrajectory planar_path(const std::vector<std::pair<double, double>>& xy, double segment_time,
                             double t0) {
  std::vector<Waypoint> wps;
  wps.reserve(xy.size());
  double last_yaw = 0.0;
  for (std::size_t i = 0; i < xy.size(); ++i) {
    const std::size_t prev = i == 0 ? 0 : i - 1;
    const std::size_t next = i + 1 == xy.size() ? i : i + 1;
    const double dx = xy[next].first - xy[prev].first;
    const double dy = xy[next].second - xy[prev].second;
    const double yaw = (std::abs(dx) + std::abs(dy) > 1e-9) ? std::atan2(dy, dx) : last_yaw;
    wps.push_back({Point3(xy[i].first, xy[i].second, sl::kSensorZ), yaw});
    last_yaw = yaw;
  }
  return SplineTrajectory(std::move(wps), segment_time, t0);
}

namespace {

using Path = std::vector<std::pair<double, double>>;

// Loop through hall A, clear of pillars and the partition.
const Path kHallALoop = {{4, 8},   {9, 7},   {14, 7.5}, {19, 6.5}, {25, 6},  {26, 11},
                         {25, 16}, {19, 16}, {13, 17},  {7, 16},   {3.5, 12}, {4, 8}};

Path concat(std::initializer_list<Path> parts) {
  Path out;
  for (const auto& p : parts) {
    for (const auto& q : p) {
      if (!out.empty() && out.back() == q) continue;
      out.push_back(q);
    }
  }
  return out;
}

SessionData session(const WorldSpec& world, const Path& path, const ScenarioOptions& o,
                    std::uint64_t stream, const std::string& name, const std::string& world_id) {
  const auto traj = planar_path(path, o.segment_time);
  return simulate_session(world, traj, o.sensor, o.seed * 1000003ULL + stream, name, world_id);
}

}  // namespace

Scenario make_scenario(const std::string& name, const ScenarioOptions& o) {
  Scenario sc;
  sc.name = name;
  sc.sensor = o.sensor;
  sc.prior_world = scenario_world(o.seed);

  // The prior survey walks the hall A loop twice in opposite directions.
  Path reverse_loop(kHallALoop.rbegin(), kHallALoop.rend());
  const Path survey = concat({kHallALoop, reverse_loop});

  if (name == "mapped_static") {
    sc.prior = session(sc.prior_world, survey, o, 1, "prior", "base");
    const Path test = {{5, 10}, {10, 8.5}, {15, 8.5}, {20, 8.5}, {25, 9},  {25.5, 14},
                       {20, 14.5}, {14, 14}, {10, 14.5}, {5, 15}, {4, 11}, {5, 10}};
    sc.test_worlds.push_back(sc.prior_world);
    sc.tests.push_back(session(sc.prior_world, test, o, 2, "test", "base"));
  } else if (name == "changed_wall") {
    sc.prior = session(sc.prior_world, survey, o, 1, "prior", "base");
    const WorldSpec moved = sc.prior_world.edited(
        {{SurfaceEdit::Op::Translate, sl::kPartition, {}, Vec3(sl::kPartitionShift, 0.0, 0.0)}});
    // Three passes along the partition side of the hall.
    const Path test = concat({kHallALoop, kHallALoop, kHallALoop});
    sc.test_worlds.push_back(moved);
    sc.tests.push_back(session(moved, test, o, 2, "test", "partition_moved"));
  } else if (name == "unmapped_loop" || name == "reentry") {
    sc.prior = session(sc.prior_world, survey, o, 1, "prior", "base");
    const WorldSpec open =
        sc.prior_world.edited({{SurfaceEdit::Op::Remove, sl::kDoor, {}, Vec3::Zero()}});
    Path test;
    if (name == "unmapped_loop") {
      test = {{8, 9},     {13, 9.5},  {18, 9},    {23, 9},    {27, 10},  {32, 10},
              {38, 10},   {42, 7},    {46, 4},    {52, 9},    {52, 14},  {47, 17},
              {41, 15.5}, {37, 10},   {32, 10},   {27, 10},   {22, 9},   {17, 8.5},
              {12, 9}};
    } else {
      test = {{10, 9}, {16, 8.5}, {22, 9}, {27, 10}, {32, 10}, {38, 10}, {43, 8},
              {47, 10}, {47, 10}, {47, 10}, {43, 12.5}, {38, 10}, {32, 10}, {27, 10},
              {22, 9}, {17, 8.5}, {12, 9}};
    }
    sc.test_worlds.push_back(open);
    sc.tests.push_back(session(open, test, o, 2, "test", "door_open"));
  } else {
    throw Error(ErrorCode::UnknownScenario, "unknown scenario: " + name);
  }
  return sc;
}

}  // namespace llloc
