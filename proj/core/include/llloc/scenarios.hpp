#pragma once

#include "llloc/simulator.hpp"

#include <string>
#include <vector>

namespace llloc {

/// Layout of the scenario world: two halls side by side, split by a wall at
/// x = kDividerX with a door. Hall A (x < kDividerX) is what prior sessions map.
namespace scenario_layout {
inline constexpr double kFloorZ = 0.5;
inline constexpr double kCeilingZ = 4.5;
inline constexpr double kSensorZ = 2.0;
inline constexpr double kDividerX = 29.5;
inline constexpr double kHallBEndX = 55.0;
inline constexpr double kWidthY = 20.0;
inline constexpr const char* kDoor = "door";
inline constexpr const char* kPartition = "partition";
inline constexpr double kPartitionShift = 1.0;  // m along +x in changed_wall
}  // namespace scenario_layout

/// Wide 16-beam sensor used by every scenario.
SensorSpec scenario_sensor();

struct ScenarioOptions {
  std::uint64_t seed = 1;
  SensorSpec sensor = scenario_sensor();
  // Seconds per spline segment; waypoints are ~5 m apart.
  double segment_time = 4.0;
};

/// Both halls with the door in place.
WorldSpec scenario_world(std::uint64_t seed = 0);

struct Scenario {
  std::string name;
  SensorSpec sensor;
  WorldSpec prior_world;
  SessionData prior;                // session used to build the prior map
  std::vector<WorldSpec> test_worlds;
  std::vector<SessionData> tests;   // sessions to localize against the prior
};

std::vector<std::string> scenario_names();

/// mapped_static, changed_wall, unmapped_loop or reentry. Throws UnknownScenario.
Scenario make_scenario(const std::string& name, const ScenarioOptions& options = {});

/// Spline through (x, y) points at sensor height, heading along the path.
/// Repeating a point makes the robot dwell there for one segment.
SplineTrajectory planar_path(const std::vector<std::pair<double, double>>& xy, double segment_time,
                             double t0 = 0.0);

}  // namespace llloc
