#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace trustbeta {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(double s, const Vec3& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline bool all_finite(const Vec3& a) {
  return std::isfinite(a[0]) && std::isfinite(a[1]) && std::isfinite(a[2]);
}

// Observation of the tile-transport task. All distances in meters.
struct EnvState {
  Vec3 ee_to_target{};        // target - end effector
  double dist_obstacle = 0.0;  // clearance to the obstacle surface, >= 0
  double height = 0.0;         // end effector height above the ground, >= 0

  static constexpr std::size_t kFeatureCount = 5;

  std::array<double, kFeatureCount> features() const {
    return {ee_to_target[0], ee_to_target[1], ee_to_target[2], dist_obstacle,
            height};
  }
  bool valid() const {
    return all_finite(ee_to_target) && std::isfinite(dist_obstacle) &&
           std::isfinite(height) && dist_obstacle >= 0.0 && height >= 0.0;
  }
  bool operator==(const EnvState&) const = default;
};

// Commanded absolute end-effector position.
struct EnvAction {
  Vec3 position{};

  bool operator==(const EnvAction&) const = default;
};

struct Step {
  EnvState state;
  EnvAction action;

  bool operator==(const Step&) const = default;
};

enum class TrajectorySource { kHumanDemo, kRobotRollout };

std::string_view to_string(TrajectorySource source);
TrajectorySource trajectory_source_from_string(std::string_view name);

struct Trajectory {
  std::vector<Step> steps;
  TrajectorySource source = TrajectorySource::kRobotRollout;

  std::size_t length() const { return steps.size(); }
  bool operator==(const Trajectory&) const = default;
};

// A self-reported trust value. `percent` is on [0, 100].
struct LikertLevel {
  int level = 4;
  double percent = 50.0;

  bool operator==(const LikertLevel&) const = default;
};

// Mean and variance of the Beta trust distribution at one timestep.
struct TrustEstimate {
  double mean = 0.5;
  double variance = 0.0;

  bool operator==(const TrustEstimate&) const = default;
};

// Record of one task execution: what the robot did, how it was scored, what
// the model estimated, and what the co-worker reported afterwards.
struct ExperimentLog {
  std::int64_t experiment_id = 0;
  Trajectory trajectory;
  std::vector<double> rewards;
  std::vector<TrustEstimate> trust_estimates;
  std::optional<LikertLevel> report;
  bool success_flag = false;
  // End-of-episode trust of the synthetic co-worker, when one generated the
  // report. Never used for fitting.
  std::optional<double> oracle_trust;

  bool operator==(const ExperimentLog&) const = default;
};

}  // namespace trustbeta
