#include "trustbeta/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "trustbeta/errors.hpp"

namespace trustbeta {
namespace {

constexpr int kMaxResetAttempts = 100000;
constexpr double kViaClearance = 0.06;

// Smallest distance from `p` to the segment [a, b].
double segment_distance(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 ab = b - a;
  const double len2 = dot(ab, ab);
  double u = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return norm(a + u * ab - p);
}

double polyline_clearance(const std::vector<Vec3>& points, const Sphere& s) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < points.size(); ++i) {
    best = std::min(best, segment_distance(points[i - 1], points[i], s.center));
  }
  return best - s.radius;
}

// Start, optional via point, target. The via point sits on the far side of
// the obstacle from the straight path, preferring to pass over the top.
std::vector<Vec3> plan_path(const Vec3& start, const TaskConfig& config) {
  const Sphere& obstacle = config.obstacle;
  std::vector<Vec3> path = {start, config.target};
  if (polyline_clearance(path, obstacle) >= kViaClearance) return path;

  const Vec3 dir = config.target - start;
  const double len2 = dot(dir, dir);
  const Vec3 to_center = obstacle.center - start;
  const double u = len2 > 0.0 ? std::clamp(dot(to_center, dir) / len2, 0.0, 1.0)
                              : 0.0;
  Vec3 offset = (start + u * dir) - obstacle.center;
  const Vec3 up = {0.0, 0.0, 1.0};
  if (norm(offset) < 1e-9 || offset[2] < 0.0) offset = up;
  // Remove the along-path component so the detour is perpendicular.
  if (len2 > 0.0) offset = offset - (dot(offset, dir) / len2) * dir;
  if (norm(offset) < 1e-9) offset = up - (dot(up, dir) / len2) * dir;
  if (norm(offset) < 1e-9) offset = {0.0, 1.0, 0.0};
  offset = (1.0 / norm(offset)) * offset;

  double reach = obstacle.radius + kViaClearance;
  for (int attempt = 0; attempt < 40; ++attempt) {
    const Vec3 via = config.workspace.clamp(obstacle.center + reach * offset);
    std::vector<Vec3> candidate = {start, via, config.target};
    if (polyline_clearance(candidate, obstacle) > 0.25 * kViaClearance) {
      return candidate;
    }
    reach *= 1.1;
  }
  throw ConfigError("no obstacle-free demonstration path from start");
}

double path_length(const std::vector<Vec3>& path) {
  double total = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    total += norm(path[i] - path[i - 1]);
  }
  return total;
}

Vec3 point_at_arc_length(const std::vector<Vec3>& path, double s) {
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double seg = norm(path[i] - path[i - 1]);
    if (s <= seg || i + 1 == path.size()) {
      const double u = seg > 0.0 ? std::clamp(s / seg, 0.0, 1.0) : 1.0;
      return path[i - 1] + u * (path[i] - path[i - 1]);
    }
    s -= seg;
  }
  return path.back();
}

}  // namespace

bool Box::contains(const Vec3& p, double tol) const {
  for (int i = 0; i < 3; ++i) {
    if (p[i] < min[i] - tol || p[i] > max[i] + tol) return false;
  }
  return true;
}

Vec3 Box::clamp(const Vec3& p) const {
  return {std::clamp(p[0], min[0], max[0]), std::clamp(p[1], min[1], max[1]),
          std::clamp(p[2], min[2], max[2])};
}

double Sphere::surface_distance(const Vec3& p) const {
  return std::max(0.0, norm(p - center) - radius);
}

bool Sphere::contains(const Vec3& p) const { return norm(p - center) < radius; }

TaskConfig TaskConfig::defaults() {
  TaskConfig config;
  config.workspace = Box{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
  config.obstacle = Sphere{{0.5, 0.5, 0.2}, 0.12};
  config.target = {0.9, 0.5, 0.1};
  config.start_region = Box{{0.05, 0.3, 0.1}, {0.2, 0.7, 0.4}};
  config.success_radius = 0.05;
  config.horizon = 20;
  config.max_step =
      default_max_step(config.start_region, config.target, config.horizon);
  return config;
}

double TaskConfig::default_max_step(const Box& start_region, const Vec3& target,
                                    int horizon) {
  return 1.5 * norm(target - start_region.center()) / horizon;
}

void TaskConfig::validate() const {
  auto finite = [](const Vec3& v) { return all_finite(v); };
  if (!finite(workspace.min) || !finite(workspace.max) ||
      !finite(start_region.min) || !finite(start_region.max) ||
      !finite(obstacle.center) || !finite(target)) {
    throw ConfigError("task geometry must be finite");
  }
  for (int i = 0; i < 3; ++i) {
    if (!(workspace.min[i] < workspace.max[i])) {
      throw ConfigError("workspace box must have positive extent");
    }
    if (start_region.min[i] > start_region.max[i]) {
      throw ConfigError("start_region min exceeds max");
    }
  }
  if (workspace.min[2] < 0.0) {
    throw ConfigError("workspace must lie above the ground (z >= 0)");
  }
  if (!workspace.contains(start_region.min) ||
      !workspace.contains(start_region.max)) {
    throw ConfigError("start_region must lie inside the workspace");
  }
  if (!workspace.contains(target)) {
    throw ConfigError("target must lie inside the workspace");
  }
  if (!(obstacle.radius > 0.0) || !std::isfinite(obstacle.radius)) {
    throw ConfigError("obstacle radius must be positive");
  }
  if (norm(target - obstacle.center) <= obstacle.radius) {
    throw ConfigError("obstacle contains the target");
  }
  if (!(success_radius > 0.0) || !std::isfinite(success_radius)) {
    throw ConfigError("success radius must be positive");
  }
  if (!(max_step > 0.0) || !std::isfinite(max_step)) {
    throw ConfigError("max_step must be positive");
  }
  if (horizon < 1) throw ConfigError("horizon T must be >= 1");
}

Vec3 position_of(const EnvState& state, const TaskConfig& config) {
  return config.target - state.ee_to_target;
}

EnvState observe(const Vec3& position, const TaskConfig& config) {
  EnvState state;
  state.ee_to_target = config.target - position;
  state.dist_obstacle = config.obstacle.surface_distance(position);
  state.height = std::max(0.0, position[2]);
  return state;
}

EnvState reset(const TaskConfig& config, Rng& rng) {
  const Box& region = config.start_region;
  // A box lies inside a ball iff all of its corners do.
  bool all_inside = true;
  for (int corner = 0; corner < 8 && all_inside; ++corner) {
    const Vec3 p = {(corner & 1) ? region.max[0] : region.min[0],
                    (corner & 2) ? region.max[1] : region.min[1],
                    (corner & 4) ? region.max[2] : region.min[2]};
    all_inside = config.obstacle.contains(p);
  }
  if (all_inside) {
    throw ConfigError("start_region lies entirely inside the obstacle");
  }
  for (int attempt = 0; attempt < kMaxResetAttempts; ++attempt) {
    const Vec3 p = {rng.uniform(region.min[0], region.max[0]),
                    rng.uniform(region.min[1], region.max[1]),
                    rng.uniform(region.min[2], region.max[2])};
    if (!config.obstacle.contains(p)) return observe(p, config);
  }
  throw ConfigError("could not sample a start outside the obstacle");
}

EnvState transition(const EnvState& state, const EnvAction& action,
                    const TaskConfig& config) {
  if (!all_finite(action.position)) {
    throw DomainError("action must be finite");
  }
  if (!config.workspace.contains(action.position, 1e-12)) {
    throw DomainError("action lies outside the workspace");
  }
  const Vec3 current = position_of(state, config);
  Vec3 delta = action.position - current;
  const double length = norm(delta);
  if (length > config.max_step) delta = (config.max_step / length) * delta;
  return observe(current + delta, config);
}

Trajectory rollout(const Policy& policy, const EnvState& start,
                   const TaskConfig& config, Rng& rng, bool stochastic) {
  Trajectory trajectory;
  trajectory.source = TrajectorySource::kRobotRollout;
  trajectory.steps.reserve(config.horizon);
  EnvState state = start;
  for (int t = 0; t < config.horizon; ++t) {
    const ActionDistribution dist = policy.act(state);
    Vec3 command = dist.mean;
    if (stochastic) {
      if (!(dist.variance >= 0.0) || !std::isfinite(dist.variance)) {
        throw DomainError("policy variance must be finite and nonnegative");
      }
      const double sigma = std::sqrt(dist.variance);
      for (double& c : command) c += rng.normal(0.0, 1.0) * sigma;
    }
    if (!all_finite(command)) throw DomainError("policy produced non-finite action");
    const EnvAction action{config.workspace.clamp(command)};
    trajectory.steps.push_back({state, action});
    state = transition(state, action, config);
  }
  return trajectory;
}

Trajectory random_rollout(const EnvState& start, const TaskConfig& config,
                          Rng& rng) {
  Trajectory trajectory;
  trajectory.source = TrajectorySource::kRobotRollout;
  EnvState state = start;
  for (int t = 0; t < config.horizon; ++t) {
    const Box& w = config.workspace;
    const EnvAction action{{rng.uniform(w.min[0], w.max[0]),
                            rng.uniform(w.min[1], w.max[1]),
                            rng.uniform(w.min[2], w.max[2])}};
    trajectory.steps.push_back({state, action});
    state = transition(state, action, config);
  }
  return trajectory;
}

Trajectory synth_demo(const EnvState& start, const TaskConfig& config,
                      Rng& rng, double noise) {
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw DomainError("demo noise must be finite and nonnegative");
  }
  const Vec3 origin = position_of(start, config);
  const std::vector<Vec3> path = plan_path(origin, config);
  const double length = path_length(path);
  const int horizon = config.horizon;
  if (length > horizon * config.max_step) {
    throw ConfigError("target unreachable within T * max_step (path length " +
                      std::to_string(length) + ")");
  }
  // Arrive a little early when there is slack so the final steps teach the
  // policy to hold at the target.
  const int min_moving = static_cast<int>(std::ceil(0.75 * horizon));
  int moving = static_cast<int>(std::ceil(length / (0.95 * config.max_step)));
  moving = std::clamp(moving, std::min(min_moving, horizon), horizon);

  Trajectory trajectory;
  trajectory.source = TrajectorySource::kHumanDemo;
  trajectory.steps.reserve(horizon);
  EnvState state = start;
  for (int t = 1; t <= horizon; ++t) {
    const double s = length * std::min(1.0, static_cast<double>(t) / moving);
    Vec3 waypoint = point_at_arc_length(path, s);
    if (noise > 0.0) {
      for (double& c : waypoint) c += rng.normal(0.0, noise);
    }
    waypoint = config.workspace.clamp(waypoint);
    // Record the reachable command so demos obey the transition function.
    const Vec3 current = position_of(state, config);
    Vec3 delta = waypoint - current;
    const double step = norm(delta);
    if (step > config.max_step) delta = (config.max_step / step) * delta;
    const EnvAction action{config.workspace.clamp(current + delta)};
    trajectory.steps.push_back({state, action});
    state = transition(state, action, config);
  }
  return trajectory;
}

bool task_success(const Trajectory& trajectory, const TaskConfig& config) {
  if (trajectory.steps.empty()) return false;
  const Step& last = trajectory.steps.back();
  const EnvState final_state = transition(last.state, last.action, config);
  return norm(final_state.ee_to_target) <= config.success_radius;
}

}  // namespace trustbeta
