#pragma once

#include "trustbeta/rng.hpp"
#include "trustbeta/types.hpp"

namespace trustbeta {

struct Box {
  Vec3 min{};
  Vec3 max{};

  bool contains(const Vec3& p, double tol = 0.0) const;
  Vec3 clamp(const Vec3& p) const;
  Vec3 center() const { return 0.5 * (min + max); }
  bool operator==(const Box&) const = default;
};

struct Sphere {
  Vec3 center{};
  double radius = 0.0;

  double surface_distance(const Vec3& p) const;  // clamped at 0 inside
  bool contains(const Vec3& p) const;            // strict interior
  bool operator==(const Sphere&) const = default;
};

// Geometry of the tile-transport task and its fixed horizon.
struct TaskConfig {
  Box workspace;
  Sphere obstacle;
  Vec3 target{};
  Box start_region;
  double success_radius = 0.05;
  double max_step = 0.0;  // per-timestep displacement cap
  int horizon = 20;

  // Desk-scale default geometry. The step cap is 1.5x the straight-line
  // distance from the start-region center to the target, divided by T.
  static TaskConfig defaults();
  static double default_max_step(const Box& start_region, const Vec3& target,
                                 int horizon);

  // Throws ConfigError on any violated invariant.
  void validate() const;
  bool operator==(const TaskConfig&) const = default;
};

// End-effector position encoded by a state under `config`.
Vec3 position_of(const EnvState& state, const TaskConfig& config);
EnvState observe(const Vec3& position, const TaskConfig& config);

EnvState reset(const TaskConfig& config, Rng& rng);

// Moves toward the commanded position by at most max_step. Pure.
EnvState transition(const EnvState& state, const EnvAction& action,
                    const TaskConfig& config);

// Isotropic Gaussian action distribution of a policy at one state.
struct ActionDistribution {
  Vec3 mean{};
  double variance = 1.0;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual ActionDistribution act(const EnvState& state) const = 0;
};

// Runs exactly config.horizon steps. Stochastic rollouts sample each action
// from the policy; sampled and mean actions are clipped to the workspace
// before being recorded.
Trajectory rollout(const Policy& policy, const EnvState& start,
                   const TaskConfig& config, Rng& rng, bool stochastic);

// Uniformly random commanded positions in the workspace at every step.
Trajectory random_rollout(const EnvState& start, const TaskConfig& config,
                          Rng& rng);

// Expert demonstration: start to target around the obstacle, plus optional
// Gaussian jitter of scale `noise` on every waypoint.
Trajectory synth_demo(const EnvState& start, const TaskConfig& config,
                      Rng& rng, double noise);

bool task_success(const Trajectory& trajectory, const TaskConfig& config);

}  // namespace trustbeta
