#include <gtest/gtest.h>

#include <cmath>

#include "trustbeta/env.hpp"
#include "trustbeta/errors.hpp"

using namespace trustbeta;

namespace {

// Commands a fixed absolute position with a fixed variance.
class ConstantPolicy : public Policy {
 public:
  ConstantPolicy(Vec3 target, double variance) : target_(target), variance_(variance) {}
  ActionDistribution act(const EnvState&) const override { return {target_, variance_}; }

 private:
  Vec3 target_;
  double variance_;
};

}  // namespace

TEST(TaskConfig, DefaultsValidateAndCapStep) {
  const TaskConfig c = TaskConfig::defaults();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.horizon, 20);
  const double straight = norm(c.target - c.start_region.center());
  EXPECT_NEAR(c.max_step, 1.5 * straight / 20, 1e-15);
}

TEST(TaskConfig, InvalidGeometryIsAConfigError) {
  TaskConfig c = TaskConfig::defaults();
  c.target = {2, 0.5, 0.5};
  EXPECT_THROW(c.validate(), ConfigError);
  c = TaskConfig::defaults();
  c.horizon = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TaskConfig::defaults();
  c.success_radius = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Observe, TargetGivesZeroDisplacement) {
  const TaskConfig c = TaskConfig::defaults();
  const EnvState s = observe(c.target, c);
  EXPECT_EQ(s.ee_to_target, (Vec3{0, 0, 0}));
  EXPECT_EQ(position_of(s, c), c.target);
}

TEST(Observe, ObstacleSurfaceGivesZeroDistance) {
  const TaskConfig c = TaskConfig::defaults();
  const Vec3 p = c.obstacle.center + Vec3{c.obstacle.radius, 0, 0};
  EXPECT_NEAR(observe(p, c).dist_obstacle, 0.0, 1e-15);
}

TEST(Observe, DistanceFormulaByHand) {
  TaskConfig c = TaskConfig::defaults();
  c.target = {0, 0, 0};
  const Vec3 p = c.obstacle.center + (c.obstacle.radius + 1) * Vec3{0, 0, 1};
  const EnvState s = observe(p, c);
  EXPECT_NEAR(s.dist_obstacle, 1.0, 1e-12);
  EXPECT_NEAR(s.height, p[2], 0);
  EXPECT_EQ(s.ee_to_target, (Vec3{-p[0], -p[1], -p[2]}));
}

TEST(Reset, DegenerateStartRegionIsExact) {
  TaskConfig c = TaskConfig::defaults();
  const Vec3 p{0.1, 0.4, 0.3};
  c.start_region = {p, p};
  Rng rng(1);
  const EnvState s = reset(c, rng);
  EXPECT_EQ(s, observe(p, c));
}

TEST(Reset, StartsStayInsideRegionAndOutsideObstacle) {
  const TaskConfig c = TaskConfig::defaults();
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 p = position_of(reset(c, rng), c);
    ASSERT_TRUE(c.start_region.contains(p, 1e-12));
    ASSERT_FALSE(c.obstacle.contains(p));
  }
}

TEST(Reset, SameSeedSameStart) {
  const TaskConfig c = TaskConfig::defaults();
  Rng a(5), b(5);
  EXPECT_EQ(reset(c, a), reset(c, b));
}

TEST(Reset, RegionInsideObstacleIsAConfigError) {
  TaskConfig c = TaskConfig::defaults();
  c.start_region = {{0.48, 0.48, 0.18}, {0.52, 0.52, 0.22}};
  Rng rng(1);
  EXPECT_THROW(reset(c, rng), ConfigError);
}

TEST(Transition, CapsDisplacementAndIsPure) {
  const TaskConfig c = TaskConfig::defaults();
  const EnvState s = observe({0.1, 0.5, 0.3}, c);
  const EnvAction far{{0.9, 0.5, 0.3}};
  const EnvState a = transition(s, far, c);
  const EnvState b = transition(s, far, c);
  EXPECT_EQ(a, b);
  EXPECT_NEAR(norm(position_of(a, c) - position_of(s, c)), c.max_step, 1e-12);
  const EnvAction near{{0.11, 0.5, 0.3}};
  EXPECT_NEAR(position_of(transition(s, near, c), c)[0], 0.11, 1e-12);
}

TEST(Transition, RejectsBadActions) {
  const TaskConfig c = TaskConfig::defaults();
  const EnvState s = observe({0.1, 0.5, 0.3}, c);
  EXPECT_THROW(transition(s, {{NAN, 0.5, 0.3}}, c), DomainError);
  EXPECT_THROW(transition(s, {{0.1, 1.5, 0.3}}, c), DomainError);
}

TEST(Rollout, DeterministicAndChained) {
  const TaskConfig c = TaskConfig::defaults();
  const ConstantPolicy policy(c.target, 0.01);
  Rng rng(2);
  const EnvState start = reset(c, rng);
  Rng r1(3), r2(3);
  const Trajectory a = rollout(policy, start, c, r1, false);
  const Trajectory b = rollout(policy, start, c, r2, false);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.steps.size(), 20u);
  EXPECT_EQ(a.steps.front().state, start);
  for (std::size_t t = 0; t + 1 < a.steps.size(); ++t) {
    EXPECT_EQ(a.steps[t + 1].state, transition(a.steps[t].state, a.steps[t].action, c));
  }
}

TEST(Rollout, VanishingNoiseMatchesDeterministic) {
  const TaskConfig c = TaskConfig::defaults();
  const ConstantPolicy sharp(c.target, 1e-300);
  Rng rng(2);
  const EnvState start = reset(c, rng);
  const Trajectory det = rollout(sharp, start, c, rng, false);
  const Trajectory sto = rollout(sharp, start, c, rng, true);
  ASSERT_EQ(det.steps.size(), sto.steps.size());
  for (std::size_t t = 0; t < det.steps.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(det.steps[t].action.position[k], sto.steps[t].action.position[k], 1e-12);
    }
  }
}

TEST(Rollout, StochasticActionsStayInWorkspace) {
  const TaskConfig c = TaskConfig::defaults();
  const ConstantPolicy wide(c.target, 4.0);
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const Trajectory t = rollout(wide, reset(c, rng), c, rng, true);
    for (const Step& s : t.steps) {
      ASSERT_TRUE(c.workspace.contains(s.action.position));
      ASSERT_GE(s.state.dist_obstacle, 0.0);
      ASSERT_GE(s.state.height, 0.0);
    }
  }
}

TEST(SynthDemo, NoiselessDemoReachesTargetAvoidingObstacle) {
  const TaskConfig c = TaskConfig::defaults();
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    const Trajectory d = synth_demo(reset(c, rng), c, rng, 0.0);
    ASSERT_EQ(d.steps.size(), 20u);
    EXPECT_EQ(d.source, TrajectorySource::kHumanDemo);
    EXPECT_TRUE(task_success(d, c));
    double closest = 1e9;
    for (const Step& s : d.steps) closest = std::min(closest, s.state.dist_obstacle);
    const EnvState last = transition(d.steps.back().state, d.steps.back().action, c);
    closest = std::min(closest, last.dist_obstacle);
    EXPECT_GT(closest, 0.0);
  }
}

TEST(SynthDemo, NoisyCorpusRespectsHorizonAndBounds) {
  const TaskConfig c = TaskConfig::defaults();
  Rng rng(30);
  for (int i = 0; i < 30; ++i) {
    const Trajectory d = synth_demo(reset(c, rng), c, rng, 0.01);
    ASSERT_EQ(d.steps.size(), 20u);
    for (const Step& s : d.steps) {
      EXPECT_TRUE(c.workspace.contains(s.action.position));
      EXPECT_TRUE(c.workspace.contains(position_of(s.state, c), 1e-12));
    }
  }
}

TEST(SynthDemo, InfeasibleStepCapIsAConfigError) {
  TaskConfig c = TaskConfig::defaults();
  c.max_step = 0.005;
  Rng rng(1);
  EXPECT_THROW(synth_demo(reset(c, rng), c, rng, 0.0), ConfigError);
}

TEST(TaskSuccess, ByFinalDistance) {
  const TaskConfig c = TaskConfig::defaults();
  auto ending_at = [&](const Vec3& p) {
    Trajectory t;
    Step s;
    s.state = observe(p, c);
    s.action.position = p;
    t.steps.push_back(s);
    return t;
  };
  EXPECT_TRUE(task_success(ending_at(c.target), c));
  EXPECT_FALSE(task_success(ending_at(c.target - Vec3{2 * c.success_radius, 0, 0}), c));
  EXPECT_FALSE(task_success(Trajectory{}, c));
}
