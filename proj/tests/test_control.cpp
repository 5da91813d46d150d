#include "droedl/control.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace droedl;
using namespace droedl::control;
using evidential::NIGParams;
using evidential::SurrogateSet;

namespace {

MPCConfig base_config() {
    MPCConfig cfg;
    cfg.goal = {4.0, 0.0};
    cfg.seed = 99;
    cfg.ego_radius = 0.2;
    return cfg;
}

robust::ObstacleModel square_obstacle(double x, double y, double half, double var_lo, double var_hi,
                                      double radius) {
    robust::ObstacleModel m;
    m.radius_obs = radius;
    for (double g : {x, y}) {
        SurrogateSet s;
        s.gamma = g;
        s.mu_min = g - half;
        s.mu_max = g + half;
        s.var_min = var_lo;
        s.var_max = var_hi;
        m.axes.push_back({NIGParams(g, 1, 2, 1), s, evidential::Confidence(0.9)});
    }
    return m;
}

std::vector<Control> zeros(std::size_t n) { return std::vector<Control>(n); }

} // namespace

TEST(Dynamics, Examples) {
    const State rest{{1, 2}, {0, 0}};
    const auto a = step_dynamics(rest, Control{}, 0.1);
    EXPECT_EQ(a.position, rest.position);
    EXPECT_EQ(a.velocity, rest.velocity);

    const auto b = step_dynamics(State{{0, 0}, {1, 0}}, Control{}, 0.1);
    EXPECT_DOUBLE_EQ(b.position[0], 0.1);
    EXPECT_DOUBLE_EQ(b.position[1], 0.0);

    const auto c = step_dynamics(State{}, Control{{2, 0}}, 0.5);
    EXPECT_DOUBLE_EQ(c.position[0], 0.25);
    EXPECT_DOUBLE_EQ(c.velocity[0], 1.0);
}

TEST(Config, Validation) {
    EXPECT_NO_THROW(base_config().validate());
    auto bad = base_config();
    bad.n_elite = bad.n_samples;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = base_config();
    bad.horizon = 0;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = base_config();
    bad.dt = 0;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = base_config();
    bad.w_goal = -1;
    EXPECT_THROW(bad.validate(), DomainError);
    bad = base_config();
    bad.u_max = 0;
    EXPECT_THROW(bad.validate(), DomainError);
}

TEST(Rollout, CostAndFeasibility) {
    auto cfg = base_config();
    const State at_goal{cfg.goal, {0, 0}};
    const auto p = rollout(at_goal, zeros(cfg.horizon), cfg, std::span<const robust::ObstacleModel>());
    EXPECT_EQ(p.cost, 0.0);
    EXPECT_TRUE(p.feasible);
    EXPECT_EQ(p.states.size(), cfg.horizon + 1);

    // hand-summed cost of a coasting rollout
    const State s0{{0, 0}, {1, 0}};
    const auto q = rollout(s0, zeros(cfg.horizon), cfg, std::span<const robust::ObstacleModel>());
    double want = 0;
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        const double x = 0.1 * static_cast<double>(t);
        want += cfg.w_goal * (x - 4) * (x - 4);
    }
    const double xt = 0.1 * static_cast<double>(cfg.horizon);
    want += cfg.w_terminal * (xt - 4) * (xt - 4);
    EXPECT_NEAR(q.cost, want, 1e-10);

    EXPECT_THROW(rollout(s0, zeros(3), cfg, std::span<const robust::ObstacleModel>()), DomainError);
}

TEST(Rollout, PassingThroughTightObstacleIsInfeasible) {
    auto cfg = base_config();
    const robust::ObstacleModel obs[1] = {square_obstacle(1.0, 0.0, 0.01, 1e-4, 2e-4, 0.2)};
    const State s0{{0, 0}, {1, 0}};
    const auto p = rollout(s0, zeros(cfg.horizon), cfg, std::span<const robust::ObstacleModel>(obs));
    EXPECT_FALSE(p.feasible);
    // a horizon that ends before the obstacle is feasible
    cfg.horizon = 5;
    const auto q = rollout(s0, zeros(cfg.horizon), cfg, std::span<const robust::ObstacleModel>(obs));
    EXPECT_TRUE(q.feasible);
}

TEST(Braking, DecelerationProfile) {
    auto cfg = base_config();
    const auto u = braking_controls(State{{0, 0}, {1, -0.5}}, cfg);
    ASSERT_EQ(u.size(), cfg.horizon);
    State s{{0, 0}, {1, -0.5}};
    for (const auto& c : u) {
        EXPECT_LE(std::abs(c.accel[0]), cfg.u_max);
        s = step_dynamics(s, c, cfg.dt);
    }
    EXPECT_NEAR(s.velocity[0], 0.0, 1e-12);
    EXPECT_NEAR(s.velocity[1], 0.0, 1e-12);
}

TEST(SolveMpc, ApproachesGoalWithoutObstacles) {
    auto cfg = base_config();
    const State s0{{0, 0}, {0, 0}};
    const auto p = solve_mpc(s0, cfg, std::span<const robust::ObstacleModel>());
    ASSERT_TRUE(p.feasible);
    const double d0 = distance(s0.position, cfg.goal);
    const double dT = distance(p.states.back().position, cfg.goal);
    EXPECT_LE(dT, 0.5 * d0);
    for (const auto& u : p.controls) {
        EXPECT_LE(std::abs(u.accel[0]), cfg.u_max);
        EXPECT_LE(std::abs(u.accel[1]), cfg.u_max);
    }
}

TEST(SolveMpc, Deterministic) {
    auto cfg = base_config();
    const robust::ObstacleModel obs[1] = {square_obstacle(2.0, 0.0, 0.2, 0.01, 0.05, 0.3)};
    const State s0{{0, 0}, {0.5, 0}};
    const auto a = solve_mpc(s0, cfg, std::span<const robust::ObstacleModel>(obs));
    const auto b = solve_mpc(s0, cfg, std::span<const robust::ObstacleModel>(obs));
    ASSERT_EQ(a.controls.size(), b.controls.size());
    for (std::size_t t = 0; t < a.controls.size(); ++t)
        EXPECT_EQ(a.controls[t].accel, b.controls[t].accel);
    EXPECT_EQ(a.cost, b.cost);
    EXPECT_EQ(a.best_cost_trace, b.best_cost_trace);
    cfg.seed = 100;
    const auto c = solve_mpc(s0, cfg, std::span<const robust::ObstacleModel>(obs));
    EXPECT_NE(a.cost, c.cost);
}

TEST(SolveMpc, FeasiblePlanSatisfiesRobustBoundAtEveryState) {
    auto cfg = base_config();
    cfg.horizon = 30;
    const robust::ObstacleModel obs[1] = {square_obstacle(1.5, 0.0, 0.3, 0.01, 0.04, 0.3)};
    const State s0{{0, 0}, {0.8, 0}};
    const auto p = solve_mpc(s0, cfg, std::span<const robust::ObstacleModel>(obs));
    ASSERT_TRUE(p.feasible);
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        const robust::EgoDisc ego{{p.states[t].position[0], p.states[t].position[1]}, cfg.ego_radius};
        EXPECT_TRUE(robust::constraint_satisfied(ego, obs[0], cfg.epsilon)) << "t=" << t;
        EXPECT_LE(robust::dr_loss_upper_bound(ego, obs[0], cfg.epsilon), 0.0);
    }
}

TEST(SolveMpc, BestCostTraceIsMonotone) {
    auto cfg = base_config();
    cfg.n_iters = 8;
    const robust::ObstacleModel obs[1] = {square_obstacle(2.0, 0.3, 0.2, 0.01, 0.05, 0.3)};
    const auto p = solve_mpc(State{{0, 0}, {0, 0}}, cfg, std::span<const robust::ObstacleModel>(obs));
    ASSERT_EQ(p.best_cost_trace.size(), cfg.n_iters);
    for (std::size_t i = 1; i < p.best_cost_trace.size(); ++i)
        EXPECT_LE(p.best_cost_trace[i], p.best_cost_trace[i - 1]);
    EXPECT_EQ(p.cost, p.best_cost_trace.back());
}

TEST(SolveMpc, SurroundedEgoFallsBackToBraking) {
    auto cfg = base_config();
    const robust::ObstacleModel obs[1] = {square_obstacle(0.0, 0.0, 0.5, 0.1, 0.5, 5.0)};
    const State s0{{0.1, 0}, {0.7, 0.2}};
    const auto p = solve_mpc(s0, cfg, std::span<const robust::ObstacleModel>(obs));
    EXPECT_FALSE(p.feasible);
    const auto brake = braking_controls(s0, cfg);
    for (std::size_t t = 0; t < brake.size(); ++t)
        EXPECT_EQ(p.controls[t].accel, brake[t].accel);
    for (double c : p.best_cost_trace)
        EXPECT_TRUE(std::isinf(c));
}

TEST(SolveMpc, WarmStartIsUsedAsMean) {
    auto cfg = base_config();
    cfg.n_iters = 1;
    // sample 0 is the warm start itself, so the result is never worse than it
    const State s0{{0, 0}, {0, 0}};
    const auto seek = goal_seeking_controls(s0, cfg);
    const auto p = solve_mpc(s0, cfg, std::span<const robust::ObstacleModel>(), seek);
    const auto r = rollout(s0, seek, cfg, std::span<const robust::ObstacleModel>());
    EXPECT_LE(p.cost, r.cost);
}
