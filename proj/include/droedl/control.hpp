#pragma once

// Double-integrator dynamics, quadratic tracking cost and a cross-entropy
// MPC solver that keeps every horizon state inside a set of loss constraints.

#include "droedl/error.hpp"
#include "droedl/rng.hpp"
#include "droedl/robust.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace droedl::control {

using Vec2 = std::array<double, 2>;

struct State {
    Vec2 position{0.0, 0.0};
    Vec2 velocity{0.0, 0.0};
};

struct Control {
    Vec2 accel{0.0, 0.0};
};

inline double squared_norm(const Vec2& v) { return v[0] * v[0] + v[1] * v[1]; }
inline double distance(const Vec2& a, const Vec2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

struct MPCConfig {
    std::size_t horizon = 20;
    double dt = 0.1;
    std::size_t n_samples = 128;
    std::size_t n_elite = 16;
    std::size_t n_iters = 4;
    double u_max = 3.0;
    double w_goal = 1.0;
    double w_effort = 0.05;
    double w_terminal = 10.0;
    risk::RiskLevel epsilon{0.95};
    std::uint64_t seed = 0;
    Vec2 goal{0.0, 0.0};
    double ego_radius = 0.0;
    // initial and minimum standard deviation of the sampling law, as fractions of u_max
    double init_std = 0.5;
    double min_std = 0.05;

    void validate() const {
        if (horizon < 1)
            throw DomainError("MPCConfig: horizon must be >= 1");
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw DomainError("MPCConfig: dt must be > 0");
        if (n_elite < 1 || n_elite >= n_samples)
            throw DomainError("MPCConfig: need 1 <= n_elite < n_samples");
        if (n_iters < 1)
            throw DomainError("MPCConfig: n_iters must be >= 1");
        if (!(u_max > 0.0) || !std::isfinite(u_max))
            throw DomainError("MPCConfig: u_max must be > 0");
        if (!(w_goal >= 0.0 && w_effort >= 0.0 && w_terminal >= 0.0))
            throw DomainError("MPCConfig: cost weights must be >= 0");
        if (!(ego_radius >= 0.0))
            throw DomainError("MPCConfig: ego_radius must be >= 0");
        if (!(init_std > 0.0 && min_std > 0.0))
            throw DomainError("MPCConfig: sampling spreads must be > 0");
    }
};

struct Plan {
    std::vector<Control> controls;
    std::vector<State> states;
    double cost = 0.0;
    bool feasible = false;
    // best feasible cost after each CEM iteration (+inf while none found)
    std::vector<double> best_cost_trace;
};

/// Loss of one constraint at a position; the position is admissible iff the loss is <= 0.
using SafetyConstraint = std::function<double(const Vec2&)>;

inline State step_dynamics(const State& s, const Control& u, double dt) {
    State n;
    for (int i = 0; i < 2; ++i) {
        n.position[i] = s.position[i] + s.velocity[i] * dt + 0.5 * u.accel[i] * dt * dt;
        n.velocity[i] = s.velocity[i] + u.accel[i] * dt;
    }
    return n;
}

inline double stage_cost(const State& s, const Control& u, const MPCConfig& cfg) {
    const Vec2 e{s.position[0] - cfg.goal[0], s.position[1] - cfg.goal[1]};
    return cfg.w_goal * squared_norm(e) + cfg.w_effort * squared_norm(u.accel);
}

inline double terminal_cost(const State& s, const MPCConfig& cfg) {
    const Vec2 e{s.position[0] - cfg.goal[0], s.position[1] - cfg.goal[1]};
    return cfg.w_terminal * squared_norm(e);
}

inline bool admissible(const Vec2& p, std::span<const SafetyConstraint> constraints) {
    for (const auto& g : constraints)
        if (g(p) > 0.0)
            return false;
    return true;
}

/// Robust loss bound of each obstacle as a planar constraint.
inline std::vector<SafetyConstraint> robust_constraints(std::span<const robust::ObstacleModel> obstacles,
                                                        double ego_radius, risk::RiskLevel eps) {
    std::vector<SafetyConstraint> out;
    for (const auto& obs : obstacles) {
        if (obs.dims() != 2)
            throw DomainError("robust_constraints: planar obstacles need exactly 2 axes");
        robust::RobustConstraint rc(obs, ego_radius, eps);
        out.emplace_back([rc](const Vec2& p) { return rc.loss(p); });
    }
    return out;
}

inline Plan rollout(const State& s0, std::span<const Control> controls, const MPCConfig& cfg,
                    std::span<const SafetyConstraint> constraints) {
    if (controls.size() != cfg.horizon)
        throw DomainError("rollout: controls length must equal the horizon");
    Plan plan;
    plan.controls.assign(controls.begin(), controls.end());
    plan.states.reserve(cfg.horizon + 1);
    plan.states.push_back(s0);
    plan.feasible = true;
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        const State& s = plan.states.back();
        if (plan.feasible && !admissible(s.position, constraints))
            plan.feasible = false;
        plan.cost += stage_cost(s, controls[t], cfg);
        plan.states.push_back(step_dynamics(s, controls[t], cfg.dt));
    }
    plan.cost += terminal_cost(plan.states.back(), cfg);
    return plan;
}

inline Plan rollout(const State& s0, std::span<const Control> controls, const MPCConfig& cfg,
                    std::span<const robust::ObstacleModel> obstacles) {
    const auto cs = robust_constraints(obstacles, cfg.ego_radius, cfg.epsilon);
    return rollout(s0, controls, cfg, std::span<const SafetyConstraint>(cs));
}

/// Maximal deceleration toward zero velocity, then hold.
inline std::vector<Control> braking_controls(const State& s0, const MPCConfig& cfg) {
    std::vector<Control> out;
    State s = s0;
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        Control u;
        for (int i = 0; i < 2; ++i)
            u.accel[i] = std::clamp(-s.velocity[i] / cfg.dt, -cfg.u_max, cfg.u_max);
        s = step_dynamics(s, u, cfg.dt);
        out.push_back(u);
    }
    return out;
}

/// Critically damped feedback toward the goal, a = w^2 (goal - p) - 2 w v, clamped.
inline std::vector<Control> goal_seeking_controls(const State& s0, const MPCConfig& cfg, double omega = 1.5) {
    std::vector<Control> out;
    State s = s0;
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        Control u;
        for (int i = 0; i < 2; ++i)
            u.accel[i] = std::clamp(omega * omega * (cfg.goal[i] - s.position[i]) - 2.0 * omega * s.velocity[i],
                                    -cfg.u_max, cfg.u_max);
        s = step_dynamics(s, u, cfg.dt);
        out.push_back(u);
    }
    return out;
}

namespace detail {

// Cost of a rollout, or nullopt as soon as a constrained state is inadmissible.
inline std::optional<double> feasible_cost(const State& s0, std::span<const Control> controls,
                                           const MPCConfig& cfg,
                                           std::span<const SafetyConstraint> constraints) {
    State s = s0;
    double cost = 0.0;
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        if (!admissible(s.position, constraints))
            return std::nullopt;
        cost += stage_cost(s, controls[t], cfg);
        s = step_dynamics(s, controls[t], cfg.dt);
    }
    return cost + terminal_cost(s, cfg);
}

} // namespace detail

/// Cross-entropy MPC.
///
/// Each iteration draws n_samples sequences from a diagonal Gaussian, clamps
/// them to the actuator box, keeps the feasible ones and refits the law to the
/// n_elite cheapest. Sample 0 is always the current mean; in the first
/// iteration samples 1 and 2 are the braking and goal-seeking sequences. Randomness for sample k of
/// iteration i comes from the stream derive_seed(seed, i, k).
inline Plan solve_mpc(const State& s0, const MPCConfig& cfg, std::span<const SafetyConstraint> constraints,
                      std::span<const Control> warm_start = {}) {
    cfg.validate();
    const std::size_t T = cfg.horizon;
    std::vector<Vec2> mean(T, Vec2{0.0, 0.0});
    if (warm_start.size() == T)
        for (std::size_t t = 0; t < T; ++t)
            mean[t] = warm_start[t].accel;
    std::vector<Vec2> stdev(T, Vec2{cfg.init_std * cfg.u_max, cfg.init_std * cfg.u_max});
    const double min_std = cfg.min_std * cfg.u_max;
    const auto braking = braking_controls(s0, cfg);
    const auto seeking = goal_seeking_controls(s0, cfg);

    std::vector<std::vector<Control>> samples(cfg.n_samples, std::vector<Control>(T));
    std::vector<std::pair<double, std::size_t>> ranked;
    std::vector<Control> best;
    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<double> trace;

    for (std::size_t it = 0; it < cfg.n_iters; ++it) {
        ranked.clear();
        for (std::size_t k = 0; k < cfg.n_samples; ++k) {
            auto& seq = samples[k];
            if (it == 0 && k == 1) {
                seq = braking;
            } else if (it == 0 && k == 2) {
                seq = seeking;
            } else {
                CounterRng rng(derive_seed(cfg.seed, it, k));
                for (std::size_t t = 0; t < T; ++t)
                    for (int i = 0; i < 2; ++i) {
                        const double noise = k == 0 ? 0.0 : stdev[t][i] * rng.normal();
                        seq[t].accel[i] = std::clamp(mean[t][i] + noise, -cfg.u_max, cfg.u_max);
                    }
            }
            if (auto c = detail::feasible_cost(s0, seq, cfg, constraints))
                ranked.emplace_back(*c, k);
        }
        if (!ranked.empty()) {
            std::sort(ranked.begin(), ranked.end());
            if (ranked.front().first < best_cost) {
                best_cost = ranked.front().first;
                best = samples[ranked.front().second];
            }
            const std::size_t m = std::min(cfg.n_elite, ranked.size());
            for (std::size_t t = 0; t < T; ++t)
                for (int i = 0; i < 2; ++i) {
                    double s1 = 0.0, s2 = 0.0;
                    for (std::size_t e = 0; e < m; ++e) {
                        const double a = samples[ranked[e].second][t].accel[i];
                        s1 += a;
                        s2 += a * a;
                    }
                    const double mu = s1 / static_cast<double>(m);
                    mean[t][i] = mu;
                    stdev[t][i] = std::max(std::sqrt(std::max(s2 / static_cast<double>(m) - mu * mu, 0.0)), min_std);
                }
        }
        trace.push_back(best_cost);
    }

    Plan plan;
    if (best.empty()) {
        plan = rollout(s0, braking, cfg, constraints);
        plan.feasible = false;
    } else {
        plan = rollout(s0, best, cfg, constraints);
    }
    plan.best_cost_trace = std::move(trace);
    return plan;
}

inline Plan solve_mpc(const State& s0, const MPCConfig& cfg, std::span<const robust::ObstacleModel> obstacles,
                      std::span<const Control> warm_start = {}) {
    const auto cs = robust_constraints(obstacles, cfg.ego_radius, cfg.epsilon);
    return solve_mpc(s0, cfg, std::span<const SafetyConstraint>(cs), warm_start);
}

} // namespace droedl::control
