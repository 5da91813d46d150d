#pragma once

// Closed-loop planar obstacle-avoidance episodes with ground truth drawn from
// the evidential model, for three constraint policies.

#include "droedl/control.hpp"
#include "droedl/error.hpp"
#include "droedl/evidential.hpp"
#include "droedl/parallel.hpp"
#include "droedl/rng.hpp"
#include "droedl/risk.hpp"
#include "droedl/robust.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace droedl::sim {

using control::State;
using control::Vec2;
using evidential::NIGParams;

inline constexpr double goal_tolerance = 0.2;

struct ObstacleSpec {
    std::vector<double> gamma;
    double lambda = 1.0;
    double alpha = 2.0;
    double beta = 1.0;
    double eta = 0.9;
    double radius = 0.0;

    std::vector<NIGParams> axes() const {
        std::vector<NIGParams> out;
        for (double g : gamma)
            out.emplace_back(g, lambda, alpha, beta);
        return out;
    }
};

struct Scenario {
    State ego_start;
    Vec2 goal{0.0, 0.0};
    double ego_radius = 0.0;
    double dt = 0.1;
    std::size_t max_steps = 100;
    std::vector<ObstacleSpec> obstacles;
    std::string label = "confident";
    std::uint64_t seed = 0;
    // risk level for the planner; the MPC default applies when absent
    std::optional<double> epsilon;

    void validate() const {
        if (max_steps < 1)
            throw DomainError("Scenario: max_steps must be >= 1");
        if (!(dt > 0.0))
            throw DomainError("Scenario: dt must be > 0");
        if (!(ego_radius >= 0.0))
            throw DomainError("Scenario: radii must be >= 0");
        if (label != "confident" && label != "uncertain")
            throw DomainError("Scenario: label must be 'confident' or 'uncertain'");
        for (const auto& o : obstacles) {
            if (o.gamma.size() != 2)
                throw DomainError("Scenario: obstacles need a 2-component gamma");
            if (!(o.radius >= 0.0))
                throw DomainError("Scenario: radii must be >= 0");
            evidential::Confidence(o.eta);
            o.axes();
        }
        if (epsilon)
            risk::RiskLevel{*epsilon};
    }
};

enum class PolicyKind { SingleEstimate, PlainCVaR, DrEdlCvar };

inline std::string_view to_string(PolicyKind k) {
    switch (k) {
    case PolicyKind::SingleEstimate:
        return "single-estimate";
    case PolicyKind::PlainCVaR:
        return "cvar";
    case PolicyKind::DrEdlCvar:
        return "dr-edl-cvar";
    }
    return "?";
}

inline PolicyKind parse_policy(std::string_view s) {
    for (auto k : {PolicyKind::SingleEstimate, PolicyKind::PlainCVaR, PolicyKind::DrEdlCvar})
        if (to_string(k) == s)
            return k;
    throw DomainError("unknown policy '" + std::string(s) + "' (single-estimate | cvar | dr-edl-cvar)");
}

struct EpisodeResult {
    bool success = false;
    bool collision = false;
    double total_cost = 0.0;
    double min_distance = std::numeric_limits<double>::infinity();
    double mean_solve_time = 0.0; // milliseconds
    std::vector<State> trajectory;
    std::vector<bool> feasible;   // per applied step
    std::vector<Vec2> obstacle_truth;
};

/// One hierarchical draw per axis: var ~ InvGamma(alpha, beta),
/// mu ~ N(gamma, var / lambda), position ~ N(mu, var).
inline std::vector<double> sample_ground_truth(std::span<const NIGParams> axes, CounterRng& rng) {
    std::vector<double> out;
    for (const auto& p : axes) {
        const double var = rng.inverse_gamma(p.alpha, p.beta);
        const double mu = rng.normal(p.gamma, std::sqrt(var / p.lambda));
        out.push_back(rng.normal(mu, std::sqrt(var)));
    }
    return out;
}

inline std::vector<double> sample_ground_truth(std::span<const NIGParams> axes, std::uint64_t seed) {
    CounterRng rng(seed);
    return sample_ground_truth(axes, rng);
}

/// g(m) = CVaR_eps[-|X|] for X ~ N(m, 1), m >= 0, tabulated on a fine grid so
/// that CVaR_eps[-|c - xi|], xi ~ N(gamma, s^2), is s * g(|c - gamma| / s).
class UnitFoldedCvar {
  public:
    static constexpr double m_max = 12.0;
    static constexpr std::size_t n_points = 2401;

    explicit UnitFoldedCvar(risk::RiskLevel eps) : eps_(eps), h_(m_max / static_cast<double>(n_points - 1)) {
        values_.reserve(n_points);
        for (std::size_t i = 0; i < n_points; ++i)
            values_.push_back(risk::cvar_neg_abs(risk::GaussianScalar(static_cast<double>(i) * h_, 1.0), eps));
        far_offset_ = risk::delta(eps);
    }

    double operator()(double m) const {
        m = std::abs(m);
        if (m >= m_max)
            return std::min(-m + far_offset_, 0.0);
        const double x = m / h_;
        const auto i = std::min(static_cast<std::size_t>(x), n_points - 2);
        const double w = x - static_cast<double>(i);
        return (1.0 - w) * values_[i] + w * values_[i + 1];
    }

    risk::RiskLevel eps() const { return eps_; }

  private:
    risk::RiskLevel eps_;
    double h_;
    double far_offset_ = 0.0;
    std::vector<double> values_;
};

/// Planar constraint of one obstacle under the given policy.
///
/// single-estimate: (r_x + r_xi)^2 - |c - gamma|^2
/// cvar:            (r_x + r_xi)^2 - sum_i CVaR_eps[-|c_i - xi_i|]^2, xi_i ~ N(gamma_i, beta / (alpha - 1))
/// dr-edl-cvar:     the robust bound over the eta-HDR surrogate rectangle
inline control::SafetyConstraint build_policy_constraint(PolicyKind kind, const ObstacleSpec& obs,
                                                         risk::RiskLevel eps, double ego_radius,
                                                         const evidential::LookupTable* table = nullptr) {
    if (obs.gamma.size() != 2)
        throw DomainError("build_policy_constraint: planar obstacles need 2 axes");
    const double r = ego_radius + obs.radius;
    const Vec2 g{obs.gamma[0], obs.gamma[1]};
    switch (kind) {
    case PolicyKind::SingleEstimate:
        return [r, g](const Vec2& c) {
            const double dx = c[0] - g[0], dy = c[1] - g[1];
            return r * r - dx * dx - dy * dy;
        };
    case PolicyKind::PlainCVaR: {
        if (!(obs.alpha > 1.0))
            throw DomainError("build_policy_constraint: plug-in variance beta/(alpha-1) needs alpha > 1");
        const double s = std::sqrt(obs.beta / (obs.alpha - 1.0));
        auto unit = std::make_shared<const UnitFoldedCvar>(eps);
        return [r, g, s, unit](const Vec2& c) {
            double sum = 0.0;
            for (int i = 0; i < 2; ++i) {
                const double b = s * (*unit)((c[i] - g[i]) / s);
                sum += b * b;
            }
            return r * r - sum;
        };
    }
    case PolicyKind::DrEdlCvar: {
        const auto axes = obs.axes();
        const auto model = robust::make_obstacle(axes, evidential::Confidence(obs.eta), obs.radius,
                                                 table != nullptr && table->eta == obs.eta ? table : nullptr);
        robust::RobustConstraint rc(model, ego_radius, eps);
        return [rc](const Vec2& c) { return rc.loss(c); };
    }
    }
    throw DomainError("build_policy_constraint: unknown policy");
}

struct EpisodeOptions {
    bool measure_time = true;
};

/// Receding-horizon episode. Ground truth comes from stream 1 of sc.seed and
/// the solver seed at step k is derive_seed(sc.seed, 2, k). Collisions are
/// checked at every visited state against the true discs.
inline EpisodeResult run_episode(const Scenario& sc, PolicyKind kind, control::MPCConfig cfg,
                                 const evidential::LookupTable* table = nullptr, EpisodeOptions opt = {}) {
    sc.validate();
    cfg.dt = sc.dt;
    cfg.goal = sc.goal;
    cfg.ego_radius = sc.ego_radius;
    if (sc.epsilon)
        cfg.epsilon = risk::RiskLevel(*sc.epsilon);
    cfg.validate();

    EpisodeResult res;
    CounterRng truth_rng(sc.seed, 1);
    std::vector<double> radius_sum;
    std::vector<control::SafetyConstraint> constraints;
    for (const auto& o : sc.obstacles) {
        const auto axes = o.axes();
        const auto pos = sample_ground_truth(axes, truth_rng);
        res.obstacle_truth.push_back({pos[0], pos[1]});
        radius_sum.push_back(sc.ego_radius + o.radius);
        constraints.push_back(build_policy_constraint(kind, o, cfg.epsilon, sc.ego_radius, table));
    }

    auto clearance = [&](const Vec2& c) {
        bool hit = false;
        for (std::size_t j = 0; j < res.obstacle_truth.size(); ++j) {
            const double d = control::distance(c, res.obstacle_truth[j]);
            res.min_distance = std::min(res.min_distance, d);
            hit = hit || d < radius_sum[j];
        }
        return hit;
    };

    State s = sc.ego_start;
    res.trajectory.push_back(s);
    res.collision = clearance(s.position);
    std::vector<control::Control> warm;
    double solve_ms = 0.0;
    std::size_t solves = 0;
    for (std::size_t k = 0; k < sc.max_steps && !res.collision; ++k) {
        if (control::distance(s.position, sc.goal) <= goal_tolerance) {
            res.success = true;
            break;
        }
        cfg.seed = derive_seed(sc.seed, 2, k);
        const auto t0 = std::chrono::steady_clock::now();
        const auto plan = control::solve_mpc(s, cfg, std::span<const control::SafetyConstraint>(constraints), warm);
        const auto t1 = std::chrono::steady_clock::now();
        if (opt.measure_time)
            solve_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
        ++solves;

        const auto& u = plan.controls.front();
        res.total_cost += control::stage_cost(s, u, cfg);
        const State next = control::step_dynamics(s, u, cfg.dt);
        res.collision = clearance(next.position);
        res.feasible.push_back(plan.feasible);
        res.trajectory.push_back(next);
        s = next;

        warm.assign(plan.controls.begin() + 1, plan.controls.end());
        warm.push_back(plan.controls.back());
    }
    if (!res.success && !res.collision && control::distance(s.position, sc.goal) <= goal_tolerance)
        res.success = true;
    res.total_cost += control::terminal_cost(s, cfg);
    if (res.obstacle_truth.empty())
        res.min_distance = std::numeric_limits<double>::infinity();
    res.mean_solve_time = solves > 0 ? solve_ms / static_cast<double>(solves) : 0.0;
    return res;
}

struct BatchMetrics {
    PolicyKind policy = PolicyKind::DrEdlCvar;
    std::size_t episodes = 0;
    double success_pct = 0.0;
    double collision_pct = 0.0;
    double mean_cost = 0.0;         // over successful episodes; NaN if none
    double mean_min_distance = 0.0; // over successful episodes; NaN if none
    double mean_solve_ms = 0.0;
};

/// Episode i runs with seed derive_seed(seed, i); episodes may run in parallel.
inline BatchMetrics run_batch(const Scenario& sc, PolicyKind kind, const control::MPCConfig& cfg,
                              std::size_t n_episodes, std::uint64_t seed,
                              const evidential::LookupTable* table = nullptr, EpisodeOptions opt = {},
                              std::vector<EpisodeResult>* episodes_out = nullptr) {
    if (n_episodes < 1)
        throw DomainError("run_batch: n_episodes must be >= 1");
    sc.validate();
    std::vector<EpisodeResult> results(n_episodes);
    parallel_for(n_episodes, [&](std::size_t i) {
        Scenario e = sc;
        e.seed = derive_seed(seed, i);
        results[i] = run_episode(e, kind, cfg, table, opt);
    });

    BatchMetrics m;
    m.policy = kind;
    m.episodes = n_episodes;
    std::size_t succ = 0, coll = 0;
    double cost = 0.0, dist = 0.0, ms = 0.0;
    for (const auto& r : results) {
        if (r.success) {
            ++succ;
            cost += r.total_cost;
            dist += r.min_distance;
        }
        coll += r.collision ? 1 : 0;
        ms += r.mean_solve_time;
    }
    const double n = static_cast<double>(n_episodes);
    m.success_pct = 100.0 * static_cast<double>(succ) / n;
    m.collision_pct = 100.0 * static_cast<double>(coll) / n;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.mean_cost = succ > 0 ? cost / static_cast<double>(succ) : nan;
    m.mean_min_distance = succ > 0 ? dist / static_cast<double>(succ) : nan;
    m.mean_solve_ms = ms / n;
    if (episodes_out)
        *episodes_out = std::move(results);
    return m;
}

} // namespace droedl::sim
