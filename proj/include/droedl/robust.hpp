#pragma once

// Worst-case negative-distance CVaR over surrogate ambiguity sets and the
// distributionally robust collision-loss bound built from it.

#include "droedl/error.hpp"
#include "droedl/evidential.hpp"
#include "droedl/numeric.hpp"
#include "droedl/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace droedl::robust {

using evidential::Confidence;
using evidential::NIGParams;
using evidential::SurrogateSet;
using risk::RiskLevel;

struct AxisModel {
    NIGParams nig;
    SurrogateSet surrogate;
    Confidence eta;
};

/// Obstacle with independent per-axis NIG predictions; n_c = axes.size() in {1, 2, 3}.
struct ObstacleModel {
    std::vector<AxisModel> axes;
    double radius_obs = 0.0;

    std::size_t dims() const { return axes.size(); }
};

/// Builds per-axis surrogates (through `table` when given) for an obstacle.
inline ObstacleModel make_obstacle(std::span<const NIGParams> axes, Confidence eta, double radius,
                                   const evidential::LookupTable* table = nullptr) {
    if (axes.empty() || axes.size() > 3)
        throw DomainError("ObstacleModel: between 1 and 3 axes required");
    if (!(radius >= 0.0))
        throw DomainError("ObstacleModel: radius must be >= 0");
    ObstacleModel obs;
    obs.radius_obs = radius;
    for (const auto& p : axes)
        obs.axes.push_back({p, evidential::surrogate_from_params(p, eta, table, true), eta});
    return obs;
}

struct EgoDisc {
    std::vector<double> center;
    double radius_ego = 0.0;
};

struct UnsafeInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double c) const { return c >= lo && c <= hi; }
};

enum class BoundCase { InMu, InUnsafe, Outside };

inline std::string_view to_string(BoundCase c) {
    switch (c) {
    case BoundCase::InMu:
        return "in-mu";
    case BoundCase::InUnsafe:
        return "in-unsafe";
    case BoundCase::Outside:
        return "outside";
    }
    return "?";
}

struct AxisBound {
    double value = 0.0;
    BoundCase case_tag = BoundCase::InMu;
};

/// [mu_min - delta sigma_max, mu_max + delta sigma_max].
inline UnsafeInterval unsafe_interval(const SurrogateSet& s, RiskLevel eps) {
    const double margin = risk::delta(eps) * s.sigma_max();
    return {s.mu_min - margin, s.mu_max + margin};
}

/// Per-axis constants of the worst-case bound, computed once per (set, eps).
class AxisRiskProfile {
  public:
    AxisRiskProfile(const SurrogateSet& s, RiskLevel eps)
        : set_(s), kappa_sigma_min_(risk::kappa(eps) * s.sigma_min()),
          delta_sigma_max_(risk::delta(eps) * s.sigma_max()),
          unsafe_{s.mu_min - delta_sigma_max_, s.mu_max + delta_sigma_max_} {}

    /// Upper bound on max over the surrogate set of CVaR_eps[-|c - xi|].
    AxisBound bound(double c) const {
        if (c >= set_.mu_min && c <= set_.mu_max)
            return {kappa_sigma_min_, BoundCase::InMu};
        if (unsafe_.contains(c))
            return {kappa_sigma_min_, BoundCase::InUnsafe};
        return {-std::abs(c - set_.gamma) + set_.half_width() + delta_sigma_max_, BoundCase::Outside};
    }

    const UnsafeInterval& unsafe() const { return unsafe_; }
    const SurrogateSet& surrogate() const { return set_; }

  private:
    SurrogateSet set_;
    double kappa_sigma_min_;
    double delta_sigma_max_;
    UnsafeInterval unsafe_;
};

/// Three-case worst-case negative-distance CVaR bound for one axis.
///
/// c in [mu_min, mu_max]      -> kappa sigma_min (attained by N(c, var_min))
/// c in unsafe \ [mu_min, mu_max] -> kappa sigma_min (upper bound)
/// otherwise                  -> -|c - gamma| + (mu_max - mu_min)/2 + delta sigma_max
inline AxisBound axis_worst_cvar_bound(double c, const SurrogateSet& s, RiskLevel eps) {
    if (eps.value() == 0.0)
        throw DomainError("axis_worst_cvar_bound: eps must lie in (0, 1)");
    return AxisRiskProfile(s, eps).bound(c);
}

struct OracleResult {
    double value = 0.0;
    double mu = 0.0;  // argmax on the grid
    double var = 0.0;
};

/// Brute-force maximum of CVaR_eps[-|X_d|], X_d ~ N(c - mu, var), over a
/// grid x grid lattice on the surrogate rectangle.
///
/// The mu lattice is augmented with the point of the interval closest to c,
/// where the distance mean |c - mu| is smallest.
inline OracleResult oracle_axis_worst_cvar(double c, const SurrogateSet& s, RiskLevel eps,
                                           std::size_t grid = 64) {
    if (grid < 64)
        throw DomainError("oracle_axis_worst_cvar: grid must be at least 64 x 64");
    auto mus = numeric::linspace(s.mu_min, s.mu_max, grid);
    mus.push_back(std::clamp(c, s.mu_min, s.mu_max));
    const auto vars = numeric::linspace(s.var_min, s.var_max, grid);
    OracleResult best{-std::numeric_limits<double>::infinity(), 0.0, 0.0};
    for (double mu : mus) {
        for (double var : vars) {
            const double v = risk::cvar_neg_abs(risk::GaussianScalar(c - mu, std::sqrt(var)), eps);
            if (v > best.value)
                best = {v, mu, var};
        }
    }
    return best;
}

/// Deterministic collision loss (r_x + r_xi)^2 - sum_i (c_i^x - c_i^xi)^2; <= 0 iff no overlap.
inline double safety_loss(const EgoDisc& ego, std::span<const double> obstacle_point, double radius_obs) {
    if (ego.center.size() != obstacle_point.size())
        throw DomainError("safety_loss: dimension mismatch");
    const double r = ego.radius_ego + radius_obs;
    double d2 = 0.0;
    for (std::size_t i = 0; i < obstacle_point.size(); ++i) {
        const double d = ego.center[i] - obstacle_point[i];
        d2 += d * d;
    }
    return r * r - d2;
}

/// Cached distributionally robust loss bound for one obstacle and a fixed ego radius.
class RobustConstraint {
  public:
    RobustConstraint(const ObstacleModel& obs, double radius_ego, RiskLevel eps)
        : radius_sum_(radius_ego + obs.radius_obs) {
        if (eps.value() == 0.0)
            throw DomainError("RobustConstraint: eps must lie in (0, 1)");
        for (const auto& axis : obs.axes)
            profiles_.emplace_back(axis.surrogate, eps);
    }

    /// (r_x + r_xi)^2 - sum_i b_i^2 with b_i the per-axis bounds.
    ///
    /// Each b_i < 0 bounds a negative worst-case CVaR from above, so
    /// b_i^2 <= (worst-case CVaR)^2 and the returned value can only
    /// overestimate the worst-case loss CVaR.
    double loss(std::span<const double> center) const {
        if (center.size() != profiles_.size())
            throw DomainError("RobustConstraint: dimension mismatch");
        double sum = 0.0;
        for (std::size_t i = 0; i < profiles_.size(); ++i) {
            const double b = profiles_[i].bound(center[i]).value;
            sum += b * b;
        }
        return radius_sum_ * radius_sum_ - sum;
    }

    const std::vector<AxisRiskProfile>& profiles() const { return profiles_; }
    double radius_sum() const { return radius_sum_; }

  private:
    double radius_sum_;
    std::vector<AxisRiskProfile> profiles_;
};

inline double dr_loss_upper_bound(const EgoDisc& ego, const ObstacleModel& obs, RiskLevel eps) {
    if (ego.center.size() != obs.dims())
        throw DomainError("dr_loss_upper_bound: dimension mismatch");
    return RobustConstraint(obs, ego.radius_ego, eps).loss(ego.center);
}

inline bool constraint_satisfied(const EgoDisc& ego, const ObstacleModel& obs, RiskLevel eps) {
    return dr_loss_upper_bound(ego, obs, eps) <= 0.0;
}

} // namespace droedl::robust
