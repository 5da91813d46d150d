#pragma once

// Normal-Inverse-Gamma handling: density, highest-density regions, contour
// extrema and the standardized lookup table of per-alpha extrema.
//
// The NIG joint density over (mu, var) is
//   N(mu | gamma, var / lambda) * InvGamma(var | alpha, beta)
//   = C var^{-(alpha + 3/2)} exp(-(2 beta + lambda (mu - gamma)^2) / (2 var)),
// with C = sqrt(lambda / 2pi) beta^alpha / Gamma(alpha). Everything below
// works with the log density to stay finite for extreme parameters.

#include "droedl/error.hpp"
#include "droedl/numeric.hpp"
#include "droedl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace droedl::evidential {

struct NIGParams {
    double gamma = 0.0;
    double lambda = 1.0;
    double alpha = 2.0;
    double beta = 1.0;

    NIGParams() = default;
    NIGParams(double g, double l, double a, double b) : gamma(g), lambda(l), alpha(a), beta(b) {
        validate();
    }

    void validate() const {
        if (!std::isfinite(gamma) || !(lambda > 0.0) || !(alpha > 1.0) || !(beta > 0.0) ||
            !std::isfinite(lambda) || !std::isfinite(alpha) || !std::isfinite(beta)) {
            std::ostringstream msg;
            msg << "NIGParams: need lambda > 0, alpha > 1, beta > 0 (got gamma=" << gamma
                << ", lambda=" << lambda << ", alpha=" << alpha << ", beta=" << beta << ")";
            throw DomainError(msg.str());
        }
    }
};

/// Probability mass eta in (0, 1) of a highest-density region.
class Confidence {
  public:
    Confidence() = default;
    explicit Confidence(double eta) : eta_(eta) {
        if (!(eta > 0.0 && eta < 1.0))
            throw DomainError("Confidence: eta must lie in (0, 1)");
    }
    double value() const { return eta_; }

  private:
    double eta_ = 0.9;
};

/// Axis-aligned rectangle [mu_min, mu_max] x [var_min, var_max] enclosing an HDR contour.
struct SurrogateSet {
    double mu_min = 0.0;
    double mu_max = 0.0;
    double var_min = 1.0;
    double var_max = 1.0;
    double gamma = 0.0;

    double sigma_min() const { return std::sqrt(var_min); }
    double sigma_max() const { return std::sqrt(var_max); }
    double half_width() const { return 0.5 * (mu_max - mu_min); }
    bool contains(double mu, double var, double slack = 0.0) const {
        return mu >= mu_min - slack && mu <= mu_max + slack && var >= var_min - slack &&
               var <= var_max + slack;
    }
};

/// Checks the rectangle invariants. Degenerate rectangles (zero width) pass
/// only when `allow_degenerate` is set.
inline void validate(const SurrogateSet& s, bool allow_degenerate = true) {
    const bool ordered = allow_degenerate ? (s.mu_min <= s.mu_max && s.var_min <= s.var_max)
                                          : (s.mu_min < s.mu_max && s.var_min < s.var_max);
    if (!ordered || !(s.var_min > 0.0) || !std::isfinite(s.var_max) || !std::isfinite(s.mu_min) ||
        !std::isfinite(s.mu_max))
        throw DomainError("SurrogateSet: need mu_min <= mu_max and 0 < var_min <= var_max");
    const double scale = std::max({std::abs(s.gamma), s.half_width(), 1e-300});
    if (std::abs(s.mu_min + s.mu_max - 2.0 * s.gamma) > 1e-9 * scale)
        throw DomainError("SurrogateSet: mu interval is not centred on gamma");
}

// ---------------------------------------------------------------------------
// density

inline double log_normalizer(const NIGParams& p) {
    return 0.5 * std::log(p.lambda / (2.0 * std::numbers::pi)) + p.alpha * std::log(p.beta) -
           std::lgamma(p.alpha);
}

inline double nig_log_density(const NIGParams& p, double mu, double var) {
    if (!(var > 0.0))
        throw DomainError("nig_density: variance must be > 0");
    const double d = mu - p.gamma;
    return log_normalizer(p) - (p.alpha + 1.5) * std::log(var) -
           (2.0 * p.beta + p.lambda * d * d) / (2.0 * var);
}

inline double nig_density(const NIGParams& p, double mu, double var) {
    return std::exp(nig_log_density(p, mu, var));
}

/// Joint mode (gamma, 2 beta / (2 alpha + 3)).
inline std::pair<double, double> nig_mode(const NIGParams& p) {
    return {p.gamma, 2.0 * p.beta / (2.0 * p.alpha + 3.0)};
}

inline double log_mode_density(const NIGParams& p) {
    const auto [mu, var] = nig_mode(p);
    return nig_log_density(p, mu, var);
}

namespace detail {

// log density along mu = gamma, as a function of s = log var
inline double log_density_on_axis(const NIGParams& p, double lognorm, double s) {
    return lognorm - (p.alpha + 1.5) * s - p.beta * std::exp(-s);
}

/// Roots (in log var) of the axis log density at level `log_c`, bracketing the mode.
inline std::pair<double, double> log_var_roots(const NIGParams& p, double log_c) {
    const double lognorm = log_normalizer(p);
    const double s_mode = std::log(nig_mode(p).second);
    auto f = [&](double s) { return log_density_on_axis(p, lognorm, s) - log_c; };
    if (!(f(s_mode) > 0.0))
        throw DomainError("contour level is not below the mode density");
    double step = 0.5;
    double s_lo = s_mode - step;
    while (f(s_lo) > 0.0) {
        step *= 2.0;
        s_lo = s_mode - step;
        if (step > 1e4)
            throw NumericalFailure("could not bracket the lower variance root");
    }
    step = 0.5;
    double s_hi = s_mode + step;
    while (f(s_hi) > 0.0) {
        step *= 2.0;
        s_hi = s_mode + step;
        if (step > 1e4)
            throw NumericalFailure("could not bracket the upper variance root");
    }
    const double lo = numeric::find_root(f, s_lo, s_mode, 1e-15);
    const double hi = numeric::find_root(f, s_mode, s_hi, 1e-15);
    return {lo, hi};
}

} // namespace detail

// ---------------------------------------------------------------------------
// highest-density regions

/// Probability that a NIG draw lands where the density is at least exp(log_c).
///
/// For a fixed variance slice the set {density >= c} is an interval in mu,
/// whose conditional mass is erf(sqrt(L(var) - log c)) with L the axis log
/// density. The remaining 1-D integral over log var is adaptive quadrature.
inline double hdr_mass_log(const NIGParams& p, double log_c, double tol) {
    if (!(tol > 0.0 && tol <= 1e-2))
        throw DomainError("hdr_mass: tol must lie in (0, 1e-2]");
    if (log_c == -std::numeric_limits<double>::infinity())
        return 1.0;
    if (!(log_c < log_mode_density(p)))
        return 0.0;
    const auto [s_lo, s_hi] = detail::log_var_roots(p, log_c);
    const double lognorm = log_normalizer(p);
    const double log_ig_norm = p.alpha * std::log(p.beta) - std::lgamma(p.alpha);
    auto integrand = [&](double s) {
        const double e = std::exp(-s);
        const double ig = std::exp(log_ig_norm - p.alpha * s - p.beta * e); // InvGamma(var) * var
        const double excess = lognorm - (p.alpha + 1.5) * s - p.beta * e - log_c;
        return ig * std::erf(std::sqrt(std::max(excess, 0.0)));
    };
    const auto q = numeric::integrate(integrand, s_lo, s_hi, 0.25 * tol, 8);
    return std::clamp(q.value, 0.0, 1.0);
}

inline double hdr_mass(const NIGParams& p, double c, double tol) {
    if (!(c >= 0.0))
        throw DomainError("hdr_mass: threshold must be >= 0");
    if (c == 0.0)
        return 1.0;
    return hdr_mass_log(p, std::log(c), tol);
}

/// Log of the density threshold whose superlevel set has mass eta.
inline double hdr_log_threshold(const NIGParams& p, Confidence eta, double tol) {
    if (!(tol > 0.0 && tol <= 1e-3))
        throw DomainError("hdr_threshold: tol must lie in (0, 1e-3]");
    const double top = log_mode_density(p);
    const double target = eta.value();
    const double quad_tol = std::min(0.1 * tol, 1e-2);
    auto f = [&](double log_c) { return hdr_mass_log(p, log_c, quad_tol) - target; };
    double step = 1.0;
    double lo = top - step;
    while (f(lo) <= 0.0) {
        step *= 2.0;
        lo = top - step;
        if (step > 1e5)
            throw NumericalFailure("hdr_threshold: could not bracket the threshold");
    }
    // the top end has mass exactly 0, which is below any eta > 0
    const double root = numeric::find_root(f, lo, top, 1e-13 * std::max(1.0, std::abs(top)));
    const double achieved = f(root);
    if (std::abs(achieved) > tol) {
        std::ostringstream msg;
        msg << "hdr_threshold: mass error " << achieved << " exceeds tolerance " << tol;
        throw NumericalFailure(msg.str());
    }
    return root;
}

inline double hdr_threshold(const NIGParams& p, Confidence eta, double tol) {
    return std::exp(hdr_log_threshold(p, eta, tol));
}

/// Extrema of the contour {density = exp(log_c)}.
///
/// Variance extrema sit on mu = gamma. Mu extrema sit on the stationarity curve
/// var = (2 beta + lambda (mu - gamma)^2) / (2 alpha + 3), where the log density
/// reduces to log C - (alpha + 3/2)(log var + 1); that level equation has the
/// closed-form root used here.
inline SurrogateSet contour_extrema_log(const NIGParams& p, double log_c) {
    if (!(log_c < log_mode_density(p)) || !std::isfinite(log_c))
        throw DomainError("contour_extrema: threshold must lie in (0, mode density)");
    const auto [s_lo, s_hi] = detail::log_var_roots(p, log_c);
    const double a = p.alpha + 1.5;
    const double var_turn = std::exp((log_normalizer(p) - log_c) / a - 1.0);
    const double d2 = ((2.0 * p.alpha + 3.0) * var_turn - 2.0 * p.beta) / p.lambda;
    const double d = std::sqrt(std::max(d2, 0.0));
    SurrogateSet s;
    s.gamma = p.gamma;
    s.mu_min = p.gamma - d;
    s.mu_max = p.gamma + d;
    s.var_min = std::exp(s_lo);
    s.var_max = std::exp(s_hi);
    return s;
}

inline SurrogateSet contour_extrema(const NIGParams& p, double c_th) {
    if (!(c_th > 0.0))
        throw DomainError("contour_extrema: threshold must lie in (0, mode density)");
    return contour_extrema_log(p, std::log(c_th));
}

/// Variance at which the contour reaches its mu extrema.
inline double contour_turning_variance(const NIGParams& p, double log_c) {
    return std::exp((log_normalizer(p) - log_c) / (p.alpha + 1.5) - 1.0);
}

struct ContourPoint {
    double mu = 0.0;
    double var = 0.0;
};

/// Closed polygon on the contour {density = exp(log_c)}: n log-spaced variance
/// levels, each giving mu = gamma +- sqrt(2 var (L(var) - log c) / lambda).
inline std::vector<ContourPoint> contour_polygon(const NIGParams& p, double log_c, std::size_t n = 200) {
    if (n < 2)
        throw DomainError("contour_polygon: need at least 2 variance levels");
    const auto [s_lo, s_hi] = detail::log_var_roots(p, log_c);
    const double lognorm = log_normalizer(p);
    std::vector<ContourPoint> right, left;
    for (double s : numeric::linspace(s_lo, s_hi, n)) {
        const double var = std::exp(s);
        const double excess = std::max(detail::log_density_on_axis(p, lognorm, s) - log_c, 0.0);
        const double d = std::sqrt(2.0 * var * excess / p.lambda);
        right.push_back({p.gamma + d, var});
        left.push_back({p.gamma - d, var});
    }
    std::vector<ContourPoint> out(right.begin(), right.end());
    out.insert(out.end(), left.rbegin() + 1, left.rend() - 1);
    return out;
}

// ---------------------------------------------------------------------------
// standardization

/// Affine maps u = (mu - gamma) sqrt(lambda / beta), v = var / beta.
///
/// Under them the NIG becomes NIG(0, 1, alpha, 1); densities scale by
/// sqrt(lambda) / beta^{3/2}, so HDR shapes depend on alpha alone.
struct Standardization {
    double gamma = 0.0;
    double lambda = 1.0;
    double beta = 1.0;

    explicit Standardization(const NIGParams& p) : gamma(p.gamma), lambda(p.lambda), beta(p.beta) {}

    double to_u(double mu) const { return (mu - gamma) * std::sqrt(lambda / beta); }
    double from_u(double u) const { return gamma + u * std::sqrt(beta / lambda); }
    double to_v(double var) const { return var / beta; }
    double from_v(double v) const { return v * beta; }
    /// log of the factor f with density_original = f * density_standard
    double log_density_scale() const { return 0.5 * std::log(lambda) - 1.5 * std::log(beta); }

    NIGParams standard(double alpha) const { return NIGParams(0.0, 1.0, alpha, 1.0); }
};

// ---------------------------------------------------------------------------
// lookup table

struct LookupRow {
    double alpha = 0.0;
    double u_min = 0.0;
    double u_max = 0.0;
    double v_min = 0.0;
    double v_max = 0.0;

    bool operator==(const LookupRow&) const = default;
};

struct LookupTable {
    static constexpr int current_version = 1;

    int version = current_version;
    double eta = 0.9;
    std::vector<double> alpha_grid;
    std::vector<LookupRow> rows;

    double alpha_lo() const { return alpha_grid.front(); }
    double alpha_hi() const { return alpha_grid.back(); }
};

inline constexpr double table_alpha_min = 1.01;
inline constexpr double table_alpha_max = 10.0;
inline constexpr std::size_t table_min_rows = 64;

inline std::vector<double> default_alpha_grid(std::size_t n = 128) {
    return numeric::logspace(table_alpha_min, table_alpha_max, n);
}

/// Standardized extrema for one alpha.
inline LookupRow standardized_row(double alpha, Confidence eta, double tol) {
    const NIGParams std_p(0.0, 1.0, alpha, 1.0);
    const double log_c = hdr_log_threshold(std_p, eta, tol);
    const auto s = contour_extrema_log(std_p, log_c);
    return {alpha, s.mu_min, s.mu_max, s.var_min, s.var_max};
}

/// Precomputes standardized contour extrema over an alpha grid.
inline LookupTable build_lookup(Confidence eta, const std::vector<double>& alpha_grid, double tol) {
    if (alpha_grid.size() < table_min_rows)
        throw DomainError("build_lookup: alpha grid needs at least 64 points");
    if (!std::is_sorted(alpha_grid.begin(), alpha_grid.end()) ||
        std::adjacent_find(alpha_grid.begin(), alpha_grid.end()) != alpha_grid.end())
        throw DomainError("build_lookup: alpha grid must be strictly increasing");
    if (alpha_grid.front() < table_alpha_min || alpha_grid.back() > table_alpha_max)
        throw DomainError("build_lookup: alpha grid must lie within [1.01, 10]");
    LookupTable table;
    table.eta = eta.value();
    table.alpha_grid = alpha_grid;
    table.rows.resize(alpha_grid.size());
    parallel_for(alpha_grid.size(), [&](std::size_t i) {
        try {
            table.rows[i] = standardized_row(alpha_grid[i], eta, tol);
        } catch (const NumericalFailure& e) {
            std::ostringstream msg;
            msg << "build_lookup: alpha = " << alpha_grid[i] << ": " << e.what();
            throw NumericalFailure(msg.str());
        }
    });
    return table;
}

/// Linear interpolation of the standardized extrema at `alpha`.
inline LookupRow interpolate_row(const LookupTable& table, double alpha) {
    if (!(alpha >= table.alpha_lo() && alpha <= table.alpha_hi())) {
        std::ostringstream msg;
        msg << "alpha " << alpha << " outside table range [" << table.alpha_lo() << ", "
            << table.alpha_hi() << "]";
        throw TableRangeError(msg.str());
    }
    const auto it = std::upper_bound(table.alpha_grid.begin(), table.alpha_grid.end(), alpha);
    std::size_t hi = static_cast<std::size_t>(it - table.alpha_grid.begin());
    if (hi == table.alpha_grid.size())
        return table.rows.back();
    const std::size_t lo = hi - 1;
    const LookupRow& a = table.rows[lo];
    const LookupRow& b = table.rows[hi];
    const double t = (alpha - table.alpha_grid[lo]) / (table.alpha_grid[hi] - table.alpha_grid[lo]);
    LookupRow r;
    r.alpha = alpha;
    r.u_max = a.u_max + t * (b.u_max - a.u_max);
    r.u_min = -r.u_max;
    r.v_min = a.v_min + t * (b.v_min - a.v_min);
    r.v_max = a.v_max + t * (b.v_max - a.v_max);
    return r;
}

inline SurrogateSet destandardize(const LookupRow& row, const NIGParams& p) {
    const Standardization st(p);
    SurrogateSet s;
    s.gamma = p.gamma;
    s.mu_min = st.from_u(row.u_min);
    s.mu_max = st.from_u(row.u_max);
    s.var_min = st.from_v(row.v_min);
    s.var_max = st.from_v(row.v_max);
    return s;
}

inline constexpr double default_direct_tol = 1e-9;

/// Surrogate rectangle of the eta-HDR of `p`.
///
/// With a table, rows are interpolated linearly in alpha and destandardized.
/// Without one, the threshold and extrema are computed directly.
inline SurrogateSet surrogate_from_params(const NIGParams& p, Confidence eta,
                                          const LookupTable* table = nullptr,
                                          bool fallback_outside_table = false,
                                          double direct_tol = default_direct_tol) {
    p.validate();
    if (table != nullptr) {
        if (table->eta != eta.value())
            throw DomainError("surrogate_from_params: table was built for a different eta");
        if (p.alpha >= table->alpha_lo() && p.alpha <= table->alpha_hi())
            return destandardize(interpolate_row(*table, p.alpha), p);
        if (!fallback_outside_table) {
            std::ostringstream msg;
            msg << "surrogate_from_params: alpha " << p.alpha << " outside table range";
            throw TableRangeError(msg.str());
        }
    }
    return contour_extrema_log(p, hdr_log_threshold(p, eta, direct_tol));
}

} // namespace droedl::evidential
