#pragma once

// VaR / CVaR analytics for Gaussian, half-normal and folded-normal variables.
//
// Tail convention used throughout: VaR_eps[Y] is the level-eps quantile,
// P[Y <= VaR_eps[Y]] = eps, and CVaR_eps[Y] = E[Y | Y >= VaR_eps[Y]] is the
// mean of the upper tail of mass 1 - eps. A statement written with the
// opposite convention (upper-tail mass eps) maps onto this one by eps -> 1 - eps.

#include "droedl/error.hpp"
#include "droedl/numeric.hpp"
#include "droedl/rng.hpp"
#include "droedl/special.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

namespace droedl::risk {

struct GaussianScalar {
    double mu = 0.0;
    double sigma = 1.0;

    GaussianScalar() = default;
    GaussianScalar(double mean, double stddev) : mu(mean), sigma(stddev) {
        if (!(sigma > 0.0) || !std::isfinite(sigma) || !std::isfinite(mu))
            throw DomainError("GaussianScalar: sigma must be finite and > 0");
    }
};

/// Risk level eps in [0, 1).
class RiskLevel {
  public:
    RiskLevel() = default;
    explicit RiskLevel(double eps) : eps_(eps) {
        if (!(eps >= 0.0 && eps < 1.0))
            throw DomainError("RiskLevel: epsilon must lie in [0, 1)");
    }
    double value() const { return eps_; }
    double tail_mass() const { return 1.0 - eps_; }

  private:
    double eps_ = 0.0;
};

namespace detail {

inline void require_open_level(RiskLevel eps, const char* op) {
    if (eps.value() == 0.0)
        throw DegenerateQuantile(std::string(op) + ": quantile at level 0 is -infinity");
}

// F_{-|X|}(k) for k <= 0.
inline double neg_abs_cdf(const GaussianScalar& g, double k) {
    return special::norm_cdf((k - g.mu) / g.sigma) + special::norm_sf((-k - g.mu) / g.sigma);
}

// y * f_{-|X|}(y) for y <= 0
inline double neg_abs_moment_density(const GaussianScalar& g, double y) {
    const double a = (y - g.mu) / g.sigma;
    const double b = (-y - g.mu) / g.sigma;
    return y * (special::norm_pdf(a) + special::norm_pdf(b)) / g.sigma;
}

} // namespace detail

/// Gaussian quantile mu + sigma * Phi^{-1}(eps).
inline double var_normal(const GaussianScalar& g, RiskLevel eps) {
    detail::require_open_level(eps, "var_normal");
    return g.mu + g.sigma * special::norm_quantile(eps.value());
}

/// Quantile of -|X| for X ~ N(mu, sigma^2).
///
/// At mu = 0 this is sqrt(2) sigma erf^{-1}(eps - 1). Otherwise the CDF
/// Phi((k - mu)/sigma) - Phi((-k - mu)/sigma) + 1 is inverted on k <= 0.
inline double var_neg_abs(const GaussianScalar& g, RiskLevel eps) {
    detail::require_open_level(eps, "var_neg_abs");
    if (g.mu == 0.0)
        return std::numbers::sqrt2 * g.sigma * special::erf_inv_shifted(eps.value());
    const double target = eps.value();
    auto f = [&](double k) { return detail::neg_abs_cdf(g, k) - target; };
    double lo = -(std::abs(g.mu) + 8.0 * g.sigma);
    while (f(lo) > 0.0) {
        lo -= 8.0 * g.sigma;
        if (lo < -(std::abs(g.mu) + 80.0 * g.sigma))
            throw NumericalFailure("var_neg_abs: could not bracket the quantile (eps too small?)");
    }
    return numeric::find_root(f, lo, 0.0, 1e-15 * (std::abs(g.mu) + g.sigma));
}

/// kappa(eps) = 1/(1-eps) sqrt(2/pi) (exp(-[erf^{-1}(eps-1)]^2) - 1).
///
/// kappa * sigma is CVaR_eps[-|X|] for X ~ N(0, sigma^2); always negative.
inline double kappa(RiskLevel eps) {
    const double z = special::erf_inv_shifted(eps.value());
    const double tail = std::isinf(z) ? 0.0 : std::exp(-z * z);
    return std::sqrt(2.0 / std::numbers::pi) * (tail - 1.0) / eps.tail_mass();
}

/// delta(eps) = 1/(1-eps) 1/sqrt(2 pi) exp(-[erf^{-1}(2 eps - 1)]^2).
///
/// Tail premium of the Gaussian upper tail: E[X | X >= VaR_eps[X]] = mu + delta sigma.
inline double delta(RiskLevel eps) {
    if (eps.value() == 0.0)
        return 0.0;
    const double z = special::erf_inv(2.0 * eps.value() - 1.0);
    return special::inv_sqrt_2pi * std::exp(-z * z) / eps.tail_mass();
}

/// CVaR_eps[-|X|] by adaptive quadrature of the folded-normal density over [VaR, 0].
inline double cvar_neg_abs(const GaussianScalar& g, RiskLevel eps) {
    const double m = std::abs(g.mu);
    // outside |y| in [m - 12 sigma, m + 12 sigma] the density is below 1e-31 of its peak
    double lo = -(m + 12.0 * g.sigma);
    const double hi = std::min(0.0, -(m - 12.0 * g.sigma));
    if (eps.value() > 0.0)
        lo = std::max(lo, var_neg_abs(g, eps));
    if (!(lo < hi))
        return hi;
    auto integrand = [&](double y) { return detail::neg_abs_moment_density(g, y); };
    const double tol = 1e-11 * (m + g.sigma) * eps.tail_mass();
    const auto segments = static_cast<std::size_t>(std::ceil((hi - lo) / g.sigma));
    const auto q = numeric::integrate(integrand, lo, hi, tol, segments);
    return std::min(q.value / eps.tail_mass(), 0.0);
}

/// CVaR_eps[-X] = -mu + delta(eps) sigma.
inline double cvar_neg_normal(const GaussianScalar& g, RiskLevel eps) {
    return -g.mu + delta(eps) * g.sigma;
}

/// dVaR_eps[-|X|]/dmu at fixed sigma: (phi(a) - phi(b)) / (phi(a) + phi(b)) with
/// a = (k - mu)/sigma, b = (-k - mu)/sigma.
inline double var_deriv_wrt_mu(const GaussianScalar& g, RiskLevel eps) {
    const double k = var_neg_abs(g, eps);
    const double pa = special::norm_pdf((k - g.mu) / g.sigma);
    const double pb = special::norm_pdf((-k - g.mu) / g.sigma);
    return (pa - pb) / (pa + pb);
}

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

inline constexpr std::size_t min_mc_samples = 10000;

template <class S>
concept Sampler = requires(S s, CounterRng& rng) {
    { s(rng) } -> std::convertible_to<double>;
};

/// Empirical CVaR: mean of the ceil((1-eps) n) largest samples.
///
/// The standard error uses the Rockafellar-Uryasev form
/// CVaR = v + E[(Y - v)^+] / (1 - eps), treating v as known.
template <Sampler S>
McEstimate mc_cvar(S&& sampler, RiskLevel eps, std::size_t n, std::uint64_t seed,
                   std::uint64_t stream = 0) {
    if (n < min_mc_samples)
        throw InsufficientSamples("mc_cvar: need at least 10^4 samples");
    CounterRng rng(seed, stream);
    std::vector<double> xs(n);
    for (auto& x : xs)
        x = static_cast<double>(sampler(rng));
    const auto m = static_cast<std::size_t>(std::ceil(eps.tail_mass() * static_cast<double>(n) - 1e-9));
    const std::size_t cut = n - m;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(cut), xs.end());
    const double v = xs[cut];
    double sum = 0.0;
    for (std::size_t i = cut; i < n; ++i)
        sum += xs[i];
    const double cvar = sum / static_cast<double>(m);

    double s1 = 0.0, s2 = 0.0;
    for (double x : xs) {
        const double e = std::max(x - v, 0.0);
        s1 += e;
        s2 += e * e;
    }
    const double nn = static_cast<double>(n);
    const double var_excess = std::max(s2 / nn - (s1 / nn) * (s1 / nn), 0.0);
    const double se = std::sqrt(var_excess / nn) / eps.tail_mass();
    return {cvar, se, n};
}

} // namespace droedl::risk
