#pragma once

// Reference computations for the tests. Everything here goes through Boost.Math
// or plain brute force, never through the library routine under test.

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline double norm_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }
inline double norm_cdf(double x) { return boost::math::cdf(boost::math::normal(), x); }

inline double erf_inv(double y) { return boost::math::erf_inv(y); }

template <class F>
double integrate(F f, double a, double b) {
    // split so that narrow Gaussian bumps are never skipped
    const int pieces = 32;
    double total = 0.0;
    for (int i = 0; i < pieces; ++i) {
        const double lo = a + (b - a) * i / pieces;
        const double hi = a + (b - a) * (i + 1) / pieces;
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 8, 1e-13);
    }
    return total;
}

template <class F>
double bisect(F f, double lo, double hi) {
    auto tol = [](double a, double b) { return std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)); };
    std::uintmax_t it = 500;
    auto r = boost::math::tools::bisect(f, lo, hi, tol, it);
    return 0.5 * (r.first + r.second);
}

// Quantile k <= 0 of -|X|, X ~ N(mu, sigma^2), by bisection on the exact CDF.
inline double var_neg_abs(double mu, double sigma, double eps) {
    auto F = [&](double k) {
        return norm_cdf((k - mu) / sigma) + norm_cdf((k + mu) / sigma) - eps;
    };
    return bisect(F, -(std::abs(mu) + 40.0 * sigma), 0.0);
}

// CVaR_eps[-|X|] = -E[|X| ; |X| <= a] / (1 - eps) with a = -VaR.
inline double cvar_neg_abs(double mu, double sigma, double eps) {
    const double a = eps > 0.0 ? -var_neg_abs(mu, sigma, eps) : std::abs(mu) + 14.0 * sigma;
    auto f = [&](double x) { return std::abs(x) * phi((x - mu) / sigma) / sigma; };
    const double lo = std::max(-a, mu - 14.0 * sigma), hi = std::min(a, mu + 14.0 * sigma);
    if (!(lo < hi))
        return 0.0;
    // |x| has a kink at 0, so integrate the two sides separately
    double m = 0.0;
    if (lo < 0.0)
        m += integrate(f, lo, std::min(0.0, hi));
    if (hi > 0.0)
        m += integrate(f, std::max(0.0, lo), hi);
    return -m / (1.0 - eps);
}

// E[X | X >= VaR_eps[X]] by quadrature of the truncated normal.
inline double upper_tail_mean(double mu, double sigma, double eps) {
    const double q = mu + sigma * norm_quantile(eps);
    auto f = [&](double x) { return x * phi((x - mu) / sigma) / sigma; };
    return integrate(f, q, std::max(q, mu) + 14.0 * sigma) / (1.0 - eps);
}

// CVaR_eps[-X^2]: upper tail of -X^2 is {|X| <= a}.
inline double cvar_neg_square(double mu, double sigma, double eps) {
    const double a = -var_neg_abs(mu, sigma, eps);
    auto f = [&](double x) { return x * x * phi((x - mu) / sigma) / sigma; };
    const double lo = std::max(-a, mu - 14.0 * sigma), hi = std::min(a, mu + 14.0 * sigma);
    if (!(lo < hi))
        return 0.0;
    return -integrate(f, lo, hi) / (1.0 - eps);
}

// ---------------------------------------------------------------------------
// NIG

struct Nig {
    double gamma, lambda, alpha, beta;

    double log_density(double mu, double var) const {
        const double d = mu - gamma;
        return 0.5 * std::log(lambda / (2.0 * std::numbers::pi)) + alpha * std::log(beta) - std::lgamma(alpha) -
               (alpha + 1.5) * std::log(var) - (2.0 * beta + lambda * d * d) / (2.0 * var);
    }
    std::pair<double, double> mode() const { return {gamma, 2.0 * beta / (2.0 * alpha + 3.0)}; }
};

struct Box {
    double mu_min, mu_max, var_min, var_max;
};

// Marches rays out of the mode (superlevel sets are star-shaped about it)
// to the level log_c; returns (mu, var) points.
class ContourTracer {
  public:
    ContourTracer(const Nig& p, double log_c) : p_(p), log_c_(log_c) {
        v0_ = p.mode().second;
        s_mu_ = std::sqrt(p.beta / p.lambda);
        s_var_ = v0_;
    }

    std::pair<double, double> point(double theta) const {
        const double c = std::cos(theta), s = std::sin(theta);
        auto at = [&](double r) { return std::pair{p_.gamma + r * c * s_mu_, v0_ + r * s * s_var_}; };
        auto g = [&](double r) {
            const auto [m, v] = at(r);
            return p_.log_density(m, v) - log_c_;
        };
        double r_max = std::numeric_limits<double>::infinity();
        if (s < 0.0)
            r_max = v0_ / (-s * s_var_) * (1.0 - 1e-15);
        double hi = 1.0;
        while (hi < r_max && g(hi) > 0.0)
            hi *= 2.0;
        hi = std::min(hi, r_max);
        const double r = bisect(g, 0.0, hi);
        return at(r);
    }

    std::vector<std::pair<double, double>> trace(std::size_t n) const {
        std::vector<std::pair<double, double>> out;
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(point(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
        return out;
    }

    // Bounding box of n traced points, with each extreme refined by Brent
    // minimisation over the angle around its best sample.
    Box bounding_box(std::size_t n) const {
        const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
        std::size_t i_mu_min = 0, i_mu_max = 0, i_v_min = 0, i_v_max = 0;
        std::vector<std::pair<double, double>> pts = trace(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (pts[i].first < pts[i_mu_min].first) i_mu_min = i;
            if (pts[i].first > pts[i_mu_max].first) i_mu_max = i;
            if (pts[i].second < pts[i_v_min].second) i_v_min = i;
            if (pts[i].second > pts[i_v_max].second) i_v_max = i;
        }
        auto refine = [&](std::size_t i, int coord, double sign) {
            auto f = [&](double t) {
                const auto q = point(t);
                return sign * (coord == 0 ? q.first : q.second);
            };
            const double t0 = h * static_cast<double>(i);
            auto r = boost::math::tools::brent_find_minima(f, t0 - h, t0 + h, 52);
            return sign * std::min(r.second, f(t0));
        };
        return {refine(i_mu_min, 0, 1.0), refine(i_mu_max, 0, -1.0), refine(i_v_min, 1, 1.0),
                refine(i_v_max, 1, -1.0)};
    }

  private:
    Nig p_;
    double log_c_;
    double v0_, s_mu_, s_var_;
};

// Monte Carlo mass of {density >= exp(log_c)} with an independent generator.
inline std::pair<double, double> mc_hdr_mass(const Nig& p, double log_c, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::gamma_distribution<double> gam(p.alpha, 1.0);
    std::normal_distribution<double> nrm(0.0, 1.0);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double var = p.beta / gam(gen);
        const double mu = p.gamma + std::sqrt(var / p.lambda) * nrm(gen);
        hit += p.log_density(mu, var) >= log_c ? 1 : 0;
    }
    const double m = static_cast<double>(hit) / static_cast<double>(n);
    return {m, std::sqrt(m * (1.0 - m) / static_cast<double>(n))};
}

} // namespace oracle
