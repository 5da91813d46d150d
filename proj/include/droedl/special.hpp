#pragma once

// Standard normal pdf/cdf/quantile and the inverse error functions.
//
// The quantile starts from Acklam's rational approximation (relative error
// about 1e-9) and is polished by Halley steps against the library erfc, which
// brings it to full double precision. A bracketed Brent solve is the fallback
// if the polish ever fails to settle.

#include "droedl/error.hpp"
#include "droedl/numeric.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace droedl::special {

inline constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934381868;

inline double norm_pdf(double x) { return inv_sqrt_2pi * std::exp(-0.5 * x * x); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail 1 - Phi(x) without cancellation.
inline double norm_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

namespace detail {

inline double acklam(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Lower-half quantile, p in (0, 0.5].
inline double lower_quantile(double p) {
    double x = acklam(p);
    for (int i = 0; i < 8; ++i) {
        const double err = norm_cdf(x) - p;
        const double u = err / norm_pdf(x);
        const double step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
            return x;
    }
    auto f = [p](double t) { return norm_cdf(t) - p; };
    double lo = x - 1.0, hi = std::min(x + 1.0, 0.0);
    while (f(lo) > 0.0)
        lo -= 2.0 * (hi - lo);
    return numeric::find_root(f, lo, hi, 1e-16);
}

} // namespace detail

/// Standard normal quantile. p must lie in [0, 1]; the endpoints map to -inf/+inf.
inline double norm_quantile(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw DomainError("norm_quantile: probability outside [0, 1]");
    if (p == 0.0)
        return -std::numeric_limits<double>::infinity();
    if (p == 1.0)
        return std::numeric_limits<double>::infinity();
    if (p == 0.5)
        return 0.0;
    if (p < 0.5)
        return detail::lower_quantile(p);
    return -detail::lower_quantile(1.0 - p);
}

/// Inverse of erf on [-1, 1].
inline double erf_inv(double y) {
    if (!(y >= -1.0 && y <= 1.0))
        throw DomainError("erf_inv: argument outside [-1, 1]");
    // erf(x) = 2 Phi(x sqrt2) - 1
    if (y < 0.0)
        return norm_quantile(0.5 * (1.0 + y)) / std::numbers::sqrt2;
    return -norm_quantile(0.5 * (1.0 - y)) / std::numbers::sqrt2;
}

/// Inverse of erfc on [0, 2].
inline double erfc_inv(double q) {
    if (!(q >= 0.0 && q <= 2.0))
        throw DomainError("erfc_inv: argument outside [0, 2]");
    return -norm_quantile(0.5 * q) / std::numbers::sqrt2;
}

/// erf^{-1}(eps - 1) evaluated from eps directly, avoiding the cancellation in
/// eps - 1 when eps is tiny.
inline double erf_inv_shifted(double eps) {
    if (!(eps >= 0.0 && eps <= 2.0))
        throw DomainError("erf_inv_shifted: argument outside [0, 2]");
    return norm_quantile(0.5 * eps) / std::numbers::sqrt2;
}

} // namespace droedl::special
