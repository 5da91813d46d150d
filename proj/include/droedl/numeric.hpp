#pragma once

// Adaptive Gauss-Kronrod quadrature and bracketed root finding.

#include "droedl/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <sstream>
#include <utility>
#include <vector>

namespace droedl::numeric {

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};

inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// 7-point Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b;
    double value, error;
    int depth;
    bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F> Segment gk15(F& f, double a, double b, int depth) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kronrod_weights[7];
    double gauss = fc * gauss_weights[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kronrod_nodes[j];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += kronrod_weights[j] * sum;
        if (j % 2 == 1)
            gauss += gauss_weights[j / 2] * sum;
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half), depth};
}

} // namespace detail

/// Globally adaptive 15-point Gauss-Kronrod quadrature on [a, b].
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate drops below `abs_tol`. Throws NumericalFailure when `max_depth`
/// bisection levels or `max_segments` are exhausted first. `initial_segments`
/// pre-splits [a, b] so narrow peaks cannot fall between the first nodes.
template <class F>
QuadResult integrate(F&& f, double a, double b, double abs_tol, std::size_t initial_segments = 1,
                     int max_depth = 60, std::size_t max_segments = 4000) {
    if (!(a < b))
        return {0.0, 0.0, 0};
    std::priority_queue<detail::Segment> heap;
    double total = 0.0;
    double error = 0.0;
    std::size_t evals = 0;
    initial_segments = std::max<std::size_t>(initial_segments, 1);
    for (std::size_t i = 0; i < initial_segments; ++i) {
        const double lo = a + (b - a) * static_cast<double>(i) / static_cast<double>(initial_segments);
        const double hi = (i + 1 == initial_segments)
                              ? b
                              : a + (b - a) * static_cast<double>(i + 1) / static_cast<double>(initial_segments);
        heap.push(detail::gk15(f, lo, hi, 0));
        evals += 15;
    }
    {
        auto copy = heap;
        while (!copy.empty()) {
            total += copy.top().value;
            error += copy.top().error;
            copy.pop();
        }
    }

    while (error > abs_tol) {
        if (heap.size() >= max_segments || heap.top().depth >= max_depth) {
            std::ostringstream msg;
            msg << "quadrature on [" << a << ", " << b << "] stalled at error " << error
                << " (tolerance " << abs_tol << ", " << heap.size() << " segments)";
            throw NumericalFailure(msg.str());
        }
        const detail::Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = detail::gk15(f, worst.a, mid, worst.depth + 1);
        const auto right = detail::gk15(f, mid, worst.b, worst.depth + 1);
        evals += 30;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // re-sum occasionally so cancellation in the running totals cannot drift
        if (heap.size() % 64 == 0) {
            auto copy = heap;
            total = 0.0;
            error = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                error += copy.top().error;
                copy.pop();
            }
        }
    }
    return {total, error, evals};
}

/// Brent's method on a sign-changing bracket [a, b].
///
/// Combines bisection with secant and inverse quadratic steps. Returns the
/// root to within `x_tol` (absolute) plus a few ulps of the iterate.
template <class F> double find_root(F&& f, double a, double b, double x_tol, int max_iter = 300) {
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0)
        return a;
    if (fb == 0.0)
        return b;
    if ((fa > 0.0) == (fb > 0.0)) {
        std::ostringstream msg;
        msg << "root not bracketed: f(" << a << ") = " << fa << ", f(" << b << ") = " << fb;
        throw NumericalFailure(msg.str());
    }
    double c = a, fc = fa;
    double d = b - a, e = d;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int iter = 0; iter < max_iter; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol = 2.0 * eps * std::abs(b) + 0.5 * x_tol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0)
            return b;
        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                const double qa = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0)
                q = -q;
            else
                p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
    }
    std::ostringstream msg;
    msg << "root finder did not converge near " << b << " (f = " << fb << ")";
    throw NumericalFailure(msg.str());
}

/// Evenly spaced points including both endpoints.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t i = 0; i < n; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    out.back() = hi;
    return out;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
    auto out = linspace(std::log(lo), std::log(hi), n);
    for (auto& v : out)
        v = std::exp(v);
    out.front() = lo;
    out.back() = hi;
    return out;
}

} // namespace droedl::numeric
