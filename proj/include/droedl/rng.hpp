#pragma once

// Counter-based random numbers keyed by (seed, stream).
//
// Every draw is a pure function of (key, counter), so any stream can be
// replayed or evaluated on another thread without shared state. Sampling
// algorithms are implemented here rather than taken from <random> because
// the standard distributions are not specified bit-for-bit across libraries.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace droedl {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a child seed; used for per-episode, per-iteration and per-sample streams.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) + mix64(a + 0x9e3779b97f4a7c15ULL) * 3 +
                 mix64(b ^ 0xbb67ae8584caa73bULL));
}

class CounterRng {
  public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(derive_seed(seed, stream, 0x5851f42d4c957f2dULL)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    /// Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 uses the boosting identity.
    double gamma(double shape) {
        if (shape < 1.0)
            return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x)
                return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v;
        }
    }

    /// Inverse-gamma with density proportional to y^{-shape-1} exp(-scale / y).
    double inverse_gamma(double shape, double scale) { return scale / gamma(shape); }

    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace droedl
