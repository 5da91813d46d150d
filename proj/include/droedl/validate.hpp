#pragma once

// Self-check suites run by `dro_edl validate`: each check compares a library
// routine with an independent route (quadrature of a different integrand,
// brute-force grids, exact CDF evaluation) over seeded random configurations.

#include "droedl/evidential.hpp"
#include "droedl/numeric.hpp"
#include "droedl/rng.hpp"
#include "droedl/risk.hpp"
#include "droedl/robust.hpp"
#include "droedl/special.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace droedl::validate {

struct CheckResult {
    std::string suite;
    std::string name;
    bool passed = true;
    bool counted = true; // informational checks do not affect the exit status
    double worst = 0.0;  // worst observed margin; >= 0 means the check held everywhere
    std::size_t cases = 0;
    std::string note;
};

struct Report {
    std::vector<CheckResult> checks;

    bool ok() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return !c.counted || c.passed; });
    }
};

namespace detail {

// Accumulates a margin (required >= 0) over cases.
struct Margin {
    double worst = std::numeric_limits<double>::infinity();
    std::size_t cases = 0;
    void add(double m) {
        worst = std::min(worst, std::isnan(m) ? -std::numeric_limits<double>::infinity() : m);
        ++cases;
    }
    CheckResult result(std::string suite, std::string name, std::string note = {}) const {
        return {std::move(suite), std::move(name), worst >= 0.0, true, cases > 0 ? worst : 0.0, cases,
                std::move(note)};
    }
};

inline double uniform(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// E[X^2 ; |X| <= a] for X ~ N(mu, sigma^2)
inline double second_moment_inside(const risk::GaussianScalar& g, double a) {
    auto f = [&](double x) { return x * x * special::norm_pdf((x - g.mu) / g.sigma) / g.sigma; };
    const auto segs = static_cast<std::size_t>(std::ceil(2.0 * a / g.sigma)) + 1;
    return numeric::integrate(f, -a, a, 1e-13, segs).value;
}

// E[X ; X >= k] for X ~ N(mu, sigma^2), by quadrature
inline double upper_partial_mean(const risk::GaussianScalar& g, double k) {
    auto f = [&](double x) { return x * special::norm_pdf((x - g.mu) / g.sigma) / g.sigma; };
    const double hi = std::max(k, g.mu) + 14.0 * g.sigma;
    const auto segs = static_cast<std::size_t>(std::ceil((hi - k) / g.sigma));
    return numeric::integrate(f, k, hi, 1e-13, segs).value;
}

} // namespace detail

inline constexpr double lemma_quad_slack = 1e-8;

/// Inequalities and identities of the Gaussian / folded-normal risk analytics.
inline std::vector<CheckResult> run_lemmas(std::uint64_t seed, std::size_t n) {
    CounterRng rng(seed, 1);
    detail::Margin cdf_id, closed_form, square_id, ordering, cvar_square, mono, tail_bound, kappa_q, delta_q;
    std::size_t literal_violations = 0;
    double literal_worst = std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < n; ++i) {
        const double mu = detail::uniform(rng, -3.0, 3.0);
        const double sigma = detail::uniform(rng, 0.1, 3.0);
        const risk::RiskLevel eps(detail::uniform(rng, 0.05, 0.95));
        const risk::GaussianScalar g(mu, sigma);
        const double k = risk::var_neg_abs(g, eps);

        // the quantile solves F_{-|X|}(k) = eps
        cdf_id.add(1e-12 - std::abs(risk::detail::neg_abs_cdf(g, k) - eps.value()));

        // mu = 0 closed form against the general root finder on the same sigma
        {
            const risk::GaussianScalar g0(0.0, sigma);
            auto f = [&](double t) { return risk::detail::neg_abs_cdf(g0, t) - eps.value(); };
            const double root = numeric::find_root(f, -10.0 * sigma, 0.0, 1e-15 * sigma);
            closed_form.add(1e-9 - std::abs(risk::var_neg_abs(g0, eps) - root));
        }

        // VaR_eps[-X^2] = -VaR_eps[-|X|]^2: P[-X^2 <= -k^2] = P[|X| >= |k|] must equal eps
        {
            const double a = std::abs(k);
            const double p = special::norm_sf((a - mu) / sigma) + special::norm_cdf((-a - mu) / sigma);
            square_id.add(1e-12 - std::abs(p - eps.value()));
        }

        // strict in exact arithmetic; the gap underflows when almost all mass sits below 0
        const double fp_slack = 1e-12 * (std::abs(mu) + sigma);
        ordering.add(risk::var_normal(g, eps) - k + fp_slack);

        // CVaR_eps[-X^2] <= -CVaR_eps[-|X|]^2; the upper tail of -X^2 is {|X| <= |k|}
        const double cvar_sq = -detail::second_moment_inside(g, std::abs(k)) / eps.tail_mass();
        const double cvar_abs = risk::cvar_neg_abs(g, eps);
        cvar_square.add(-cvar_abs * cvar_abs - cvar_sq + lemma_quad_slack);

        // literal statement with the complementary level on the right-hand side
        {
            // CVaR_{1-eps}[|X|] is the mean of |X| over its upper eps tail, i.e. minus the
            // mean of -|X| over its lower eps tail
            const double total_mean = risk::cvar_neg_abs(g, risk::RiskLevel(0.0));
            const double upper = risk::cvar_neg_abs(g, eps) * eps.tail_mass();
            const double lower_mean_neg_abs = (total_mean - upper) / eps.value();
            const double cvar_abs_comp = -lower_mean_neg_abs;
            const double margin = -cvar_abs_comp * cvar_abs_comp - cvar_sq;
            literal_worst = std::min(literal_worst, margin);
            if (margin < -lemma_quad_slack)
                ++literal_violations;
        }

        // -|mu| + delta sigma > CVaR_eps[-|X|] whenever VaR_eps[X] and mu share a sign
        const double v = risk::var_normal(g, eps);
        if ((v > 0.0 && mu > 0.0) || (v < 0.0 && mu < 0.0))
            tail_bound.add(-std::abs(mu) + risk::delta(eps) * sigma - cvar_abs + fp_slack);

        // closed forms against quadrature
        kappa_q.add(1e-6 * std::abs(risk::kappa(eps)) * sigma -
                    std::abs(risk::kappa(eps) * sigma - risk::cvar_neg_abs(risk::GaussianScalar(0.0, sigma), eps)));
        {
            const double q = risk::var_normal(g, eps);
            const double tail_mean = detail::upper_partial_mean(g, q) / eps.tail_mass();
            delta_q.add(1e-8 * std::max(1.0, std::abs(tail_mean)) - std::abs(mu + risk::delta(eps) * sigma - tail_mean));
        }
    }

    // strict decrease of CVaR_eps[-|X|] in |mu| on a grid
    for (double eps_v : {0.1, 0.5, 0.9}) {
        for (double sigma : {0.3, 1.0, 2.5}) {
            const risk::RiskLevel eps(eps_v);
            double prev = risk::cvar_neg_abs(risk::GaussianScalar(0.0, sigma), eps);
            for (int j = 1; j <= 40; ++j) {
                const double m = 0.1 * j;
                const double cur = risk::cvar_neg_abs(risk::GaussianScalar(j % 2 ? m : -m, sigma), eps);
                mono.add(prev - cur);
                prev = cur;
            }
        }
    }

    std::vector<CheckResult> out;
    out.push_back(cdf_id.result("lemmas", "var-neg-abs-cdf-identity"));
    out.push_back(closed_form.result("lemmas", "var-neg-abs-closed-form"));
    out.push_back(square_id.result("lemmas", "var-square-identity"));
    out.push_back(ordering.result("lemmas", "var-ordering"));
    out.push_back(cvar_square.result("lemmas", "cvar-square-inequality"));
    out.push_back(mono.result("lemmas", "cvar-monotone-in-abs-mu"));
    out.push_back(tail_bound.result("lemmas", "cvar-tail-premium-bound"));
    out.push_back(kappa_q.result("lemmas", "kappa-vs-quadrature"));
    out.push_back(delta_q.result("lemmas", "delta-vs-quadrature"));

    CheckResult literal;
    literal.suite = "lemmas";
    literal.name = "conversion-complementary-level";
    literal.counted = false;
    literal.passed = literal_violations == 0;
    literal.worst = literal_worst;
    literal.cases = n;
    literal.note = "informational: " + std::to_string(literal_violations) + "/" + std::to_string(n) +
                   " configurations violate CVaR_eps[-X^2] <= -CVaR_{1-eps}[|X|]^2";
    out.push_back(literal);
    return out;
}

/// Worst-case bound against the brute-force surrogate-rectangle maximum.
inline std::vector<CheckResult> run_proposition(std::uint64_t seed, std::size_t n) {
    CounterRng rng(seed, 2);
    detail::Margin conservative, equality, negative;
    for (std::size_t i = 0; i < n; ++i) {
        evidential::SurrogateSet s;
        s.gamma = detail::uniform(rng, -2.0, 2.0);
        const double hw = detail::uniform(rng, 0.05, 2.0);
        s.mu_min = s.gamma - hw;
        s.mu_max = s.gamma + hw;
        s.var_min = detail::uniform(rng, 0.02, 1.0);
        s.var_max = s.var_min * detail::uniform(rng, 1.1, 5.0);
        const risk::RiskLevel eps(detail::uniform(rng, 0.05, 0.95));
        const double reach = hw + risk::delta(eps) * s.sigma_max();
        const double c = s.gamma + detail::uniform(rng, -1.5, 1.5) * reach;
        const auto b = robust::axis_worst_cvar_bound(c, s, eps);
        const auto o = robust::oracle_axis_worst_cvar(c, s, eps, 64);
        conservative.add(b.value - o.value + 1e-6);
        negative.add(-b.value - 1e-12);
        if (b.case_tag == robust::BoundCase::InMu)
            equality.add(1e-6 - std::abs(b.value - o.value));
    }
    return {conservative.result("proposition", "bound-conservative"),
            equality.result("proposition", "in-mu-equality"), negative.result("proposition", "bound-negative")};
}

/// HDR threshold self-consistency and the contour-in-rectangle relation.
inline std::vector<CheckResult> run_contour(std::uint64_t seed, std::size_t n) {
    CounterRng rng(seed, 3);
    detail::Margin mass, inside, level, mode_inside;
    for (std::size_t i = 0; i < n; ++i) {
        const evidential::NIGParams p(detail::uniform(rng, -5.0, 5.0), std::exp(detail::uniform(rng, -2.0, 3.0)),
                                      std::exp(detail::uniform(rng, std::log(1.05), std::log(10.0))),
                                      std::exp(detail::uniform(rng, -3.0, 2.0)));
        for (double eta_v : {0.8, 0.9, 0.95}) {
            const evidential::Confidence eta(eta_v);
            const double log_c = evidential::hdr_log_threshold(p, eta, 1e-6);
            mass.add(1e-3 - std::abs(evidential::hdr_mass_log(p, log_c, 1e-8) - eta_v));
            const auto s = evidential::contour_extrema_log(p, log_c);
            const double scale_mu = std::max(1.0, s.half_width());
            for (const auto& q : evidential::contour_polygon(p, log_c, 400)) {
                const double dm = std::min(q.mu - s.mu_min, s.mu_max - q.mu) / scale_mu;
                const double dv = std::min(q.var - s.var_min, s.var_max - q.var) / s.var_max;
                inside.add(std::min(dm, dv) + 1e-9);
            }
            const double var_turn = evidential::contour_turning_variance(p, log_c);
            const double pts[4][2] = {{p.gamma, s.var_min}, {p.gamma, s.var_max}, {s.mu_min, var_turn}, {s.mu_max, var_turn}};
            for (const auto& pt : pts)
                level.add(1e-8 - std::abs(std::expm1(evidential::nig_log_density(p, pt[0], pt[1]) - log_c)));
            const auto [mm, mv] = evidential::nig_mode(p);
            mode_inside.add(s.contains(mm, mv) && s.var_min < mv && mv < s.var_max ? 0.0 : -1.0);
        }
    }
    return {mass.result("contour", "threshold-mass"), inside.result("contour", "contour-inside-rectangle"),
            level.result("contour", "extreme-points-on-contour"), mode_inside.result("contour", "mode-inside")};
}

/// Destandardized table rows against direct computation, and interpolation error.
inline std::vector<CheckResult> run_lookup(std::uint64_t seed, std::size_t n) {
    CounterRng rng(seed, 4);
    const evidential::Confidence eta(0.9);
    const auto grid = evidential::default_alpha_grid(128);
    const auto table = evidential::build_lookup(eta, grid, 1e-9);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
    auto set_rel = [&](const evidential::SurrogateSet& a, const evidential::SurrogateSet& b) {
        const double scale = std::max(b.half_width(), 1e-300);
        return std::max({std::abs(a.mu_min - b.mu_min) / scale, std::abs(a.mu_max - b.mu_max) / scale,
                         rel(a.var_min, b.var_min), rel(a.var_max, b.var_max)});
    };
    detail::Margin invariance, interp, symmetry;
    for (std::size_t i = 0; i < n; ++i) {
        const double alpha = grid[static_cast<std::size_t>(rng.uniform() * static_cast<double>(grid.size()))];
        const evidential::NIGParams p(detail::uniform(rng, -10.0, 10.0), std::exp(detail::uniform(rng, -2.0, 3.0)),
                                      alpha, std::exp(detail::uniform(rng, -3.0, 2.0)));
        const auto via_table = evidential::surrogate_from_params(p, eta, &table);
        const auto direct = evidential::surrogate_from_params(p, eta);
        invariance.add(1e-4 - set_rel(via_table, direct));
    }
    for (std::size_t i = 0; i + 1 < grid.size(); i += 7) {
        const double alpha = 0.5 * (grid[i] + grid[i + 1]);
        const evidential::NIGParams p(0.0, 1.0, alpha, 1.0);
        interp.add(1e-3 - set_rel(evidential::surrogate_from_params(p, eta, &table),
                                  evidential::surrogate_from_params(p, eta)));
    }
    for (const auto& r : table.rows)
        symmetry.add(1e-9 - std::abs(r.u_min + r.u_max));
    return {invariance.result("lookup", "destandardized-rows"), interp.result("lookup", "alpha-interpolation"),
            symmetry.result("lookup", "row-symmetry")};
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"lemmas", "proposition", "contour", "lookup"};
    return names;
}

inline Report run_suites(const std::string& suite, std::uint64_t seed, std::size_t n) {
    Report r;
    auto add = [&](std::vector<CheckResult> v) { r.checks.insert(r.checks.end(), v.begin(), v.end()); };
    const bool all = suite == "all";
    if (all || suite == "lemmas")
        add(run_lemmas(seed, n));
    if (all || suite == "proposition")
        add(run_proposition(seed, n));
    if (all || suite == "contour")
        add(run_contour(seed, std::max<std::size_t>(1, n / 10)));
    if (all || suite == "lookup")
        add(run_lookup(seed, std::max<std::size_t>(1, n / 4)));
    if (r.checks.empty())
        throw DomainError("unknown suite '" + suite + "' (lemmas | proposition | contour | lookup | all)");
    return r;
}

/// One line per check, then a machine-readable summary line.
inline void write_report(std::ostream& out, const Report& r, const std::string& suite, std::uint64_t seed,
                         std::size_t n) {
    std::size_t passed = 0, failed = 0;
    char buf[512];
    for (const auto& c : r.checks) {
        const char* status = !c.counted ? "info" : (c.passed ? "pass" : "FAIL");
        std::snprintf(buf, sizeof buf, "%-12s %-34s %-4s worst_margin=% .6e cases=%zu", c.suite.c_str(),
                      c.name.c_str(), status, c.worst, c.cases);
        out << buf;
        if (!c.note.empty())
            out << "  " << c.note;
        out << '\n';
        if (c.counted)
            (c.passed ? passed : failed)++;
    }
    out << "summary suite=" << suite << " seed=" << seed << " n=" << n << " checks=" << (passed + failed)
        << " passed=" << passed << " failed=" << failed << " status=" << (r.ok() ? "ok" : "fail") << '\n';
}

} // namespace droedl::validate
