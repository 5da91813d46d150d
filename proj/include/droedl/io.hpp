#pragma once

// JSON persistence for lookup tables and scenarios, and the CSV writers used
// by the command-line tool.

#include "droedl/control.hpp"
#include "droedl/error.hpp"
#include "droedl/evidential.hpp"
#include "droedl/sim.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace droedl::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// formatting

/// printf-style formatting of one double; fixed format keeps CSVs diffable.
inline std::string fmt(double x, int digits = 6) {
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    std::string s = buf;
    if (s.front() == '-' && s.find_first_not_of("0.", 1) == std::string::npos)
        s.erase(0, 1); // "-0.000" -> "0.000"
    return s;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out)
        throw IoError("write to '" + path + "' failed");
}

inline json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(what + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// lookup table

inline json to_json(const evidential::LookupTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"alpha", r.alpha}, {"u_min", r.u_min}, {"u_max", r.u_max}, {"v_min", r.v_min},
                        {"v_max", r.v_max}});
    return {{"version", t.version}, {"eta", t.eta}, {"alpha_grid", t.alpha_grid}, {"rows", rows}};
}

inline evidential::LookupTable lookup_from_json(const json& j) {
    try {
        evidential::LookupTable t;
        t.version = j.at("version").get<int>();
        if (t.version != evidential::LookupTable::current_version)
            throw IoError("lookup table version " + std::to_string(t.version) + " is not supported (expected " +
                          std::to_string(evidential::LookupTable::current_version) + ")");
        t.eta = j.at("eta").get<double>();
        t.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
        for (const auto& r : j.at("rows"))
            t.rows.push_back({r.at("alpha").get<double>(), r.at("u_min").get<double>(), r.at("u_max").get<double>(),
                              r.at("v_min").get<double>(), r.at("v_max").get<double>()});
        if (t.rows.size() != t.alpha_grid.size() || t.rows.size() < 2)
            throw IoError("lookup table: rows and alpha_grid disagree");
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            if (t.rows[i].alpha != t.alpha_grid[i])
                throw IoError("lookup table: row alpha does not match alpha_grid");
            if (i > 0 && !(t.alpha_grid[i] > t.alpha_grid[i - 1]))
                throw IoError("lookup table: alpha_grid must be strictly increasing");
        }
        return t;
    } catch (const json::exception& e) {
        throw IoError(std::string("lookup table: ") + e.what());
    }
}

inline void save_lookup(const evidential::LookupTable& t, const std::string& path) {
    write_file(path, to_json(t).dump(1) + "\n");
}

inline evidential::LookupTable load_lookup(const std::string& path) {
    return lookup_from_json(parse_json(read_file(path), path));
}

// ---------------------------------------------------------------------------
// scenarios

struct ScenarioFile {
    sim::Scenario scenario;
    control::MPCConfig mpc;
};

namespace detail {

inline control::Vec2 vec2(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 2)
        throw IoError("expected a 2-vector");
    return {v[0], v[1]};
}

} // namespace detail

/// Scenario document. Besides the required keys an optional "epsilon" sets
/// the planner risk level and an optional "mpc" object overrides solver fields.
inline ScenarioFile scenario_from_json(const json& j) {
    try {
        ScenarioFile f;
        auto& sc = f.scenario;
        sc.ego_start.position = detail::vec2(j.at("ego_start").at("position"));
        sc.ego_start.velocity = detail::vec2(j.at("ego_start").at("velocity"));
        sc.goal = detail::vec2(j.at("goal"));
        sc.ego_radius = j.at("ego_radius").get<double>();
        sc.dt = j.at("dt").get<double>();
        const auto steps = j.at("max_steps").get<long long>();
        if (steps < 1)
            throw DomainError("Scenario: max_steps must be >= 1");
        sc.max_steps = static_cast<std::size_t>(steps);
        sc.label = j.at("label").get<std::string>();
        sc.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& o : j.at("obstacles")) {
            sim::ObstacleSpec spec;
            spec.gamma = o.at("gamma").get<std::vector<double>>();
            spec.lambda = o.at("lambda").get<double>();
            spec.alpha = o.at("alpha").get<double>();
            spec.beta = o.at("beta").get<double>();
            spec.eta = o.at("eta").get<double>();
            spec.radius = o.at("radius").get<double>();
            sc.obstacles.push_back(std::move(spec));
        }
        if (j.contains("epsilon"))
            sc.epsilon = j.at("epsilon").get<double>();
        if (j.contains("mpc")) {
            const auto& m = j.at("mpc");
            auto& c = f.mpc;
            c.horizon = m.value("horizon", c.horizon);
            c.n_samples = m.value("n_samples", c.n_samples);
            c.n_elite = m.value("n_elite", c.n_elite);
            c.n_iters = m.value("n_iters", c.n_iters);
            c.u_max = m.value("u_max", c.u_max);
            c.w_goal = m.value("w_goal", c.w_goal);
            c.w_effort = m.value("w_effort", c.w_effort);
            c.w_terminal = m.value("w_terminal", c.w_terminal);
        }
        sc.validate();
        f.mpc.dt = sc.dt;
        f.mpc.goal = sc.goal;
        f.mpc.ego_radius = sc.ego_radius;
        if (sc.epsilon)
            f.mpc.epsilon = risk::RiskLevel(*sc.epsilon);
        f.mpc.validate();
        return f;
    } catch (const json::exception& e) {
        throw IoError(std::string("scenario: ") + e.what());
    }
}

inline ScenarioFile load_scenario(const std::string& path) {
    return scenario_from_json(parse_json(read_file(path), path));
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* batch_csv_header =
    "policy,episodes,success_pct,collision_pct,mean_cost,mean_min_distance,mean_solve_ms";

inline void write_batch_row(std::ostream& out, const sim::BatchMetrics& m) {
    out << sim::to_string(m.policy) << ',' << m.episodes << ',' << fmt(m.success_pct, 2) << ','
        << fmt(m.collision_pct, 2) << ',' << fmt(m.mean_cost, 6) << ',' << fmt(m.mean_min_distance, 6) << ','
        << fmt(m.mean_solve_ms, 3) << '\n';
}

/// One row per visited state; `feasible` is the flag of the plan applied from
/// that state (the final state has none and repeats the last flag).
inline void write_trajectory_csv(std::ostream& out, const sim::EpisodeResult& r, double dt) {
    out << "t,x,y,vx,vy,feasible\n";
    for (std::size_t k = 0; k < r.trajectory.size(); ++k) {
        const auto& s = r.trajectory[k];
        bool f = true;
        if (!r.feasible.empty())
            f = k < r.feasible.size() ? r.feasible[k] : r.feasible.back();
        out << fmt(static_cast<double>(k) * dt, 4) << ',' << fmt(s.position[0]) << ',' << fmt(s.position[1]) << ','
            << fmt(s.velocity[0]) << ',' << fmt(s.velocity[1]) << ',' << (f ? 1 : 0) << '\n';
    }
}

/// HDR contour polygon and surrogate rectangle corners per obstacle axis, in
/// (mu, var) coordinates.
inline void write_contour_csv(std::ostream& out, const sim::Scenario& sc, std::size_t points_per_side = 100) {
    out << "obstacle,axis,kind,index,mu,var\n";
    for (std::size_t o = 0; o < sc.obstacles.size(); ++o) {
        const auto& spec = sc.obstacles[o];
        const auto axes = spec.axes();
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const auto& p = axes[a];
            const double log_c =
                evidential::hdr_log_threshold(p, evidential::Confidence(spec.eta), evidential::default_direct_tol);
            const auto poly = evidential::contour_polygon(p, log_c, points_per_side);
            for (std::size_t i = 0; i < poly.size(); ++i)
                out << o << ',' << a << ",contour," << i << ',' << fmt(poly[i].mu, 9) << ',' << fmt(poly[i].var, 9)
                    << '\n';
            const auto s = evidential::contour_extrema_log(p, log_c);
            const double corners[4][2] = {
                {s.mu_min, s.var_min}, {s.mu_max, s.var_min}, {s.mu_max, s.var_max}, {s.mu_min, s.var_max}};
            for (int i = 0; i < 4; ++i)
                out << o << ',' << a << ",rectangle," << i << ',' << fmt(corners[i][0], 9) << ','
                    << fmt(corners[i][1], 9) << '\n';
        }
    }
}

} // namespace droedl::io
