// dro_edl: lookup-table precomputation, risk queries, simulation batches and
// self-check suites.

#include "droedl/evidential.hpp"
#include "droedl/io.hpp"
#include "droedl/risk.hpp"
#include "droedl/sim.hpp"
#include "droedl/validate.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace droedl;

namespace {

// Fails early when `path` cannot be created or overwritten.
void check_writable(const std::string& path) {
    const fs::path p(path);
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    if (!fs::is_directory(dir))
        throw IoError("output directory '" + dir.string() + "' does not exist");
    if (fs::is_directory(p))
        throw IoError("output path '" + path + "' is a directory");
    std::ofstream probe(path, std::ios::app);
    if (!probe)
        throw IoError("cannot write '" + path + "'");
}

std::string sibling(const std::string& out, const std::string& suffix) {
    fs::path p(out);
    const std::string stem = p.stem().string();
    return (p.parent_path() / (stem + suffix)).string();
}

struct PrecomputeArgs {
    double eta = 0.9;
    double alpha_min = evidential::table_alpha_min;
    double alpha_max = evidential::table_alpha_max;
    std::size_t grid = 128;
    std::string out;
};

int cmd_precompute(const PrecomputeArgs& a) {
    if (a.alpha_min < evidential::table_alpha_min || a.alpha_max > evidential::table_alpha_max)
        throw DomainError("alpha range must lie within [1.01, 10]");
    if (!(a.alpha_min < a.alpha_max))
        throw DomainError("--alpha-min must be below --alpha-max");
    if (a.grid < evidential::table_min_rows)
        throw DomainError("--grid must be at least 64");
    const evidential::Confidence eta(a.eta);
    check_writable(a.out);

    const auto grid = numeric::logspace(a.alpha_min, a.alpha_max, a.grid);
    const auto table = evidential::build_lookup(eta, grid, evidential::default_direct_tol);
    io::save_lookup(table, a.out);

    // interpolation error at every grid midpoint against direct computation
    double max_err = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double alpha = 0.5 * (grid[i] + grid[i + 1]);
        const auto got = evidential::interpolate_row(table, alpha);
        const auto ref = evidential::standardized_row(alpha, eta, evidential::default_direct_tol);
        max_err = std::max({max_err, std::abs(got.u_max - ref.u_max) / ref.u_max,
                            std::abs(got.v_min - ref.v_min) / ref.v_min, std::abs(got.v_max - ref.v_max) / ref.v_max});
    }
    std::cout << "wrote " << a.out << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", max_err);
    std::cout << "rows=" << table.rows.size() << " max_validation_error=" << buf << '\n';
    return 0;
}

struct RiskArgs {
    double mu = 0.0;
    double sigma = 1.0;
    double eps = 0.5;
    std::string quantity;
};

int cmd_risk(const RiskArgs& a) {
    const risk::RiskLevel eps(a.eps);
    double v = 0.0;
    if (a.quantity == "kappa")
        v = risk::kappa(eps);
    else if (a.quantity == "delta")
        v = risk::delta(eps);
    else if (a.quantity == "var-neg-abs")
        v = risk::var_neg_abs(risk::GaussianScalar(a.mu, a.sigma), eps);
    else
        v = risk::cvar_neg_abs(risk::GaussianScalar(a.mu, a.sigma), eps);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::cout << a.quantity << '=' << buf << '\n';
    return 0;
}

struct SimulateArgs {
    std::string scenario;
    std::string policy = "dr-edl-cvar";
    std::size_t episodes = 1;
    std::string table;
    std::string out;
    bool timing = false;
};

int cmd_simulate(const SimulateArgs& a) {
    const auto kind = sim::parse_policy(a.policy);
    if (a.episodes < 1)
        throw DomainError("--episodes must be >= 1");
    const auto file = io::load_scenario(a.scenario);
    std::optional<evidential::LookupTable> table;
    if (!a.table.empty())
        table = io::load_lookup(a.table);
    const std::string traj_path = sibling(a.out, "_trajectory.csv");
    const std::string contour_path = sibling(a.out, "_contour.csv");
    check_writable(a.out);
    check_writable(traj_path);
    check_writable(contour_path);

    if (table)
        for (const auto& o : file.scenario.obstacles)
            if (o.eta != table->eta)
                std::cerr << "note: obstacle eta " << o.eta << " differs from the table's " << table->eta
                          << "; using direct computation for it\n";

    sim::EpisodeOptions opt;
    opt.measure_time = a.timing;
    std::vector<sim::EpisodeResult> episodes;
    const auto m = sim::run_batch(file.scenario, kind, file.mpc, a.episodes, file.scenario.seed,
                                  table ? &*table : nullptr, opt, &episodes);

    std::ostringstream csv;
    csv << io::batch_csv_header << '\n';
    io::write_batch_row(csv, m);
    io::write_file(a.out, csv.str());

    std::ostringstream traj;
    io::write_trajectory_csv(traj, episodes.front(), file.scenario.dt);
    io::write_file(traj_path, traj.str());

    std::ostringstream contour;
    io::write_contour_csv(contour, file.scenario);
    io::write_file(contour_path, contour.str());

    std::cout << "wrote " << a.out << ", " << traj_path << ", " << contour_path << '\n';
    std::cout << io::batch_csv_header << '\n';
    io::write_batch_row(std::cout, m);
    return 0;
}

struct ValidateArgs {
    std::string suite = "all";
    std::uint64_t seed = 0;
    std::size_t n = 200;
};

int cmd_validate(const ValidateArgs& a) {
    if (a.n < 1)
        throw DomainError("--n must be >= 1");
    const auto report = validate::run_suites(a.suite, a.seed, a.n);
    validate::write_report(std::cout, report, a.suite, a.seed, a.n);
    return report.ok() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributionally robust CVaR constraints from evidential (NIG) predictions"};
    app.require_subcommand(1);

    PrecomputeArgs pre;
    auto* c_pre = app.add_subcommand("precompute", "build and save the standardized lookup table");
    c_pre->add_option("--eta", pre.eta, "HDR confidence in (0, 1)")->required();
    c_pre->add_option("--alpha-min", pre.alpha_min, "smallest alpha (>= 1.01)")->capture_default_str();
    c_pre->add_option("--alpha-max", pre.alpha_max, "largest alpha (<= 10)")->capture_default_str();
    c_pre->add_option("--grid", pre.grid, "number of log-spaced alpha values (>= 64)")->capture_default_str();
    c_pre->add_option("--out", pre.out, "output JSON path")->required();

    RiskArgs rk;
    auto* c_risk = app.add_subcommand("risk", "evaluate one risk quantity");
    c_risk->add_option("--mu", rk.mu, "mean")->capture_default_str();
    c_risk->add_option("--sigma", rk.sigma, "standard deviation")->capture_default_str();
    c_risk->add_option("--eps", rk.eps, "risk level in [0, 1)")->required();
    c_risk->add_option("--quantity", rk.quantity, "quantity to print")
        ->required()
        ->check(CLI::IsMember({"var-neg-abs", "cvar-neg-abs", "kappa", "delta"}));

    SimulateArgs sa;
    auto* c_sim = app.add_subcommand("simulate", "run a batch of closed-loop episodes");
    c_sim->add_option("--scenario", sa.scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
    c_sim->add_option("--policy", sa.policy, "single-estimate | cvar | dr-edl-cvar")
        ->capture_default_str()
        ->check(CLI::IsMember({"single-estimate", "cvar", "dr-edl-cvar"}));
    c_sim->add_option("--episodes", sa.episodes, "number of episodes")->capture_default_str();
    c_sim->add_option("--table", sa.table, "lookup table JSON")->check(CLI::ExistingFile);
    c_sim->add_option("--out", sa.out, "metrics CSV path")->required();
    c_sim->add_flag("--timing", sa.timing, "measure solver wall time (output is then not reproducible)");

    ValidateArgs va;
    auto* c_val = app.add_subcommand("validate", "run self-check suites");
    c_val->add_option("--suite", va.suite, "lemmas | proposition | contour | lookup | all")
        ->capture_default_str()
        ->check(CLI::IsMember({"lemmas", "proposition", "contour", "lookup", "all"}));
    c_val->add_option("--seed", va.seed, "seed")->capture_default_str();
    c_val->add_option("--n", va.n, "random configurations per suite")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*c_pre)
            return cmd_precompute(pre);
        if (*c_risk)
            return cmd_risk(rk);
        if (*c_sim)
            return cmd_simulate(sa);
        if (*c_val)
            return cmd_validate(va);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
