#include "droedl/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace droedl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "droedl_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

io::json scenario_json() {
    return io::json::parse(io::read_file(std::string(DROEDL_SCENARIO_DIR) + "/uncertain.json"));
}

} // namespace

TEST(Fmt, Formatting) {
    EXPECT_EQ(io::fmt(1.23456789), "1.234568");
    EXPECT_EQ(io::fmt(2.5, 2), "2.50");
    EXPECT_EQ(io::fmt(-0.0000001, 3), "0.000");
    EXPECT_EQ(io::fmt(-0.5, 1), "-0.5");
    EXPECT_EQ(io::fmt(std::nan("")), "nan");
    EXPECT_EQ(io::fmt(-INFINITY), "-inf");
}

TEST(Files, MissingAndUnwritable) {
    EXPECT_THROW(io::read_file("/nonexistent/x.json"), IoError);
    EXPECT_THROW(io::write_file("/nonexistent/dir/x.json", "x"), IoError);
    EXPECT_THROW(io::parse_json("{not json", "t"), IoError);
}

TEST(LookupJson, RoundTripIsBitIdentical) {
    const auto t = evidential::build_lookup(evidential::Confidence(0.9), evidential::default_alpha_grid(64), 1e-9);
    const auto path = scratch("table.json").string();
    io::save_lookup(t, path);
    const auto u = io::load_lookup(path);
    EXPECT_EQ(u.eta, t.eta);
    EXPECT_EQ(u.alpha_grid, t.alpha_grid);
    ASSERT_EQ(u.rows.size(), t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        EXPECT_EQ(u.rows[i].u_min, t.rows[i].u_min);
        EXPECT_EQ(u.rows[i].u_max, t.rows[i].u_max);
        EXPECT_EQ(u.rows[i].v_min, t.rows[i].v_min);
        EXPECT_EQ(u.rows[i].v_max, t.rows[i].v_max);
    }
}

TEST(LookupJson, RejectsBadDocuments) {
    const auto t = evidential::build_lookup(evidential::Confidence(0.9), evidential::default_alpha_grid(64), 1e-9);
    auto j = io::to_json(t);
    j["version"] = 99;
    EXPECT_THROW(io::lookup_from_json(j), IoError);
    j = io::to_json(t);
    j["rows"].erase(3);
    EXPECT_THROW(io::lookup_from_json(j), IoError);
    j = io::to_json(t);
    j["alpha_grid"][5] = 7.0;
    EXPECT_THROW(io::lookup_from_json(j), IoError);
    j = io::to_json(t);
    j.erase("eta");
    EXPECT_THROW(io::lookup_from_json(j), IoError);
}

TEST(ScenarioJson, ParsesShippedFileWithOverrides) {
    const auto f = io::scenario_from_json(scenario_json());
    EXPECT_EQ(f.scenario.label, "uncertain");
    EXPECT_EQ(f.scenario.obstacles.size(), 2u);
    EXPECT_EQ(f.scenario.obstacles[1].gamma[1], -0.82);
    EXPECT_EQ(f.mpc.horizon, 40u);
    EXPECT_EQ(f.mpc.n_samples, 256u);
    EXPECT_EQ(f.mpc.goal, f.scenario.goal);
    EXPECT_EQ(f.mpc.epsilon.value(), 0.95);
}

TEST(ScenarioJson, Rejections) {
    auto j = scenario_json();
    j.erase("goal");
    EXPECT_THROW(io::scenario_from_json(j), IoError);
    j = scenario_json();
    j["obstacles"][0]["alpha"] = 0.5;
    EXPECT_THROW(io::scenario_from_json(j), DomainError);
    j = scenario_json();
    j["label"] = "murky";
    EXPECT_THROW(io::scenario_from_json(j), DomainError);
    j = scenario_json();
    j["mpc"]["n_elite"] = 1000;
    EXPECT_THROW(io::scenario_from_json(j), DomainError);
    j = scenario_json();
    j["goal"] = {1.0, 2.0, 3.0};
    EXPECT_THROW(io::scenario_from_json(j), IoError);
}

TEST(Csv, BatchRow) {
    sim::BatchMetrics m;
    m.policy = sim::PolicyKind::PlainCVaR;
    m.episodes = 10;
    m.success_pct = 90;
    m.collision_pct = 10;
    m.mean_cost = 12.3456789;
    m.mean_min_distance = std::nan("");
    std::ostringstream out;
    io::write_batch_row(out, m);
    EXPECT_EQ(out.str(), "cvar,10,90.00,10.00,12.345679,nan,0.000\n");
    EXPECT_STREQ(io::batch_csv_header,
                 "policy,episodes,success_pct,collision_pct,mean_cost,mean_min_distance,mean_solve_ms");
}

TEST(Csv, TrajectoryAndContour) {
    sim::EpisodeResult r;
    r.trajectory = {control::State{{0, 0}, {1, 0}}, control::State{{0.1, 0}, {1, 0}}};
    r.feasible = {false};
    std::ostringstream t;
    io::write_trajectory_csv(t, r, 0.1);
    EXPECT_EQ(t.str(), "t,x,y,vx,vy,feasible\n0.0000,0.000000,0.000000,1.000000,0.000000,0\n"
                       "0.1000,0.100000,0.000000,1.000000,0.000000,0\n");

    const auto f = io::scenario_from_json(scenario_json());
    std::ostringstream c;
    io::write_contour_csv(c, f.scenario, 20);
    std::istringstream in(c.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "obstacle,axis,kind,index,mu,var");
    int contour = 0, rectangle = 0;
    while (std::getline(in, line)) {
        contour += line.find(",contour,") != std::string::npos;
        rectangle += line.find(",rectangle,") != std::string::npos;
    }
    EXPECT_EQ(contour, 2 * 2 * 38);
    EXPECT_EQ(rectangle, 2 * 2 * 4);
}
