#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fbl/config.hpp"
#include "fbl/report.hpp"
#include "fbl/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace fbl;

namespace {

std::string temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() / ("fbl_test_" + tag);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

Json linear_config() {
    return Json{{"schema", 1},
                {"model", {{"name", "linear_cyclic"}, {"params", {{"n", 3}, {"c", 1.0}}}}},
                {"seed", 7},
                {"analysis", {{"horizon", 120.0}}}};
}

}  // namespace

TEST_CASE("config parsing and validation") {
    const auto cfg = RunConfig::from_json(linear_config());
    CHECK(cfg.model.name() == "linear_cyclic");
    CHECK(cfg.seed == 7);
    CHECK(cfg.convention == NConvention::default_convention());

    Json bad = linear_config();
    bad["schema"] = 2;
    CHECK_THROWS_AS(RunConfig::from_json(bad), Error);

    bad = linear_config();
    bad.erase("model");
    CHECK_THROWS_AS(RunConfig::from_json(bad), Error);

    bad = linear_config();
    bad["analysis"]["eq_radius"] = -1.0;
    CHECK_THROWS_AS(RunConfig::from_json(bad), Error);

    CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/path.json"), Error);
}

TEST_CASE("dotted overrides") {
    Json base = linear_config();
    Json overrides = {{"seed", 99}, {"analysis.horizon", 55.0}};
    const Json merged = RunConfig::apply_overrides(base, overrides);
    CHECK(merged.at("seed") == 99);
    CHECK(merged.at("analysis").at("horizon") == 55.0);
    const auto cfg = RunConfig::from_json(merged);
    CHECK(cfg.analysis.limits.horizon == 55.0);
}

TEST_CASE("check-class, simulate, equilibria, floquet, limits end to end") {
    const auto cfg = RunConfig::from_json(linear_config());
    const std::string out = temp_dir("cmds");

    auto res = run_command("check-class", cfg, out);
    CHECK(res.exit_code == 0);
    CHECK(res.report.at("result").at("class").at("in_Lminus") == true);

    res = run_command("simulate", cfg, out);
    CHECK(res.exit_code == 0);
    CHECK(std::filesystem::exists(out + "/simulate.trajectory.csv"));

    res = run_command("equilibria", cfg, out);
    CHECK(res.exit_code == 0);
    CHECK(res.report.at("result").at("count") == 1);
    CHECK(res.report.at("result").at("equilibria")[0].at("morse_index") == 0);

    res = run_command("floquet", cfg, out);
    CHECK(res.exit_code == 0);
    CHECK(res.report.at("result").at("decomposition").at("gap_ok") == true);
    CHECK(res.report.at("result").at("block_nvalues").at("ok") == true);

    res = run_command("limits", cfg, out);
    CHECK(res.exit_code == 0);
    for (const auto& row : res.report.at("result").at("classifications"))
        CHECK(row.at("report").at("kind") == "Equilibrium");

    res = run_command("unknown-command", cfg, out);
    CHECK(res.exit_code == 2);
    CHECK(res.report.at("result").contains("error"));
}

TEST_CASE("reports are deterministic outside the meta block") {
    const auto cfg = RunConfig::from_json(linear_config());
    const std::string out1 = temp_dir("det1");
    const std::string out2 = temp_dir("det2");
    auto r1 = run_command("check-class", cfg, out1);
    auto r2 = run_command("check-class", cfg, out2);
    r1.report.erase("meta");
    r2.report.erase("meta");
    CHECK(r1.report.dump() == r2.report.dump());

    // The stamp carries hash, convention, seed and thresholds.
    const Json& stamp = r1.report.at("stamp");
    CHECK(stamp.at("model_hash").get<std::string>().size() == 16);
    CHECK(stamp.at("n_convention") == "edge_forward_negative");
    CHECK(stamp.at("seed") == 7);
    CHECK(stamp.at("thresholds").contains("eq_radius"));
    CHECK(stamp.at("tool_version").is_string());
}

TEST_CASE("run_command_json maps config errors to exit 2") {
    const std::string out = temp_dir("err");
    auto res = run_command_json("simulate", "{not json", "", out);
    CHECK(res.exit_code == 2);
    res = run_command_json("simulate", "{\"schema\": 1}", "", out);
    CHECK(res.exit_code == 2);

    // Overrides reach the config.
    res = run_command_json("equilibria", linear_config().dump(), "{\"seed\": 123}", out);
    CHECK(res.exit_code == 0);
    CHECK(res.report.at("stamp").at("seed") == 123);
}

TEST_CASE("perturb command writes the transition table") {
    Json cfg_json = linear_config();
    cfg_json["perturb"] = {{"kind", "cyclic_tanh"},
                           {"kappa", 1.0},
                           {"epsilons", {0.0, 1e-4}},
                           {"class_samples", 150}};
    cfg_json["analysis"]["horizon"] = 80.0;
    const auto cfg = RunConfig::from_json(cfg_json);
    const std::string out = temp_dir("perturb");
    const auto res = run_command("perturb", cfg, out);
    CHECK(res.exit_code == 0);
    CHECK(res.report.at("result").at("classification_invariant") == true);
    CHECK(std::filesystem::exists(out + "/perturb.transitions.csv"));
}

TEST_CASE("shipped configs load and describe the recorded models") {
    const std::string dir = FBL_CONFIG_DIR;
    struct Expectation {
        std::string file;
        std::string model;
        int dim;
    };
    const std::vector<Expectation> expected = {
        {"goodwin_oscillatory.json", "goodwin", 3},
        {"goodwin_stable.json", "goodwin", 3},
        {"linear3.json", "linear_cyclic", 3},
        {"bidirectional_n3.json", "bidirectional_synthetic", 3},
        {"repressilator.json", "repressilator", 6},
    };
    for (const auto& e : expected) {
        const auto cfg = RunConfig::from_file(dir + "/" + e.file);
        CHECK(cfg.model.name() == e.model);
        CHECK(cfg.model.dim() == e.dim);
        CHECK(cfg.convention == NConvention::default_convention());
    }

    // The oscillatory point really is oscillatory: the recorded equilibrium
    // is an unstable focus of index 2.
    const auto osc = RunConfig::from_file(dir + "/goodwin_oscillatory.json");
    const auto eq = refine_equilibrium(osc.model, (Vec(3) << 1.0, 1.0, 1.0).finished());
    REQUIRE(eq.has_value());
    CHECK(classify_equilibrium(osc.model, *eq).morse_index == 2);
}

TEST_CASE("census of the goodwin oscillatory configuration") {
    Json cfg_json = {
        {"schema", 1},
        {"model", {{"name", "goodwin"}, {"params", {{"p", 12.0}, {"b", 0.5}}}}},
        {"seed", 11},
        {"integrator", {{"rel_tol", 1e-9}, {"abs_tol", 1e-11}}},
        {"analysis",
         {{"horizon", 600.0}, {"conv_tol", 1e-5}, {"cycle_transient", 300.0}}},
        {"census",
         {{"grid_per_axis", 3},
          {"ic_count", 2},
          {"directions", 6},
          {"shoot_horizon", 500.0}}}};
    const auto cfg = RunConfig::from_json(cfg_json);
    const std::string out = temp_dir("census");
    const auto res = run_command("census", cfg, out);
    REQUIRE(res.exit_code == 0);
    const Json& result = res.report.at("result");

    REQUIRE(result.at("equilibria").size() == 1);
    CHECK(result.at("equilibria")[0].at("morse_index") == 2);
    CHECK(result.at("equilibria")[0].at("hyperbolic") == true);
    REQUIRE(result.at("periodic_orbits").size() == 1);
    CHECK(result.at("periodic_orbits")[0].at("hyperbolic") == true);
    CHECK(result.at("connection_count").get<int>() >= 1);
    CHECK(result.at("morse_smale_verdict") == "ConsistentWithMorseSmale");
    CHECK(result.at("nonwandering_summary").at("all_referenced") == true);
}
