#include "support.hpp"

#include "cbody/config.hpp"
#include "cbody/io.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cbody;
using namespace cbody::testing;
namespace fs = std::filesystem;

namespace {

const std::string kExe = CBODY_EXE;
const std::string kFixtures = std::string(CBODY_SOURCE_DIR) + "/tests/fixtures/";

struct Run {
    int code = -1;
    std::string err;
    std::string out;
};

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("cbody-cli-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run run(const std::string& args) {
    const fs::path logs = fs::temp_directory_path() / "cbody-cli-logs";
    fs::create_directories(logs);
    const std::string cmd = kExe + " " + args + " >" + (logs / "out").string() + " 2>" + (logs / "err").string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(logs / "out");
    r.err = slurp(logs / "err");
    return r;
}

} // namespace

TEST_CASE("missing or invalid configuration exits 1") {
    CHECK(run("solve /nonexistent/config.json").code == 1);
    const fs::path dir = scratch("invalid");
    std::ofstream(dir / "bad.json") << R"({"grid": {"dim": 2, "cells": [2, 2], "extents": [1, 1]}, "manifold": "s2-vector", "energy": {"muu": 1}})";
    const Run r = run("solve " + (dir / "bad.json").string());
    CHECK(r.code == 1);
    CHECK(r.err.find("/energy/muu") != std::string::npos);
    CHECK(run("").code == 1);
    CHECK(run("frobnicate x").code == 1);
}

TEST_CASE("negative micro coefficient is rejected by the probe gate") {
    const fs::path dir = scratch("negative");
    const Run r = run("solve " + kFixtures + "negative_kappa.json --out " + dir.string());
    CHECK(r.code == 1);
    CHECK(r.err.find("growth condition") != std::string::npos);
    CHECK(r.err.find("polyconvex_probe") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "history.csv"));
    const Run p = run("probe " + kFixtures + "negative_kappa.json");
    CHECK(p.code == 3);
    const auto j = nlohmann::json::parse(p.out);
    CHECK_FALSE(j["witnesses"].empty());
}

TEST_CASE("solve, verify, perturb") {
    const fs::path dir = scratch("pipeline");
    const Run s = run("solve " + kFixtures + "small.json --out " + dir.string());
    REQUIRE(s.code == 0);
    for (const char* f : {"history.csv", "u.csv", "nu.csv", "report.json"}) CHECK(fs::exists(dir / f));
    const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(report["status"] == "converged");
    CHECK(report["config"]["manifold"] == "s2-vector");
    CHECK(report["diagnostics"]["orientation_ok"] == true);

    const Run v = run("verify " + kFixtures + "small.json " + dir.string() + " --dump-actions");
    CHECK(v.code == 0);
    CHECK(fs::exists(dir / "balance_report.json"));
    CHECK(fs::exists(dir / "actions.csv"));
    CHECK(fs::exists(dir / "cell_residuals.csv"));
    CHECK(nlohmann::json::parse(slurp(dir / "balance_report.json"))["passed"] == true);

    // perturb one interior node
    const RunConfig cfg = load_config(kFixtures + "small.json");
    DeformationField u = read_deformation((dir / "u.csv").string(), cfg.grid());
    u.values[cfg.grid().node_index({1, 1, 1})][1] += 0.02;
    write_deformation((dir / "u.csv").string(), cfg.grid(), u);
    const Run bad = run("verify " + kFixtures + "small.json " + dir.string());
    CHECK(bad.code == 3);
    CHECK(bad.err.find("local_force") != std::string::npos);
    const auto br = nlohmann::json::parse(slurp(dir / "balance_report.json"));
    CHECK(br["passed"] == false);
    CHECK_FALSE(br["failing"].empty());

    // a looser tolerance scale does not rescue a genuinely perturbed state
    CHECK(run("verify " + kFixtures + "small.json " + dir.string() + " --tol-scale 10").code == 3);
}

TEST_CASE("verify on a handcrafted zero-stress state") {
    const fs::path dir = scratch("zero");
    const RunConfig cfg = load_config(kFixtures + "zero_stress.json");
    write_deformation((dir / "u.csv").string(), cfg.grid(), DeformationField::identity(cfg.grid()));
    write_descriptor((dir / "nu.csv").string(), cfg.grid(), MorphField::constant(cfg.grid(), vecn({0, 0, 1})));
    const Run v = run("verify " + kFixtures + "zero_stress.json " + dir.string());
    CHECK(v.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "balance_report.json"));
    for (const char* k : {"force_residual_norm", "torque_residual_norm", "local_force_residual_norm",
                          "micro_residual_norm", "skew_residual_norm", "weak_el_residual", "weak_sub_residual",
                          "config_residual_norm", "power_gap"}) {
        INFO(k);
        CHECK(j[k].get<double>() <= 1e-13);
    }
}

TEST_CASE("verify rejects mismatched or off-manifold states") {
    const fs::path dir = scratch("mismatch");
    const RunConfig cfg = load_config(kFixtures + "zero_stress.json");
    const ReferenceGrid other = unit_grid(2, 3);
    write_deformation((dir / "u.csv").string(), other, DeformationField::identity(other));
    write_descriptor((dir / "nu.csv").string(), other, MorphField::constant(other, vecn({0, 0, 1})));
    CHECK(run("verify " + kFixtures + "zero_stress.json " + dir.string()).code == 1);
    write_deformation((dir / "u.csv").string(), cfg.grid(), DeformationField::identity(cfg.grid()));
    write_descriptor((dir / "nu.csv").string(), cfg.grid(), MorphField::constant(cfg.grid(), vecn({0, 0, 1.5})));
    CHECK(run("verify " + kFixtures + "zero_stress.json " + dir.string()).code == 1);
}

TEST_CASE("budget exhaustion exits 2") {
    const fs::path dir = scratch("budget");
    std::string text = slurp(kFixtures + "small.json");
    const auto pos = text.find("\"max_iterations\": 20000");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 23, "\"max_iterations\": 3");
    std::ofstream(dir / "cfg.json") << text;
    CHECK(run("solve " + (dir / "cfg.json").string() + " --out " + dir.string()).code == 2);
    CHECK(fs::exists(dir / "history.csv"));
}

TEST_CASE("gradcheck and probe pass on shipped models") {
    const Run g = run("gradcheck " + kFixtures + "small.json --jets 100");
    CHECK(g.code == 0);
    const auto j = nlohmann::json::parse(g.out);
    CHECK(j["max_relative_deviation"].get<double>() <= 1e-6);
    CHECK(run("probe " + kFixtures + "small.json").code == 0);
}

TEST_CASE("identical runs give byte-identical histories") {
    const fs::path a = scratch("det-a"), b = scratch("det-b"), c = scratch("det-c");
    REQUIRE(run("solve " + kFixtures + "small.json --out " + a.string()).code == 0);
    REQUIRE(run("solve " + kFixtures + "small.json --out " + b.string()).code == 0);
    CHECK(slurp(a / "history.csv") == slurp(b / "history.csv"));
    CHECK(slurp(a / "u.csv") == slurp(b / "u.csv"));
    run("solve " + kFixtures + "small.json --seed 99 --out " + c.string());
    CHECK(slurp(a / "history.csv") != slurp(c / "history.csv"));
}
