// cbody: solve for and verify ground states of complex bodies.
#include "cbody/config.hpp"
#include "cbody/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace cbody;

namespace {

enum Exit { kOk = 0, kConfig = 1, kNotConverged = 2, kFailed = 3 };

struct Options {
    std::string config;
    std::string state_dir;
    std::string output;
    double tol_scale = 1.0;
    bool dump_actions = false;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int jets = 100;
};

RunConfig load(const Options& o) {
    RunConfig cfg = load_config(o.config);
    if (o.seed_given) cfg.set_seed(o.seed);
    if (!o.output.empty()) cfg.output = o.output;
    return cfg;
}

ProbeReport run_probe(const RunConfig& cfg) {
    const ReferenceGrid& g = cfg.grid();
    return polyconvex_probe(cfg.spec, cfg.model, g.dim(), g.origin(), g.extents(), cfg.probe.samples, cfg.probe.seed);
}

std::string probe_failure_message(const ProbeReport& p) {
    std::string msg;
    if (p.growth_violations > 0 || !p.growth.coercive) {
        msg = "growth condition violated (C1 = " + format_double(p.growth.C1) +
              ", coercive = " + (p.growth.coercive ? "true" : "false") + ", " +
              std::to_string(p.growth_violations) + " sampled violations)";
    }
    if (p.convexity_violations > 0) {
        if (!msg.empty()) msg += "; ";
        msg += "polyconvexity violated at " + std::to_string(p.convexity_violations) + " sampled segments";
    }
    if (p.consistency_violations > 0) {
        if (!msg.empty()) msg += "; ";
        msg += "polyconvex representation inconsistent at " + std::to_string(p.consistency_violations) + " samples";
    }
    return msg;
}

int cmd_solve(const Options& o) {
    const RunConfig cfg = load(o);
    const ReferenceGrid& grid = cfg.grid();
    const ProbeReport probe = run_probe(cfg);
    if (!probe.passed()) {
        std::cerr << "cbody: model rejected by polyconvex_probe: " << probe_failure_message(probe) << '\n';
        return kConfig;
    }
    const FieldState init = initial_state(cfg.spec, grid, cfg.boundary, cfg.initial, cfg.solver.seed);
    SolverResult res;
    try {
        res = minimize(cfg.spec, cfg.model, grid, cfg.boundary, init, cfg.solver);
    } catch (const OrientationError& e) {
        std::cerr << "cbody: infeasible initial state: " << e.what() << '\n';
        return kConfig;
    }

    fs::create_directories(cfg.output);
    const fs::path out(cfg.output);
    write_history_csv((out / "history.csv").string(), res.history);
    write_deformation((out / "u.csv").string(), grid, res.state.u);
    write_descriptor((out / "nu.csv").string(), grid, res.state.nu);
    if (o.dump_actions) {
        const StateEvaluation eval = evaluate_state(cfg.spec, cfg.model, grid, res.state.u, res.state.nu);
        write_actions_csv((out / "actions.csv").string(), grid, eval);
    }

    const HistoryRow& last = res.history.back();
    nlohmann::json report;
    report["config"] = cfg.echo;
    report["seed"] = cfg.solver.seed;
    report["status"] = status_name(res.status);
    report["message"] = res.message;
    report["iterations"] = last.iter;
    report["final_energy"] = last.energy;
    report["final_grad_norm"] = last.grad_norm;
    report["tol_stat"] = cfg.solver.tol_stat;
    report["diagnostics"] = to_json(field_diagnostics(cfg.spec, grid, res.state.u, res.state.nu, cfg.model.r, cfg.model.s));
    report["probe"] = {{"samples", probe.samples}, {"passed", probe.passed()}};
    write_json((out / "report.json").string(), report);

    std::cout << "status " << status_name(res.status) << ", iterations " << last.iter << ", energy "
              << format_double(last.energy) << ", grad_norm " << format_double(last.grad_norm) << '\n';
    return res.status == SolverStatus::Converged ? kOk : kNotConverged;
}

int cmd_verify(const Options& o) {
    const RunConfig cfg = load(o);
    const ReferenceGrid& grid = cfg.grid();
    const fs::path dir(o.state_dir);
    const DeformationField u = read_deformation((dir / "u.csv").string(), grid);
    const MorphField nu = read_descriptor((dir / "nu.csv").string(), grid, cfg.spec.embedding_dim);
    for (long a = 0; a < grid.node_count(); ++a) {
        if (!on_manifold(cfg.spec, nu.values[a], 1e-10)) {
            std::cerr << "cbody: descriptor at node " << a << " is off the manifold\n";
            return kConfig;
        }
    }
    const VerifiedState st(cfg.spec, cfg.model, grid, u, nu);
    const BalanceReport rep = verify_balances(st, cfg.tolerances(o.tol_scale), cfg.verify.test_basis_size, cfg.verify.seed);
    write_json((dir / "balance_report.json").string(), to_json(rep));
    if (o.dump_actions) {
        write_actions_csv((dir / "actions.csv").string(), grid, st.eval);
        write_cell_residuals_csv((dir / "cell_residuals.csv").string(), skew_residual(st));
    }
    if (!rep.passed()) {
        std::cerr << "cbody: balances failed:";
        for (const auto& f : rep.failing) std::cerr << ' ' << f;
        std::cerr << '\n';
        return kFailed;
    }
    std::cout << "all balances within tolerance\n";
    return kOk;
}

int cmd_gradcheck(const Options& o) {
    const RunConfig cfg = load(o);
    const ReferenceGrid& grid = cfg.grid();
    constexpr double kStep = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < o.jets; ++i) {
        const JetSample jet = random_jet(cfg.spec, grid.dim(), grid.origin(), grid.extents(),
                                         cfg.solver.seed * 1000003ULL + static_cast<std::uint64_t>(i));
        worst = std::max(worst, max_relative_deviation(compute_actions(cfg.spec, cfg.model, jet),
                                                       fd_oracle(cfg.spec, cfg.model, jet, kStep)));
    }
    InitialGuess guess = cfg.initial;
    guess.u_perturbation = std::max(guess.u_perturbation, 0.05);
    guess.nu_perturbation = std::max(guess.nu_perturbation, 0.2);
    const FieldState st = initial_state(cfg.spec, grid, cfg.boundary, guess, cfg.solver.seed);
    const double discrete = check_discrete_gradient(cfg.spec, cfg.model, grid, st, 5, cfg.solver.seed, 1e-6);
    const bool ok = worst <= 1e-6 && discrete <= 1e-6;
    const nlohmann::json j = {{"jets", o.jets},
                              {"step", kStep},
                              {"max_relative_deviation", worst},
                              {"discrete_gradient_deviation", discrete},
                              {"passed", ok}};
    std::cout << j.dump(2) << '\n';
    return ok ? kOk : kFailed;
}

int cmd_probe(const Options& o) {
    const RunConfig cfg = load(o);
    const ProbeReport rep = run_probe(cfg);
    std::cout << to_json(rep).dump(2) << '\n';
    if (!rep.passed()) {
        std::cerr << "cbody: " << probe_failure_message(rep) << '\n';
        return kFailed;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ground states of complex bodies: solve, verify, gradcheck, probe"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("config", o.config, "Run configuration (JSON)")->required();
        sub->add_option("--tol-scale", o.tol_scale, "Multiply every verification tolerance")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--dump-actions", o.dump_actions, "Write per-Gauss-point actions CSV");
        sub->add_option("--seed", o.seed, "Override every seed in the configuration")
            ->each([&](const std::string&) { o.seed_given = true; });
        sub->add_option("--out", o.output, "Override the output directory");
    };
    CLI::App* solve = app.add_subcommand("solve", "Minimize the energy and write the ground state");
    common(solve);
    CLI::App* verify = app.add_subcommand("verify", "Check every balance law on a stored state");
    common(verify);
    verify->add_option("state-dir", o.state_dir, "Directory holding u.csv and nu.csv")->required();
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "Compare closed-form actions with finite differences");
    common(gradcheck);
    gradcheck->add_option("--jets", o.jets, "Number of random jets")->check(CLI::PositiveNumber);
    CLI::App* probe = app.add_subcommand("probe", "Sample polyconvexity and growth of the model");
    common(probe);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }
    try {
        if (app.got_subcommand(solve)) return cmd_solve(o);
        if (app.got_subcommand(verify)) return cmd_verify(o);
        if (app.got_subcommand(gradcheck)) return cmd_gradcheck(o);
        return cmd_probe(o);
    } catch (const std::exception& e) {
        std::cerr << "cbody: " << e.what() << '\n';
        return kConfig;
    }
}
