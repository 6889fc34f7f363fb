// Acceptance suite: one PASS/FAIL line per criterion.
#include "cbody/config.hpp"
#include "cbody/io.hpp"
#include "cbody/manufactured.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

using namespace cbody;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const std::string kSource = CBODY_SOURCE_DIR;
const std::string kExe = CBODY_EXE;
const fs::path kWork = fs::temp_directory_path() / "cbody-acceptance";

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(const std::string& args) {
    const std::string cmd = kExe + " " + args + " >>" + (kWork / "cli.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_path(const std::string& name) { return kSource + "/configs/" + name + ".json"; }

struct SolvedRun {
    int solve_code = -1;
    int verify_code = -1;
    double seconds = 0.0;
    nlohmann::json report;
    nlohmann::json balance;
    fs::path dir;
};

SolvedRun solve_and_verify(const std::string& name) {
    SolvedRun r;
    r.dir = kWork / name;
    fs::remove_all(r.dir);
    const auto t0 = Clock::now();
    r.solve_code = cli("solve " + config_path(name) + " --out " + r.dir.string());
    r.seconds = elapsed(t0);
    if (r.solve_code != 0) return r;
    r.report = nlohmann::json::parse(slurp(r.dir / "report.json"));
    r.verify_code = cli("verify " + config_path(name) + " " + r.dir.string());
    if (fs::exists(r.dir / "balance_report.json")) r.balance = nlohmann::json::parse(slurp(r.dir / "balance_report.json"));
    return r;
}

const char* kNorms[] = {"force_residual_norm", "torque_residual_norm", "local_force_residual_norm",
                        "micro_residual_norm", "skew_residual_norm",   "weak_el_residual",
                        "weak_sub_residual",   "config_residual_norm", "power_gap"};

Outcome criterion1() {
    Outcome o;
    const auto t0 = Clock::now();
    double worst = 0.0;
    long jets = 0;
    for (const char* key : {"s2-vector", "s2-trivial", "rk-trivial:3"}) {
        const ManifoldSpec spec = ManifoldSpec::parse(key);
        for (int d : {2, 3}) {
            EnergyModel m = EnergyModel::zero_loads(d, spec.embedding_dim);
            m.delta = 0.3;
            m.kappa = 0.2;
            m.alpha = 0.5;
            m.body_force = VecD::Constant(d, 0.1);
            m.substructural_field = VecN::Constant(spec.embedding_dim, 0.2);
            m.weight.kind = WeightFunction::Kind::LinearRamp;
            m.weight.gradient = VecD::Constant(d, 0.4);
            double local = 0.0;
            for (int i = 0; i < 100; ++i) {
                const JetSample j = random_jet(spec, d, VecD::Zero(d), VecD::Ones(d), 7919ULL * d + i);
                local = std::max(local, max_relative_deviation(compute_actions(spec, m, j), fd_oracle(spec, m, j, 1e-5)));
                ++jets;
            }
            worst = std::max(worst, local);
        }
    }
    const double t = elapsed(t0);
    o.require(worst <= 1e-6, "oracle deviation " + sci(worst) + " > 1e-6");
    o.require(t < 5.0, "runtime " + sci(t) + " s >= 5 s");
    o.note(std::to_string(jets) + " jets over 3 manifold/action pairs, max relative deviation " + sci(worst) + ", " +
           sci(t) + " s");
    return o;
}

Outcome criterion2() {
    Outcome o;
    const ManifoldSpec spec = ManifoldSpec::sphere(So3Action::VectorAction);
    EnergyModel m = EnergyModel::zero_loads(3, 3);
    m.delta = 0.3;
    m.kappa = 0.2;
    m.alpha = 0.5;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    double invariance = 0.0, skew = 0.0, breaking = 0.0;
    const Vec3 a_fixed(0.3, -0.5, 0.8);
    for (int i = 0; i < 100; ++i) {
        const JetSample j = random_jet(spec, 3, VecD::Zero(3), VecD::Ones(3), 100000 + i);
        const Mat3 Q = Eigen::Quaterniond(g(rng), g(rng), g(rng), g(rng)).normalized().toRotationMatrix();
        JetSample r = j;
        r.F = Q * j.F;
        r.nu = Q * Vec3(j.nu);
        r.grad = Q * j.grad;
        const double e = internal_density(m, j);
        invariance = std::max(invariance, std::abs(internal_density(m, r) - e) / std::max(1.0, std::abs(e)));
        const ActionState act = compute_actions(spec, m, j);
        const double pf = act.P.norm() * j.F.norm();
        skew = std::max(skew, skew_residual_at(spec, j, act) / pf);
        ActionState broken = act;
        broken.P += m.alpha * a_fixed * (a_fixed.transpose() * j.F);
        breaking = std::max(breaking, skew_residual_at(spec, j, broken) / (broken.P.norm() * j.F.norm()));
    }
    o.require(invariance <= 1e-12, "energy invariance " + sci(invariance));
    o.require(skew <= 1e-8, "skew residual " + sci(skew) + " |P||F|");
    o.require(breaking > 1e-8, "frame-breaking model passed the skew check");
    o.note("invariance " + sci(invariance) + ", skew " + sci(skew) + " |P||F|, frame-breaking model " + sci(breaking) +
           " |P||F| (rejected)");
    return o;
}

Outcome criterion3() {
    Outcome o;
    double worst = 0.0;
    int checks = 0;
    for (const char* key : {"s2-vector", "s2-trivial", "rk-trivial:2"}) {
        const ManifoldSpec spec = ManifoldSpec::parse(key);
        for (int d : {2, 3}) {
            std::array<FaceCondition, 6> faces{};
            faces[0] = {true, true};
            const ReferenceGrid grid(d, {4, 4, d == 3 ? 4 : 1}, VecD::Zero(d), VecD::Ones(d), faces);
            EnergyModel m = EnergyModel::zero_loads(d, spec.embedding_dim);
            m.delta = 0.3;
            m.kappa = 0.2;
            m.alpha = 0.5;
            m.body_force = VecD::Constant(d, -0.2);
            m.substructural_field = VecN::Constant(spec.embedding_dim, 0.3);
            const ManufacturedFields f = manufactured_fields(spec, grid, 55 + d, 0.3);
            const VerifiedState st(spec, m, grid, f.u, f.nu);
            std::mt19937_64 rng(d);
            std::normal_distribution<double> g;
            for (const Part& part : {Part::whole(grid), Part::box(grid, {1, 0, 0}, {3, 3, 1})}) {
                for (int t = 0; t < 10; ++t) {
                    Vec3 c(g(rng), g(rng), d == 3 ? g(rng) : 0.0);
                    Vec3 q(d == 3 ? g(rng) : 0.0, d == 3 ? g(rng) : 0.0, g(rng));
                    RateField rate = RateField::zero(grid, spec.embedding_dim);
                    for (long a = 0; a < grid.node_count(); ++a) {
                        for (int i = 0; i < d; ++i) rate.h[a][i] = g(rng);
                        VecN v(spec.embedding_dim);
                        for (int i = 0; i < v.size(); ++i) v[i] = g(rng);
                        rate.upsilon[a] = tangent_part(spec, f.nu.values[a], v);
                    }
                    const double gap = power_invariance_gap(st, part, rate, c, q);
                    const IntegralBalances ib = integral_balances(st, part, VecD::Zero(d));
                    const double predicted = pad3(ib.force).dot(c) + ib.torque.dot(q);
                    worst = std::max(worst, std::abs(gap - predicted) / (1.0 + std::abs(predicted)));
                    ++checks;
                }
            }
        }
    }
    o.require(worst <= 1e-12, "gap identity defect " + sci(worst));
    o.note(std::to_string(checks) + " random (state, part, c, q) on non-equilibrium states, max defect " + sci(worst));
    return o;
}

Outcome criterion4(const SolvedRun& id, const SolvedRun& zee) {
    Outcome o;
    o.require(id.solve_code == 0, "identity solve exit " + std::to_string(id.solve_code));
    if (id.solve_code == 0) {
        const double e = id.report["final_energy"];
        o.require(e <= 1e-10, "identity energy " + sci(e));
        o.require(id.seconds < 60.0, "identity runtime " + sci(id.seconds) + " s");
        o.require(id.verify_code == 0, "identity verify exit " + std::to_string(id.verify_code));
        const double tol = id.balance["tolerances"]["tol_eq"];
        double worst = 0.0;
        for (const char* k : kNorms) worst = std::max(worst, id.balance[k].get<double>());
        o.require(worst <= tol, "identity balance norm " + sci(worst) + " > tol_eq");
        o.note("identity 8^3: E = " + sci(e) + ", max norm " + sci(worst) + " <= tol_eq " + sci(tol) + ", " +
               sci(id.seconds) + " s");
    }
    o.require(zee.solve_code == 0, "zeeman solve exit " + std::to_string(zee.solve_code));
    if (zee.solve_code == 0) {
        const RunConfig cfg = load_config(config_path("zeeman"));
        const MorphField nu = read_descriptor((zee.dir / "nu.csv").string(), cfg.grid(), 3);
        const VecN target = cfg.model.substructural_field.normalized();
        double field = 0.0;
        for (const auto& v : nu.values) field = std::max(field, (v - target).norm());
        const double B = cfg.model.substructural_field.norm();
        const double vol = cfg.grid().volume();
        const double gap = std::abs(zee.report["final_energy"].get<double>() + B * vol);
        o.require(field <= 1e-4, "zeeman field deviation " + sci(field));
        o.require(gap <= 1e-6 * B * vol, "zeeman energy gap " + sci(gap));
        o.note("zeeman: |nu - e3| <= " + sci(field) + ", |E + B vol| = " + sci(gap));
    }
    return o;
}

Outcome criterion5(const SolvedRun& coupled) {
    Outcome o;
    const ManifoldSpec spec = ManifoldSpec::sphere(So3Action::VectorAction);
    EnergyModel m = EnergyModel::zero_loads(2, 3);
    m.delta = 0.3;
    m.kappa = 0.2;
    m.alpha = 0.5;
    m.body_force = VecD::Constant(2, -0.1);
    m.substructural_field = VecN::Constant(3, 0.1);
    m.weight.kind = WeightFunction::Kind::LinearRamp;
    m.weight.gradient = VecD::Constant(2, 0.5);
    double min_order = 1e300;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        double prev = 0.0;
        for (int n : {16, 32, 64}) {
            const ReferenceGrid grid(2, {n, n, 1}, VecD::Zero(2), VecD::Ones(2));
            const ManufacturedFields f = manufactured_fields(spec, grid, seed);
            const VerifiedState st(spec, m, grid, f.u, f.nu);
            const ConfigurationalResidual c = configurational_residual(st);
            const double defect = c.defect_norm / c.scale;
            if (prev > 0.0) min_order = std::min(min_order, std::log2(prev / defect));
            prev = defect;
        }
    }
    o.require(min_order >= 0.9, "observed order " + sci(min_order));
    o.note("identity-defect order >= " + sci(min_order) + " (16^2 -> 32^2 -> 64^2, 3 fields)");
    o.require(coupled.solve_code == 0, "coupled solve exit " + std::to_string(coupled.solve_code));
    if (coupled.solve_code == 0) {
        const double r = coupled.balance["config_residual_norm"];
        const double tol = coupled.balance["tolerances"]["tol_config"];
        o.require(r <= tol, "coupled config residual " + sci(r) + " > tol_config " + sci(tol));
        o.note("coupled minimizer (w != 1): config residual " + sci(r) + " <= tol_config " + sci(tol));
    }
    return o;
}

Outcome criterion6(const std::vector<const SolvedRun*>& runs) {
    Outcome o;
    for (const SolvedRun* r : runs) {
        const std::string name = r->dir.filename().string();
        o.require(r->solve_code == 0 && !r->balance.is_null(), name + " has no verified minimizer");
        if (r->balance.is_null()) continue;
        const double tol = r->balance["tolerances"]["tol_eq"];
        const double el = r->balance["weak_el_residual"], sub = r->balance["weak_sub_residual"];
        const double power = r->balance["power_gap"];
        o.require(el <= tol && sub <= tol, name + " weak residuals " + sci(el) + ", " + sci(sub));
        o.require(power <= tol, name + " rigid-rate power " + sci(power));
        o.note(name + ": weak_el " + sci(el) + ", weak_sub " + sci(sub) + ", rigid power " + sci(power) +
               " (tol_eq " + sci(tol) + ")");
    }
    return o;
}

Outcome criterion7() {
    Outcome o;
    int configs = 0;
    for (const auto& entry : fs::directory_iterator(kSource + "/configs")) {
        if (entry.path().extension() != ".json") continue;
        const RunConfig cfg = load_config(entry.path().string());
        const ReferenceGrid& g = cfg.grid();
        const ProbeReport rep =
            polyconvex_probe(cfg.spec, cfg.model, g.dim(), g.origin(), g.extents(), 10000, cfg.probe.seed);
        o.require(rep.violations() == 0, entry.path().filename().string() + " has " +
                                             std::to_string(rep.violations()) + " violations");
        ++configs;
    }
    const RunConfig bad = load_config(kSource + "/tests/fixtures/negative_kappa.json");
    const ProbeReport rep = polyconvex_probe(bad.spec, bad.model, 3, bad.grid().origin(), bad.grid().extents(), 10000,
                                             bad.probe.seed);
    o.require(!rep.witnesses.empty(), "corrupted model produced no witness");
    o.note(std::to_string(configs) + " shipped configs, 10^4 samples each, zero violations; corrupted model: " +
           std::to_string(rep.violations()) + " violations, first witness '" +
           (rep.witnesses.empty() ? std::string("none") : rep.witnesses.front().kind) + "'");
    return o;
}

Outcome criterion8(const SolvedRun& reduced) {
    Outcome o;
    const RunConfig cfg = load_config(config_path("reduced"));
    o.require(cfg.model.kappa == 0.0 && !cfg.spec.vector_action(), "reduced config is not kappa = 0 / trivial action");
    o.require(reduced.solve_code == 0 && !reduced.balance.is_null(), "reduced run did not converge");
    if (reduced.balance.is_null()) return o;
    const double tol = reduced.balance["tolerances"]["tol_eq"];
    const double gap = reduced.balance["diagnostics"]["self_action_gap"];
    const double sym = reduced.balance["diagnostics"]["cauchy_skew_norm"];
    o.require(gap <= tol, "|z - beta| = " + sci(gap));
    o.require(sym <= 1e-10, "Cauchy skew " + sci(sym));
    o.note("max |z - beta| = " + sci(gap) + " <= tol_eq " + sci(tol) + ", |skw sigma|/|sigma| = " + sci(sym));
    return o;
}

Outcome criterion9() {
    Outcome o;
    const fs::path a = kWork / "det-a", b = kWork / "det-b";
    fs::remove_all(a);
    fs::remove_all(b);
    const int ca = cli("solve " + config_path("identity") + " --out " + a.string());
    const int cb = cli("solve " + config_path("identity") + " --out " + b.string());
    o.require(ca == 0 && cb == 0, "solve exit codes " + std::to_string(ca) + ", " + std::to_string(cb));
    const std::string ha = slurp(a / "history.csv"), hb = slurp(b / "history.csv");
    o.require(!ha.empty() && ha == hb, "history CSVs differ");
    o.note("two identity runs, " + std::to_string(ha.size()) + "-byte histories identical");
    return o;
}

} // namespace

int main() {
    fs::create_directories(kWork);
    std::ofstream(kWork / "cli.log", std::ios::trunc);

    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;
    SolvedRun identity, zeeman, coupled, reduced;
    bool solved = false;
    auto ensure_solved = [&] {
        if (solved) return;
        identity = solve_and_verify("identity");
        zeeman = solve_and_verify("zeeman");
        coupled = solve_and_verify("coupled");
        reduced = solve_and_verify("reduced");
        solved = true;
    };

    criteria.emplace_back("constitutive oracle equivalence", criterion1);
    criteria.emplace_back("frame indifference and skew identity", criterion2);
    criteria.emplace_back("observer-gap identity", criterion3);
    criteria.emplace_back("ground-state sanity", [&] {
        ensure_solved();
        return criterion4(identity, zeeman);
    });
    criteria.emplace_back("configurational chain rule", [&] {
        ensure_solved();
        return criterion5(coupled);
    });
    criteria.emplace_back("weak balances at minimizers", [&] {
        ensure_solved();
        return criterion6({&identity, &zeeman, &coupled, &reduced});
    });
    criteria.emplace_back("polyconvexity and growth gate", criterion7);
    criteria.emplace_back("reduced scheme", [&] {
        ensure_solved();
        return criterion8(reduced);
    });
    criteria.emplace_back("determinism", criterion9);

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
