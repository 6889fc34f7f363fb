// Serial reference vs OpenMP kernels on a manufactured state.
#include "cbody/balances.hpp"
#include "cbody/manufactured.hpp"
#include "cbody/solver.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

using namespace cbody;

namespace {

double seconds(const std::function<void()>& f, int reps) {
    f();
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serial vs OpenMP kernel timings"};
    int cells = 16;
    int dim = 3;
    int reps = 5;
    app.add_option("--cells", cells, "Cells per axis")->check(CLI::Range(1, 512));
    app.add_option("--dim", dim, "Dimension")->check(CLI::IsMember({2, 3}));
    app.add_option("--reps", reps, "Repetitions per kernel")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const ManifoldSpec spec = ManifoldSpec::sphere(So3Action::VectorAction);
    const ReferenceGrid grid(dim, {cells, cells, dim == 3 ? cells : 1}, VecD::Zero(dim), VecD::Ones(dim));
    EnergyModel m = EnergyModel::zero_loads(dim, 3);
    m.delta = 0.3;
    m.kappa = 0.2;
    m.alpha = 0.5;
    m.weight.kind = WeightFunction::Kind::LinearRamp;
    m.weight.gradient = VecD::Constant(dim, 0.5);
    const ManufacturedFields f = manufactured_fields(spec, grid, 1, 0.2);

    std::printf("grid %d^%d, %ld cells, %d OpenMP threads, %d reps\n", cells, dim, grid.cell_count(),
                omp_get_max_threads(), reps);
    std::printf("%-24s %12s %12s %8s %s\n", "kernel", "serial [s]", "openmp [s]", "speedup", "identical");

    auto report = [&](const char* name, const std::function<double(Execution)>& kernel) {
        double out_s = 0, out_p = 0;
        const double ts = seconds([&] { out_s = kernel(Execution::Serial); }, reps);
        const double tp = seconds([&] { out_p = kernel(Execution::Parallel); }, reps);
        std::printf("%-24s %12.4e %12.4e %8.2f %s\n", name, ts, tp, ts / tp, out_s == out_p ? "yes" : "NO");
        return out_s == out_p;
    };

    bool ok = true;
    ok &= report("energy", [&](Execution e) {
        double v = 0;
        try_total_energy(spec, m, grid, f.u, f.nu, kMinDet, v, e);
        return v;
    });
    ok &= report("energy+residuals", [&](Execution e) {
        const EnergyAndResiduals r = assemble_energy_and_residuals(spec, m, grid, f.u, f.nu, e);
        double h = r.energy;
        for (const auto& v : r.residuals.r_u) h += v.sum();
        for (const auto& v : r.residuals.r_nu) h += v.sum();
        return h;
    });
    ok &= report("min_jacobian", [&](Execution e) { return min_jacobian(grid, f.u, e); });
    ok &= report("verified_state", [&](Execution e) {
        const VerifiedState st(spec, m, grid, f.u, f.nu, e);
        return st.eval.records.back().act.energy;
    });
    ok &= report("configurational", [&](Execution e) {
        const VerifiedState st(spec, m, grid, f.u, f.nu, e);
        return configurational_residual(st).defect_norm;
    });
    return ok ? 0 : 1;
}
