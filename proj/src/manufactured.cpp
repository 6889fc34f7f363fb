#include "cbody/manufactured.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace cbody {

namespace {

struct Mode {
    VecD wave;
    double phase = 0.0;
    double weight = 0.0;
};

std::vector<Mode> draw_modes(std::mt19937_64& rng, int dim, const VecD& extents, int count) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Mode> modes;
    for (int k = 0; k < count; ++k) {
        Mode m;
        m.wave = VecD(dim);
        for (int a = 0; a < dim; ++a) m.wave[a] = 2.0 * std::numbers::pi * unit(rng) / extents[a];
        m.phase = std::numbers::pi * unit(rng);
        m.weight = unit(rng);
        modes.push_back(m);
    }
    return modes;
}

double evaluate(const std::vector<Mode>& modes, const VecD& x) {
    double s = 0.0;
    for (const auto& m : modes) s += m.weight * std::sin(m.wave.dot(x) + m.phase);
    return s;
}

} // namespace

ManufacturedFields manufactured_fields(const ManifoldSpec& spec, const ReferenceGrid& grid, std::uint64_t seed,
                                       double amplitude) {
    constexpr int kModes = 3;
    const int d = grid.dim();
    const int n = spec.embedding_dim;
    const double L = grid.extents().minCoeff();
    std::mt19937_64 rng(seed);
    std::vector<std::vector<Mode>> u_modes, nu_modes;
    for (int i = 0; i < d; ++i) u_modes.push_back(draw_modes(rng, d, grid.extents(), kModes));
    for (int i = 0; i < n; ++i) nu_modes.push_back(draw_modes(rng, d, grid.extents(), kModes));
    std::normal_distribution<double> normal;
    VecN base(n);
    for (int i = 0; i < n; ++i) base[i] = normal(rng);
    base /= base.norm();

    ManufacturedFields out;
    out.u.values.reserve(grid.node_count());
    out.nu.values.reserve(grid.node_count());
    for (long a = 0; a < grid.node_count(); ++a) {
        const VecD x = grid.node_position(a);
        VecD u = x;
        for (int i = 0; i < d; ++i) u[i] += amplitude * L / (2.0 * std::numbers::pi) * evaluate(u_modes[i], x - grid.origin());
        VecN v = base;
        for (int i = 0; i < n; ++i) v[i] += amplitude * evaluate(nu_modes[i], x - grid.origin());
        out.u.values.push_back(u);
        out.nu.values.push_back(project_point(spec, v).coords);
    }
    return out;
}

} // namespace cbody
