#include "cbody/kernels.hpp"

#include <limits>

namespace cbody {

namespace {

struct CellContribution {
    std::array<VecD, 8> r_u;
    std::array<VecN, 8> r_nu;
};

void cell_residuals(const ReferenceGrid& grid, const StateEvaluation& state, long cell, CellContribution& out) {
    const int d = grid.dim();
    const int corners = grid.nodes_per_cell();
    const int nq = state.points_per_cell;
    const int n = static_cast<int>(state.at(cell, 0).jet.nu.size());
    for (int l = 0; l < corners; ++l) {
        out.r_u[l] = VecD::Zero(d);
        out.r_nu[l] = VecN::Zero(n);
    }
    double phi[8];
    ShapeGradients dphi;
    for (int q = 0; q < nq; ++q) {
        const QuadratureRecord& rec = state.at(cell, q);
        gauss_shape_functions(grid, q, phi, dphi);
        const VecN self = rec.jet.retraction_scale * (rec.act.z - rec.act.beta);
        for (int l = 0; l < corners; ++l) {
            const VecD g = dphi.row(l).transpose();
            out.r_u[l] += rec.weight * (rec.act.P * g - phi[l] * rec.act.b);
            out.r_nu[l] += rec.weight * (rec.act.S * g + phi[l] * self);
        }
    }
}

NodalResiduals zero_residuals(const ReferenceGrid& grid, int n) {
    NodalResiduals out;
    out.r_u.assign(grid.node_count(), VecD::Zero(grid.dim()));
    out.r_nu.assign(grid.node_count(), VecN::Zero(n));
    return out;
}

// Adds cell contributions to nodes in increasing cell order, either by
// scattering (serial) or by a node-parallel gather over adjacent cells.
void reduce_to_nodes(const ReferenceGrid& grid, const Part& part, const std::vector<CellContribution>& cells,
                     NodalResiduals& out, Execution exec) {
    if (exec == Execution::Serial) {
        for (long c = 0; c < grid.cell_count(); ++c) {
            if (!part.contains(c)) continue;
            for (int l = 0; l < grid.nodes_per_cell(); ++l) {
                const long node = grid.cell_node(c, l);
                out.r_u[node] += cells[c].r_u[l];
                out.r_nu[node] += cells[c].r_nu[l];
            }
        }
        return;
    }
#pragma omp parallel for schedule(static)
    for (long node = 0; node < grid.node_count(); ++node) {
        std::array<long, 8> adj{};
        std::array<int, 8> local{};
        const int count = grid.adjacent_cells(node, adj, local);
        for (int i = 0; i < count; ++i) {
            if (!part.contains(adj[i])) continue;
            out.r_u[node] += cells[adj[i]].r_u[local[i]];
            out.r_nu[node] += cells[adj[i]].r_nu[local[i]];
        }
    }
}

} // namespace

StateEvaluation evaluate_state(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid,
                               const DeformationField& u, const MorphField& nu, Execution exec) {
    check_field_shapes(spec, grid, u, nu);
    const long cells = grid.cell_count();
    const int nq = grid.quadrature_points_per_cell();
    const double wq = grid.cell_volume() / nq;
    StateEvaluation st;
    st.points_per_cell = nq;
    st.records.resize(cells * nq);
    std::vector<char> bad(cells, 0);

    auto body = [&](long c) {
        for (int q = 0; q < nq; ++q) {
            QuadratureRecord& rec = st.records[c * nq + q];
            rec.jet = compute_jet(spec, grid, u, nu, c, q);
            rec.weight = wq;
            if (!(det(rec.jet.F) > 0.0)) {
                bad[c] = 1;
                return;
            }
            rec.act = compute_actions(spec, m, rec.jet);
        }
    };
    if (exec == Execution::Serial) {
        for (long c = 0; c < cells; ++c) body(c);
    } else {
#pragma omp parallel for schedule(static)
        for (long c = 0; c < cells; ++c) body(c);
    }
    for (long c = 0; c < cells; ++c) {
        if (bad[c]) throw OrientationError("det F <= 0 in cell " + std::to_string(c), c);
    }
    return st;
}

NodalResiduals assemble_residuals(const ReferenceGrid& grid, const StateEvaluation& state, const Part& part,
                                  Execution exec) {
    const long cells = grid.cell_count();
    const int n = static_cast<int>(state.records.front().jet.nu.size());
    std::vector<CellContribution> contrib(cells);
    if (exec == Execution::Serial) {
        for (long c = 0; c < cells; ++c) {
            if (part.contains(c)) cell_residuals(grid, state, c, contrib[c]);
        }
    } else {
#pragma omp parallel for schedule(static)
        for (long c = 0; c < cells; ++c) {
            if (part.contains(c)) cell_residuals(grid, state, c, contrib[c]);
        }
    }
    NodalResiduals out = zero_residuals(grid, n);
    reduce_to_nodes(grid, part, contrib, out, exec);
    return out;
}

EnergyAndResiduals assemble_energy_and_residuals(const ManifoldSpec& spec, const EnergyModel& m,
                                                 const ReferenceGrid& grid, const DeformationField& u,
                                                 const MorphField& nu, Execution exec) {
    const StateEvaluation state = evaluate_state(spec, m, grid, u, nu, exec);
    EnergyAndResiduals out;
    out.residuals = assemble_residuals(grid, state, Part::whole(grid), exec);
    const long cells = grid.cell_count();
    const int nq = state.points_per_cell;
    for (long c = 0; c < cells; ++c) {
        double e = 0.0;
        for (int q = 0; q < nq; ++q) e += state.at(c, q).weight * state.at(c, q).act.energy;
        out.energy += e;
    }
    return out;
}

bool try_total_energy(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid,
                      const DeformationField& u, const MorphField& nu, double min_det, double& energy,
                      Execution exec) {
    check_field_shapes(spec, grid, u, nu);
    const long cells = grid.cell_count();
    const int nq = grid.quadrature_points_per_cell();
    const double wq = grid.cell_volume() / nq;
    std::vector<double> per_cell(cells, 0.0);
    std::vector<char> bad(cells, 0);
    auto body = [&](long c) {
        double e = 0.0;
        for (int q = 0; q < nq; ++q) {
            const JetSample jet = compute_jet(spec, grid, u, nu, c, q);
            if (!(det(jet.F) > min_det)) {
                bad[c] = 1;
                return;
            }
            e += wq * density_eval(m, jet);
        }
        per_cell[c] = e;
    };
    if (exec == Execution::Serial) {
        for (long c = 0; c < cells; ++c) body(c);
    } else {
#pragma omp parallel for schedule(static)
        for (long c = 0; c < cells; ++c) body(c);
    }
    double total = 0.0;
    for (long c = 0; c < cells; ++c) {
        if (bad[c]) return false;
        total += per_cell[c];
    }
    energy = total;
    return true;
}

double min_jacobian(const ReferenceGrid& grid, const DeformationField& u, Execution exec) {
    const long cells = grid.cell_count();
    const int d = grid.dim();
    const int nq = grid.quadrature_points_per_cell();
    std::vector<double> per_cell(cells);
    auto body = [&](long c) {
        double mn = std::numeric_limits<double>::infinity();
        double phi[8];
        ShapeGradients dphi;
        for (int q = 0; q < nq; ++q) {
            gauss_shape_functions(grid, q, phi, dphi);
            MatD F = MatD::Zero(d, d);
            for (int l = 0; l < grid.nodes_per_cell(); ++l) {
                const VecD& ul = u.values[grid.cell_node(c, l)];
                for (int a = 0; a < d; ++a) F.col(a) += dphi(l, a) * ul;
            }
            mn = std::min(mn, det(F));
        }
        per_cell[c] = mn;
    };
    if (exec == Execution::Serial) {
        for (long c = 0; c < cells; ++c) body(c);
    } else {
#pragma omp parallel for schedule(static)
        for (long c = 0; c < cells; ++c) body(c);
    }
    double mn = std::numeric_limits<double>::infinity();
    for (double v : per_cell) mn = std::min(mn, v);
    return mn;
}

} // namespace cbody
