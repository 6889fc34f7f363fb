#include "cbody/solver.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace cbody {

namespace {

constexpr int kMaxBacktracks = 80;
constexpr double kEnergyResolution = 1e-11;

// g(t) . x'(t) at the end of the step x(t) = (u - t g_u, R(nu - t g_nu)),
// where R normalizes on the sphere: x'(t) = (-g_u, -P(nu_t) g_nu / |nu - t g_nu|).
double path_derivative(const ManifoldSpec& spec, const ReferenceGrid& grid, const MorphField& nu0,
                       const MorphField& nu1, double t, const Gradient& g0, const Gradient& g1) {
    double out = 0.0;
    for (long a = 0; a < grid.node_count(); ++a) {
        out -= g1.g_u[a].dot(g0.g_u[a]);
        if (grid.dirichlet_nu(a)) continue;
        VecN v = tangent_part(spec, nu1.values[a], g0.g_nu[a]);
        if (spec.is_sphere()) v /= (nu0.values[a] - t * g0.g_nu[a]).norm();
        out -= g1.g_nu[a].dot(v);
    }
    return out;
}

bool open_unit(double v) { return v > 0.0 && v < 1.0; }

} // namespace

void SolverConfig::validate() const {
    if (max_iterations < 0) throw ConfigError("solver.max_iterations must be >= 0");
    if (!(tol_stat > 0.0)) throw ConfigError("solver.tol_stat must be > 0");
    if (!(initial_step > 0.0) || !std::isfinite(initial_step)) throw ConfigError("solver.initial_step must be > 0");
    if (!open_unit(backtracking)) throw ConfigError("solver.backtracking must lie in (0, 1)");
    if (!open_unit(sufficient_decrease)) throw ConfigError("solver.sufficient_decrease must lie in (0, 1)");
}

BoundaryData BoundaryData::affine(const ReferenceGrid& grid, const MatD& A, const VecD& b, const VecN& nu0) {
    BoundaryData bd;
    bd.u0.reserve(grid.node_count());
    for (long a = 0; a < grid.node_count(); ++a) bd.u0.push_back(A * grid.node_position(a) + b);
    bd.nu0.assign(grid.node_count(), nu0);
    return bd;
}

void BoundaryData::validate(const ManifoldSpec& spec, const ReferenceGrid& grid) const {
    if (static_cast<long>(u0.size()) != grid.node_count() || static_cast<long>(nu0.size()) != grid.node_count()) {
        throw ConfigError("boundary data does not match the grid");
    }
    for (long a = 0; a < grid.node_count(); ++a) {
        if (u0[a].size() != grid.dim()) throw ConfigError("boundary u0 must have d components");
        if (nu0[a].size() != spec.embedding_dim) throw ConfigError("boundary nu0 must have N components");
        if (grid.dirichlet_nu(a) && !on_manifold(spec, nu0[a], 1e-10)) {
            throw ConfigError("boundary nu0 is not on the manifold at node " + std::to_string(a));
        }
    }
}

FieldState initial_state(const ManifoldSpec& spec, const ReferenceGrid& grid, const BoundaryData& bd,
                         const InitialGuess& guess, std::uint64_t seed) {
    bd.validate(spec, grid);
    const int d = grid.dim();
    const int n = spec.embedding_dim;
    FieldState st;
    st.u.values = bd.u0;

    VecN nu0;
    if (guess.has_nu) {
        if (guess.nu.size() != n) throw ConfigError("initial.nu must have N components");
        nu0 = guess.nu;
    } else {
        VecN sum = VecN::Zero(n);
        long count = 0;
        for (long a = 0; a < grid.node_count(); ++a) {
            if (!grid.dirichlet_nu(a)) continue;
            sum += bd.nu0[a];
            ++count;
        }
        nu0 = count > 0 ? VecN(sum / static_cast<double>(count)) : bd.nu0.front();
    }
    try {
        nu0 = project_point(spec, nu0).coords;
    } catch (const DegenerateRetraction&) {
        throw ConfigError("initial descriptor average has no nearest point on M");
    }
    st.nu = MorphField::constant(grid, nu0);
    for (long a = 0; a < grid.node_count(); ++a) {
        if (grid.dirichlet_nu(a)) st.nu.values[a] = bd.nu0[a];
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double h = grid.spacing().minCoeff();
    for (long a = 0; a < grid.node_count(); ++a) {
        if (guess.u_perturbation > 0.0 && !grid.dirichlet_u(a)) {
            for (int i = 0; i < d; ++i) st.u.values[a][i] += guess.u_perturbation * h * uni(rng);
        }
        if (guess.nu_perturbation > 0.0 && !grid.dirichlet_nu(a)) {
            VecN w(n);
            for (int i = 0; i < n; ++i) w[i] = uni(rng);
            st.nu.values[a] = retract(spec, st.nu.values[a], guess.nu_perturbation * tangent_part(spec, st.nu.values[a], w));
        }
    }
    return st;
}

bool project_fields(const ManifoldSpec& spec, const ReferenceGrid& grid, const BoundaryData& bd,
                    const std::vector<VecD>& du, const std::vector<VecN>& dnu, const FieldState& current,
                    FieldState& trial, Execution exec) {
    const long nodes = grid.node_count();
    if (static_cast<long>(du.size()) != nodes || static_cast<long>(dnu.size()) != nodes) {
        throw DimensionMismatch("step does not match the grid");
    }
    trial.u.values.resize(nodes);
    trial.nu.values.resize(nodes);
    for (long a = 0; a < nodes; ++a) {
        trial.u.values[a] = grid.dirichlet_u(a) ? bd.u0[a] : VecD(current.u.values[a] + du[a]);
        if (grid.dirichlet_nu(a)) {
            trial.nu.values[a] = bd.nu0[a];
        } else {
            trial.nu.values[a] = retract(spec, current.nu.values[a], tangent_part(spec, current.nu.values[a], dnu[a]));
        }
    }
    return min_jacobian(grid, trial.u, exec) > kMinDet;
}

std::string status_name(SolverStatus s) {
    switch (s) {
    case SolverStatus::Converged: return "converged";
    case SolverStatus::BudgetExhausted: return "budget-exhausted";
    case SolverStatus::LineSearchFailed: return "line-search-failed";
    }
    return "unknown";
}

Gradient masked_gradient(const ManifoldSpec& spec, const ReferenceGrid& grid, const MorphField& nu,
                         const NodalResiduals& r) {
    Gradient g;
    g.g_u = r.r_u;
    g.g_nu = r.r_nu;
    for (long a = 0; a < grid.node_count(); ++a) {
        if (grid.dirichlet_u(a)) {
            g.g_u[a].setZero();
        }
        if (grid.dirichlet_nu(a)) {
            g.g_nu[a].setZero();
        } else {
            g.g_nu[a] = tangent_part(spec, nu.values[a], g.g_nu[a]);
        }
        const double va = grid.node_volume(a);
        g.norm = std::max({g.norm, g.g_u[a].norm() / va, g.g_nu[a].norm() / va});
        g.squared += g.g_u[a].squaredNorm() + g.g_nu[a].squaredNorm();
    }
    return g;
}

SolverResult minimize(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid,
                      const BoundaryData& bd, const FieldState& initial, const SolverConfig& cfg, Execution exec) {
    cfg.validate();
    bd.validate(spec, grid);
    check_field_shapes(spec, grid, initial.u, initial.nu);
    const long nodes = grid.node_count();
    for (long a = 0; a < nodes; ++a) {
        if (!on_manifold(spec, initial.nu.values[a], 1e-10)) {
            throw Error("initial descriptor is off the manifold at node " + std::to_string(a));
        }
        if (grid.dirichlet_u(a) && initial.u.values[a] != bd.u0[a]) {
            throw Error("initial deformation violates the Dirichlet data at node " + std::to_string(a));
        }
        if (grid.dirichlet_nu(a) && initial.nu.values[a] != bd.nu0[a]) {
            throw Error("initial descriptor violates the Dirichlet data at node " + std::to_string(a));
        }
    }
    const double det0 = min_jacobian(grid, initial.u, exec);
    if (!(det0 > kMinDet)) {
        throw OrientationError("infeasible initial state: min det F = " + std::to_string(det0));
    }

    SolverResult res;
    res.state = initial;
    EnergyAndResiduals er = assemble_energy_and_residuals(spec, m, grid, res.state.u, res.state.nu, exec);
    Gradient g = masked_gradient(spec, grid, res.state.nu, er.residuals);
    double energy = 0.0;
    try_total_energy(spec, m, grid, res.state.u, res.state.nu, kMinDet, energy, exec);
    const double energy_scale = std::max(std::abs(energy), grid.volume());
    double last_step = 0.0;
    double trial_step = cfg.initial_step / grid.cell_volume();

    std::vector<VecD> du(nodes);
    std::vector<VecN> dnu(nodes);
    FieldState trial;
    for (long k = 0;; ++k) {
        res.history.push_back({k, energy, g.norm, last_step});
        if (g.norm <= cfg.tol_stat) {
            res.status = SolverStatus::Converged;
            res.message = "stationarity tolerance reached";
            return res;
        }
        if (k >= cfg.max_iterations) {
            res.status = SolverStatus::BudgetExhausted;
            res.message = "iteration budget exhausted";
            return res;
        }

        // Energy differences below `resolution` are lost in rounding; there
        // the change along the step is integrated from the exact gradient.
        const double resolution = kEnergyResolution * std::max(std::abs(energy), energy_scale);
        double t = trial_step;
        bool accepted = false;
        double trial_energy = energy;
        EnergyAndResiduals next;
        Gradient gn;
        bool have_next = false;
        for (int bt = 0; bt < kMaxBacktracks; ++bt, t *= cfg.backtracking) {
            for (long a = 0; a < nodes; ++a) {
                du[a] = -t * g.g_u[a];
                dnu[a] = -t * g.g_nu[a];
            }
            if (!project_fields(spec, grid, bd, du, dnu, res.state, trial, exec)) continue;
            double direct = 0.0;
            if (!try_total_energy(spec, m, grid, trial.u, trial.nu, kMinDet, direct, exec)) continue;
            const double decrease = cfg.sufficient_decrease * t * g.squared;
            if (t * g.squared > resolution) {
                if (direct <= energy - decrease) {
                    trial_energy = direct;
                    accepted = true;
                    break;
                }
                continue;
            }
            if (direct > energy + resolution) continue;
            next = assemble_energy_and_residuals(spec, m, grid, trial.u, trial.nu, exec);
            gn = masked_gradient(spec, grid, trial.nu, next.residuals);
            const double change = 0.5 * t * (-g.squared + path_derivative(spec, grid, res.state.nu, trial.nu, t, g, gn));
            if (change <= -decrease) {
                trial_energy = energy + change;
                accepted = true;
                have_next = true;
                break;
            }
        }
        if (!accepted) {
            res.status = SolverStatus::LineSearchFailed;
            res.message = "line search failed below the minimum step at iteration " + std::to_string(k);
            return res;
        }

        if (!have_next) {
            next = assemble_energy_and_residuals(spec, m, grid, trial.u, trial.nu, exec);
            gn = masked_gradient(spec, grid, trial.nu, next.residuals);
        }

        // Barzilai-Borwein (long) step from the displacement/gradient change.
        double ss = 0.0, sy = 0.0;
        for (long a = 0; a < nodes; ++a) {
            const VecD su = trial.u.values[a] - res.state.u.values[a];
            const VecN sn = trial.nu.values[a] - res.state.nu.values[a];
            ss += su.squaredNorm() + sn.squaredNorm();
            sy += su.dot(gn.g_u[a] - g.g_u[a]) + sn.dot(gn.g_nu[a] - g.g_nu[a]);
        }
        trial_step = (sy > 0.0 && ss > 0.0) ? ss / sy : t;

        res.state = std::move(trial);
        trial = FieldState{};
        energy = trial_energy;
        g = std::move(gn);
        last_step = t;
    }
}

double check_discrete_gradient(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid,
                               const FieldState& state, int directions, std::uint64_t seed, double step,
                               Execution exec) {
    const long nodes = grid.node_count();
    const int d = grid.dim();
    const int n = spec.embedding_dim;
    const EnergyAndResiduals er = assemble_energy_and_residuals(spec, m, grid, state.u, state.nu, exec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < directions; ++k) {
        std::vector<VecD> du(nodes, VecD::Zero(d));
        std::vector<VecN> dnu(nodes, VecN::Zero(n));
        double analytic = 0.0, scale = 0.0;
        for (long a = 0; a < nodes; ++a) {
            if (!grid.dirichlet_u(a)) {
                for (int i = 0; i < d; ++i) du[a][i] = normal(rng);
            }
            if (!grid.dirichlet_nu(a)) {
                VecN w(n);
                for (int i = 0; i < n; ++i) w[i] = normal(rng);
                dnu[a] = tangent_part(spec, state.nu.values[a], w);
            }
            const double tu = er.residuals.r_u[a].dot(du[a]);
            const double tn = er.residuals.r_nu[a].dot(dnu[a]);
            analytic += tu + tn;
            scale += std::abs(tu) + std::abs(tn);
        }
        auto energy_at = [&](double t) {
            FieldState moved;
            moved.u.values.resize(nodes);
            moved.nu.values.resize(nodes);
            for (long a = 0; a < nodes; ++a) {
                moved.u.values[a] = state.u.values[a] + t * du[a];
                moved.nu.values[a] = retract(spec, state.nu.values[a], t * dnu[a]);
            }
            double e = 0.0;
            if (!try_total_energy(spec, m, grid, moved.u, moved.nu, 0.0, e, exec)) {
                throw OrientationError("finite-difference step leaves the orientation-preserving set");
            }
            return e;
        };
        const double fd = (energy_at(step) - energy_at(-step)) / (2.0 * step);
        worst = std::max(worst, std::abs(analytic - fd) / std::max(scale, 1e-300));
    }
    return worst;
}

} // namespace cbody
