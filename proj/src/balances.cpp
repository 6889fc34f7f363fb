#include "cbody/balances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace cbody {

namespace {

constexpr double kTiny = 1e-300;

void check_tangent(const ManifoldSpec& spec, const VecN& nu, const VecN& v, long node) {
    if (!spec.is_sphere()) return;
    if (std::abs(nu.dot(v)) > 1e-10 * (1.0 + v.norm())) {
        throw NonTangentError("rate at node " + std::to_string(node) + " is not tangent to M");
    }
}

Vec3 axial(const Mat3& m) { return Vec3(m(1, 2) - m(2, 1), m(2, 0) - m(0, 2), m(0, 1) - m(1, 0)); }

double max_abs_u(const DeformationField& u) {
    double out = 0.0;
    for (const auto& v : u.values) out = std::max(out, v.norm());
    return out;
}

// Fraction of the cells around `node` that belong to `part`.
double cell_fraction(const ReferenceGrid& grid, const Part& part, long node) {
    std::array<long, 8> adj{};
    std::array<int, 8> local{};
    const int count = grid.adjacent_cells(node, adj, local);
    int inside = 0;
    for (int i = 0; i < count; ++i) inside += part.contains(adj[i]) ? 1 : 0;
    return static_cast<double>(inside) / count;
}

struct PowerSum {
    double value = 0.0;
    double magnitude = 0.0; ///< sum of |terms|
};

PowerSum power_sum(const VerifiedState& st, const Part& part, const RateField& rate) {
    const ReferenceGrid& grid = st.grid;
    const int d = grid.dim();
    const int corners = grid.nodes_per_cell();
    const int nq = st.eval.points_per_cell;
    const int n = st.spec.embedding_dim;
    if (static_cast<long>(rate.h.size()) != grid.node_count() ||
        static_cast<long>(rate.upsilon.size()) != grid.node_count()) {
        throw DimensionMismatch("rate field does not match the grid");
    }
    for (long a = 0; a < grid.node_count(); ++a) check_tangent(st.spec, st.nu.values[a], rate.upsilon[a], a);

    PowerSum out;
    double phi[8];
    ShapeGradients dphi;
    for (long c = 0; c < grid.cell_count(); ++c) {
        if (!part.contains(c)) continue;
        for (int q = 0; q < nq; ++q) {
            const QuadratureRecord& rec = st.eval.at(c, q);
            gauss_shape_functions(grid, q, phi, dphi);
            VecD h = VecD::Zero(d);
            VecN v = VecN::Zero(n);
            for (int l = 0; l < corners; ++l) {
                const long node = grid.cell_node(c, l);
                h += phi[l] * rate.h[node];
                v += phi[l] * rate.upsilon[node];
            }
            v = rec.jet.retraction_scale * tangent_part(st.spec, rec.jet.nu, v);
            const double tb = rec.weight * rec.act.b.dot(h);
            const double tz = rec.weight * rec.act.beta.dot(v);
            out.value += tb + tz;
            out.magnitude += std::abs(tb) + std::abs(tz);
        }
    }
    const ContactFluxes t = contact_fluxes(st, part);
    for (long a : part.nodes(grid)) {
        const double tu = t.t_u[a].dot(rate.h[a]);
        const double tn = t.t_nu[a].dot(rate.upsilon[a]);
        out.value += tu + tn;
        out.magnitude += std::abs(tu) + std::abs(tn);
    }
    return out;
}

NodalResiduals masked_residuals(const VerifiedState& st) {
    NodalResiduals r = st.residuals;
    for (long a = 0; a < st.grid.node_count(); ++a) {
        if (st.grid.dirichlet_u(a)) r.r_u[a].setZero();
        if (st.grid.dirichlet_nu(a)) r.r_nu[a].setZero();
    }
    return r;
}

// Normalization of torque-like quantities: volume times (1 + largest |u|).
double moment_scale(const VerifiedState& st, double volume) { return volume * (1.0 + max_abs_u(st.u)); }

double torque_norm(int dim, const Vec3& t) { return dim == 2 ? std::abs(t[2]) : t.norm(); }

std::vector<std::pair<std::string, Part>> balance_parts(const ReferenceGrid& grid) {
    std::vector<std::pair<std::string, Part>> parts;
    parts.emplace_back("whole", Part::whole(grid));
    const int d = grid.dim();
    for (int k = 0; k < (1 << d); ++k) {
        std::array<int, 3> lo{0, 0, 0}, hi{1, 1, 1};
        bool empty = false;
        std::string name = "octant-";
        for (int a = 0; a < 3; ++a) {
            if (a >= d) continue;
            const int cells = grid.cells_along(a);
            const int mid = cells / 2;
            const bool upper = (k >> a) & 1;
            lo[a] = upper ? mid : 0;
            hi[a] = upper ? cells : mid;
            if (lo[a] >= hi[a]) empty = true;
            name += upper ? '1' : '0';
        }
        if (!empty) parts.emplace_back(name, Part::box(grid, lo, hi));
    }
    return parts;
}

double part_volume(const ReferenceGrid& grid, const Part& part) { return part.cell_count() * grid.cell_volume(); }

} // namespace

VerifiedState::VerifiedState(const ManifoldSpec& s, const EnergyModel& m, const ReferenceGrid& g,
                             const DeformationField& uu, const MorphField& nn, Execution e)
    : spec(s), model(m), grid(g), u(uu), nu(nn), exec(e), eval(evaluate_state(s, m, g, uu, nn, e)),
      residuals(assemble_residuals(g, eval, Part::whole(g), e)) {}

RateField RateField::zero(const ReferenceGrid& grid, int n) {
    RateField r;
    r.h.assign(grid.node_count(), VecD::Zero(grid.dim()));
    r.upsilon.assign(grid.node_count(), VecN::Zero(n));
    return r;
}

ContactFluxes contact_fluxes(const VerifiedState& st, const Part& part) {
    const ReferenceGrid& grid = st.grid;
    const NodalResiduals rp = assemble_residuals(grid, st.eval, part, st.exec);
    const NodalResiduals rm = masked_residuals(st);
    ContactFluxes out;
    out.t_u.assign(grid.node_count(), VecD::Zero(grid.dim()));
    out.t_nu.assign(grid.node_count(), VecN::Zero(st.spec.embedding_dim));
    for (long a : part.nodes(grid)) {
        if (part.is_interior_node(grid, a) && !grid.dirichlet_u(a) && !grid.dirichlet_nu(a)) continue;
        const double theta = cell_fraction(grid, part, a);
        out.t_u[a] = rp.r_u[a] - theta * rm.r_u[a];
        out.t_nu[a] = rp.r_nu[a] - theta * rm.r_nu[a];
    }
    return out;
}

double external_power(const VerifiedState& st, const Part& part, const RateField& rate) {
    return power_sum(st, part, rate).value;
}

RateField rigid_rate(const VerifiedState& st, const Vec3& c, const Vec3& q) {
    const int d = st.grid.dim();
    RateField r = RateField::zero(st.grid, st.spec.embedding_dim);
    for (long a = 0; a < st.grid.node_count(); ++a) {
        const Vec3 v = c + q.cross(pad3(st.u.values[a]));
        r.h[a] = v.head(d);
        if (st.spec.vector_action()) r.upsilon[a] = generator_action(st.spec, st.nu.values[a], q);
    }
    return r;
}

double power_invariance_gap(const VerifiedState& st, const Part& part, const RateField& rate, const Vec3& c,
                            const Vec3& q) {
    const RateField rigid = rigid_rate(st, c, q);
    RateField moved = rate;
    for (long a = 0; a < st.grid.node_count(); ++a) {
        moved.h[a] += rigid.h[a];
        moved.upsilon[a] += rigid.upsilon[a];
    }
    return external_power(st, part, moved) - external_power(st, part, rate);
}

IntegralBalances integral_balances(const VerifiedState& st, const Part& part, const VecD& y0) {
    const ReferenceGrid& grid = st.grid;
    const int d = grid.dim();
    const int nq = st.eval.points_per_cell;
    const bool vec = st.spec.vector_action();
    const Vec3 p0 = pad3(y0);
    IntegralBalances out;
    out.force = VecD::Zero(d);
    out.torque = Vec3::Zero();
    for (long c = 0; c < grid.cell_count(); ++c) {
        if (!part.contains(c)) continue;
        for (int q = 0; q < nq; ++q) {
            const QuadratureRecord& rec = st.eval.at(c, q);
            out.force += rec.weight * rec.act.b;
            out.torque += rec.weight * (pad3(rec.jet.u) - p0).cross(pad3(rec.act.b));
            if (vec) out.torque += rec.weight * adjoint_action(st.spec, rec.jet.nu, rec.act.beta);
        }
    }
    const ContactFluxes t = contact_fluxes(st, part);
    for (long a : part.nodes(grid)) {
        out.force += t.t_u[a];
        out.torque += (pad3(st.u.values[a]) - p0).cross(pad3(t.t_u[a]));
        if (vec) out.torque += adjoint_action(st.spec, st.nu.values[a], t.t_nu[a]);
    }
    return out;
}

NodalResiduals local_residuals(const VerifiedState& st) {
    NodalResiduals r = masked_residuals(st);
    for (long a = 0; a < st.grid.node_count(); ++a) r.r_nu[a] = tangent_part(st.spec, st.nu.values[a], r.r_nu[a]);
    return r;
}

double skew_residual_at(const ManifoldSpec& spec, const JetSample& jet, const ActionState& act) {
    const Mat3 M = pad3(act.P) * pad3(jet.F).transpose();
    Vec3 w = Vec3::Zero();
    if (spec.vector_action()) {
        w = adjoint_action(spec, jet.nu, act.z) + adjoint_gradient_contraction(spec, act.S, jet.ambient_grad());
    }
    const Vec3 diff = axial(M) - w;
    // |skw(M) - K(w)| = |axial(M) - w| / sqrt(2)
    const double n = jet.F.rows() == 2 ? std::abs(diff[2]) : diff.norm();
    return n / std::numbers::sqrt2;
}

SkewResidual skew_residual(const VerifiedState& st) {
    const long cells = st.grid.cell_count();
    const int nq = st.eval.points_per_cell;
    SkewResidual out;
    out.residual.assign(cells, 0.0);
    out.scale.assign(cells, 0.0);
    out.relative.assign(cells, 0.0);
    auto body = [&](long c) {
        for (int q = 0; q < nq; ++q) {
            const QuadratureRecord& rec = st.eval.at(c, q);
            const double res = skew_residual_at(st.spec, rec.jet, rec.act);
            const double pf = rec.act.P.norm() * rec.jet.F.norm();
            double full = pf;
            if (st.spec.vector_action()) {
                full += adjoint_action(st.spec, rec.jet.nu, rec.act.z).norm();
                const MatND G = rec.jet.ambient_grad();
                for (int k = 0; k < G.cols(); ++k) full += G.col(k).norm() * rec.act.S.col(k).norm();
            }
            out.residual[c] = std::max(out.residual[c], res);
            out.scale[c] = std::max(out.scale[c], pf);
            out.relative[c] = std::max(out.relative[c], full > kTiny ? res / full : res);
        }
    };
    if (st.exec == Execution::Serial) {
        for (long c = 0; c < cells; ++c) body(c);
    } else {
#pragma omp parallel for schedule(static)
        for (long c = 0; c < cells; ++c) body(c);
    }
    return out;
}

std::vector<TestField> make_test_basis(const VerifiedState& st, int size, std::uint64_t seed) {
    const ReferenceGrid& grid = st.grid;
    const int d = grid.dim();
    const int n = st.spec.embedding_dim;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_unit_d = [&]() {
        VecD v(d);
        for (int i = 0; i < d; ++i) v[i] = gauss(rng);
        return VecD(v / v.norm());
    };
    auto random_n = [&]() {
        VecN v(n);
        for (int i = 0; i < n; ++i) v[i] = gauss(rng);
        return v;
    };
    auto unit_tangent = [&](long a) {
        for (;;) {
            const VecN t = tangent_part(st.spec, st.nu.values[a], random_n());
            if (t.norm() > 1e-3) return VecN(t / t.norm());
        }
    };

    std::vector<long> interior;
    for (long a = 0; a < grid.node_count(); ++a) {
        if (!grid.is_boundary_node(a) && !grid.dirichlet_u(a) && !grid.dirichlet_nu(a)) interior.push_back(a);
    }
    const int bumps = std::min(size, 3);
    const int hats = interior.empty() ? 0 : size - bumps;

    std::vector<TestField> basis;
    auto empty_field = [&]() {
        TestField f;
        f.h.assign(grid.node_count(), VecD::Zero(d));
        f.upsilon.assign(grid.node_count(), VecN::Zero(n));
        return f;
    };
    std::uniform_int_distribution<std::size_t> pick(0, interior.empty() ? 0 : interior.size() - 1);
    for (int k = 0; k < hats; ++k) {
        TestField f = empty_field();
        const long a = interior[pick(rng)];
        f.h[a] = random_unit_d();
        f.upsilon[a] = unit_tangent(a);
        basis.push_back(std::move(f));
    }
    for (int k = 0; k < bumps; ++k) {
        TestField f = empty_field();
        const VecD e = random_unit_d();
        const VecN v = random_n();
        for (long a = 0; a < grid.node_count(); ++a) {
            const VecD x = grid.node_position(a);
            double b = 1.0;
            for (int i = 0; i < d; ++i) {
                const double t = (x[i] - grid.origin()[i]) / grid.extents()[i];
                b *= std::sin((k + 1) * std::numbers::pi * t);
            }
            if (!grid.dirichlet_u(a)) f.h[a] = b * e;
            if (!grid.dirichlet_nu(a)) f.upsilon[a] = b * tangent_part(st.spec, st.nu.values[a], v);
        }
        basis.push_back(std::move(f));
    }
    return basis;
}

WeakResiduals weak_residuals(const VerifiedState& st, const std::vector<TestField>& basis) {
    const ReferenceGrid& grid = st.grid;
    WeakResiduals out;
    for (const TestField& f : basis) {
        double el = 0.0, sub = 0.0, mass_el = 0.0, mass_sub = 0.0;
        for (long a = 0; a < grid.node_count(); ++a) {
            check_tangent(st.spec, st.nu.values[a], f.upsilon[a], a);
            const double va = grid.node_volume(a);
            const double tu = f.h[a].dot(st.residuals.r_u[a]);
            const double tn = f.upsilon[a].dot(st.residuals.r_nu[a]);
            el += tu + tn;
            sub += tn;
            mass_el += va * (f.h[a].norm() + f.upsilon[a].norm());
            mass_sub += va * f.upsilon[a].norm();
        }
        if (mass_el > 0.0) out.weak_el = std::max(out.weak_el, std::abs(el) / mass_el);
        if (mass_sub > 0.0) out.weak_sub = std::max(out.weak_sub, std::abs(sub) / mass_sub);
    }
    return out;
}

ConfigurationalResidual configurational_residual(const VerifiedState& st) {
    const ReferenceGrid& grid = st.grid;
    const int d = grid.dim();
    const int nq = st.eval.points_per_cell;
    const long nodes = grid.node_count();
    const NodalResiduals local = local_residuals(st);

    ConfigurationalResidual out;
    out.interior.assign(nodes, 0);
    out.residual.assign(nodes, VecD::Zero(d));
    out.identity_defect.assign(nodes, VecD::Zero(d));

    double max_eshelby = 0.0, max_dx = 0.0;
    for (const auto& rec : st.eval.records) {
        max_eshelby = std::max(max_eshelby, rec.act.eshelby.norm());
        max_dx = std::max(max_dx, rec.act.dx_energy.norm());
    }
    const double length = grid.extents().minCoeff();
    const EnergyModel& m = st.model;
    const double w_max = m.weight.bounds(grid.origin(), grid.extents()).second;
    const double stiffness =
        w_max * (std::abs(m.mu) + std::abs(m.delta) + std::abs(m.c4) + std::abs(m.kappa) + std::abs(m.alpha));
    out.scale = (max_eshelby + stiffness) / length + max_dx;

    std::vector<double> res_norm(nodes, 0.0), def_norm(nodes, 0.0);
    auto body = [&](long a) {
        if (grid.is_boundary_node(a)) return;
        out.interior[a] = 1;
        std::array<long, 8> adj{};
        std::array<int, 8> local_index{};
        const int count = grid.adjacent_cells(a, adj, local_index);
        double phi[8];
        ShapeGradients dphi;
        VecD c = VecD::Zero(d);
        MatD F = MatD::Zero(d, d);
        MatND N = MatND::Zero(st.spec.embedding_dim, d);
        double mass = 0.0;
        for (int i = 0; i < count; ++i) {
            for (int q = 0; q < nq; ++q) {
                const QuadratureRecord& rec = st.eval.at(adj[i], q);
                gauss_shape_functions(grid, q, phi, dphi);
                const int l = local_index[i];
                const VecD g = dphi.row(l).transpose();
                c -= rec.weight * (rec.act.eshelby * g + phi[l] * rec.act.dx_energy);
                F += rec.weight * phi[l] * rec.jet.F;
                N += rec.weight * phi[l] * rec.jet.grad;
                mass += rec.weight * phi[l];
            }
        }
        const double va = grid.node_volume(a);
        c /= va;
        F /= mass;
        N /= mass;
        const VecD defect = c - F.transpose() * (local.r_u[a] / va) - N.transpose() * (local.r_nu[a] / va);
        out.residual[a] = c;
        out.identity_defect[a] = defect;
        res_norm[a] = c.norm();
        def_norm[a] = defect.norm();
    };
    if (st.exec == Execution::Serial) {
        for (long a = 0; a < nodes; ++a) body(a);
    } else {
#pragma omp parallel for schedule(static)
        for (long a = 0; a < nodes; ++a) body(a);
    }
    for (long a = 0; a < nodes; ++a) {
        out.residual_norm = std::max(out.residual_norm, res_norm[a]);
        out.defect_norm = std::max(out.defect_norm, def_norm[a]);
    }
    return out;
}

Tolerances default_tolerances(const ReferenceGrid& grid, double tol_stat, double scale) {
    Tolerances t;
    t.tol_eq = 10.0 * tol_stat * scale;
    t.tol_skew = 1e-8 * scale;
    t.tol_config = kConfigToleranceConstant * grid.spacing().maxCoeff() / grid.extents().minCoeff() * scale;
    t.tol_identity = 1e-10 * scale;
    return t;
}

BalanceReport verify_balances(const VerifiedState& st, const Tolerances& tol, int test_basis_size,
                              std::uint64_t seed) {
    const ReferenceGrid& grid = st.grid;
    const int d = grid.dim();
    const int n = st.spec.embedding_dim;
    BalanceReport rep;
    rep.tolerances = tol;
    auto flag = [&](const std::string& name, double value, double limit) {
        if (!(value <= limit)) rep.failing.push_back(name);
    };

    // Pointwise (weak-assembled) residual densities.
    const NodalResiduals local = local_residuals(st);
    for (long a = 0; a < grid.node_count(); ++a) {
        const double va = grid.node_volume(a);
        rep.local_force_residual_norm = std::max(rep.local_force_residual_norm, local.r_u[a].norm() / va);
        rep.micro_residual_norm = std::max(rep.micro_residual_norm, local.r_nu[a].norm() / va);
    }
    flag("local_force", rep.local_force_residual_norm, tol.tol_eq);
    flag("micro", rep.micro_residual_norm, tol.tol_eq);

    // Integral balances on the whole body and on its octants.
    for (const auto& [name, part] : balance_parts(grid)) {
        const IntegralBalances ib = integral_balances(st, part, VecD::Zero(d));
        const double vol = part_volume(grid, part);
        PartBalance pb;
        pb.force_norm = ib.force.norm() / vol;
        pb.torque_norm = torque_norm(d, ib.torque) / moment_scale(st, vol);
        rep.parts[name] = pb;
        if (name == "whole") {
            rep.force_residual = ib.force;
            rep.force_residual_norm = pb.force_norm;
            rep.torque_residual = ib.torque;
            rep.torque_residual_norm = pb.torque_norm;
            flag("force", pb.force_norm, tol.tol_eq);
            flag("torque", pb.torque_norm, tol.tol_eq);
        } else {
            flag("force:" + name, pb.force_norm, tol.tol_eq);
            flag("torque:" + name, pb.torque_norm, tol.tol_eq);
        }
    }

    // Rigid-rate power and the observer-gap identity.
    {
        const Part whole = Part::whole(grid);
        const double vol = grid.volume();
        const double mscale = moment_scale(st, vol);
        const IntegralBalances ib = integral_balances(st, whole, VecD::Zero(d));
        const RateField zero = RateField::zero(grid, n);
        for (int i = 0; i < 3; ++i) {
            for (int kind = 0; kind < 2; ++kind) {
                if (kind == 0 && i >= d) continue;
                if (kind == 1 && d == 2 && i != 2) continue;
                Vec3 c = Vec3::Zero(), q = Vec3::Zero();
                (kind == 0 ? c : q)[i] = 1.0;
                const RateField rigid = rigid_rate(st, c, q);
                const PowerSum p = power_sum(st, whole, rigid);
                const double gap = power_invariance_gap(st, whole, zero, c, q);
                const double predicted = pad3(ib.force).dot(c) + ib.torque.dot(q);
                rep.power_gap = std::max(rep.power_gap, std::abs(gap) / (kind == 0 ? vol : mscale));
                rep.observer_identity_defect =
                    std::max(rep.observer_identity_defect, std::abs(gap - predicted) / (1.0 + p.magnitude));
            }
        }
        flag("power_gap", rep.power_gap, tol.tol_eq);
        flag("observer_identity", rep.observer_identity_defect, tol.tol_identity);
    }

    const SkewResidual skew = skew_residual(st);
    for (double v : skew.relative) rep.skew_residual_norm = std::max(rep.skew_residual_norm, v);
    flag("skew", rep.skew_residual_norm, tol.tol_skew);

    const WeakResiduals weak = weak_residuals(st, make_test_basis(st, test_basis_size, seed));
    rep.weak_el_residual = weak.weak_el;
    rep.weak_sub_residual = weak.weak_sub;
    flag("weak_el", rep.weak_el_residual, tol.tol_eq);
    flag("weak_sub", rep.weak_sub_residual, tol.tol_eq);

    const ConfigurationalResidual conf = configurational_residual(st);
    if (conf.scale > kTiny) {
        rep.config_residual_norm = conf.residual_norm / conf.scale;
        rep.config_identity_defect = conf.defect_norm / conf.scale;
    } else {
        rep.config_residual_norm = conf.residual_norm;
        rep.config_identity_defect = conf.defect_norm;
    }
    flag("configurational", rep.config_residual_norm, tol.tol_config);

    // Diagnostics: Cauchy symmetry, the pointwise reduced balance z = beta,
    // and the ambient integral of the substructural residual (unflagged).
    rep.micro_integral_diagnostic = VecN::Zero(n);
    for (const auto& r : st.residuals.r_nu) rep.micro_integral_diagnostic += r;
    for (const auto& rec : st.eval.records) {
        const Mat3 M = pad3(rec.act.P) * pad3(rec.jet.F).transpose();
        const double mn = M.norm();
        if (mn > kTiny) rep.cauchy_skew_norm = std::max(rep.cauchy_skew_norm, (0.5 * (M - M.transpose())).norm() / mn);
        rep.self_action_gap = std::max(rep.self_action_gap, (rec.act.z - rec.act.beta).norm());
    }
    if (st.model.kappa == 0.0) flag("reduced", rep.self_action_gap, tol.tol_eq);
    return rep;
}

} // namespace cbody
