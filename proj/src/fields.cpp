#include "cbody/fields.hpp"

#include <cmath>
#include <limits>

namespace cbody {

DeformationField DeformationField::identity(const ReferenceGrid& grid) {
    DeformationField u;
    u.values.reserve(grid.node_count());
    for (long n = 0; n < grid.node_count(); ++n) u.values.push_back(grid.node_position(n));
    return u;
}

MorphField MorphField::constant(const ReferenceGrid& grid, const VecN& value) {
    return MorphField{std::vector<VecN>(grid.node_count(), value)};
}

double MinorsVector::norm() const {
    double sq = F.squaredNorm() + det * det;
    if (cof.size() > 0) sq += cof.squaredNorm();
    return std::sqrt(sq);
}

VecD gauss_point(int dim, int q) {
    const double g = 1.0 / std::sqrt(3.0);
    VecD xi(dim);
    for (int a = 0; a < dim; ++a) xi[a] = ((q >> a) & 1) ? g : -g;
    return xi;
}

void shape_functions(const ReferenceGrid& grid, const VecD& xi, double* values, ShapeGradients& gradients) {
    const int d = grid.dim();
    const int corners = 1 << d;
    gradients.resize(corners, d);
    for (int l = 0; l < corners; ++l) {
        double factors[3];
        double dfactors[3];
        for (int a = 0; a < d; ++a) {
            const double sign = ((l >> a) & 1) ? 1.0 : -1.0;
            factors[a] = 0.5 * (1.0 + sign * xi[a]);
            dfactors[a] = sign / grid.spacing()[a]; // d/dx of (1 + sign*xi)/2 with xi = 2(x-x0)/h - 1
        }
        double v = 1.0;
        for (int a = 0; a < d; ++a) v *= factors[a];
        values[l] = v;
        for (int a = 0; a < d; ++a) {
            double g = dfactors[a];
            for (int b = 0; b < d; ++b) {
                if (b != a) g *= factors[b];
            }
            gradients(l, a) = g;
        }
    }
}

void gauss_shape_functions(const ReferenceGrid& grid, int q, double* values, ShapeGradients& gradients) {
    const int d = grid.dim();
    const int corners = 1 << d;
    gradients.resize(corners, d);
    for (int l = 0; l < corners; ++l) {
        values[l] = grid.gauss_phi(q, l);
        for (int a = 0; a < d; ++a) gradients(l, a) = grid.gauss_dphi(q, l, a);
    }
}

namespace {

JetSample jet_from_shapes(const ManifoldSpec& spec, const ReferenceGrid& grid, const DeformationField& u,
                          const MorphField& nu, long cell, const VecD& xi, const double* phi,
                          const ShapeGradients& dphi) {
    const int d = grid.dim();
    const int n = spec.embedding_dim;
    const int corners = 1 << d;
    JetSample jet;
    jet.x = grid.cell_lower_corner(cell);
    for (int a = 0; a < d; ++a) jet.x[a] += 0.5 * (xi[a] + 1.0) * grid.spacing()[a];
    jet.u = VecD::Zero(d);
    jet.F = MatD::Zero(d, d);
    VecN nu_bar = VecN::Zero(n);
    MatND G = MatND::Zero(n, d);
    const long base = grid.cell_base(cell);
    for (int l = 0; l < corners; ++l) {
        const long node = base + grid.corner_offset(l);
        const VecD& ul = u.values[node];
        const VecN& nl = nu.values[node];
        jet.u += phi[l] * ul;
        nu_bar += phi[l] * nl;
        for (int a = 0; a < d; ++a) {
            jet.F.col(a) += dphi(l, a) * ul;
            G.col(a) += dphi(l, a) * nl;
        }
    }
    jet.nu = project_point(spec, nu_bar).coords;
    jet.retraction_scale = spec.is_sphere() ? 1.0 / nu_bar.norm() : 1.0;
    if (spec.is_sphere()) {
        jet.grad_normal = G.transpose() * jet.nu;
        jet.grad = G - jet.nu * jet.grad_normal.transpose();
    } else {
        jet.grad_normal = VecD::Zero(d);
        jet.grad = G;
    }
    return jet;
}

} // namespace

JetSample compute_jet_at(const ManifoldSpec& spec, const ReferenceGrid& grid, const DeformationField& u,
                         const MorphField& nu, long cell, const VecD& xi) {
    double phi[8];
    ShapeGradients dphi;
    shape_functions(grid, xi, phi, dphi);
    return jet_from_shapes(spec, grid, u, nu, cell, xi, phi, dphi);
}

JetSample compute_jet(const ManifoldSpec& spec, const ReferenceGrid& grid, const DeformationField& u,
                      const MorphField& nu, long cell, int quadrature_point) {
    double phi[8];
    ShapeGradients dphi;
    gauss_shape_functions(grid, quadrature_point, phi, dphi);
    return jet_from_shapes(spec, grid, u, nu, cell, gauss_point(grid.dim(), quadrature_point), phi, dphi);
}

MatD cofactor(const MatD& F) {
    const int d = static_cast<int>(F.rows());
    MatD C(d, d);
    if (d == 2) {
        C << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
        return C;
    }
    const Vec3 f0 = F.col(0), f1 = F.col(1), f2 = F.col(2);
    C.col(0) = f1.cross(f2);
    C.col(1) = f2.cross(f0);
    C.col(2) = f0.cross(f1);
    return C;
}

MinorsVector minors(const MatD& F) {
    MinorsVector m;
    m.F = F;
    m.det = det(F);
    if (F.rows() == 3) m.cof = cofactor(F);
    return m;
}

void check_field_shapes(const ManifoldSpec& spec, const ReferenceGrid& grid, const DeformationField& u,
                        const MorphField& nu) {
    if (static_cast<long>(u.values.size()) != grid.node_count() ||
        static_cast<long>(nu.values.size()) != grid.node_count()) {
        throw DimensionMismatch("field has " + std::to_string(u.values.size()) + "/" +
                                std::to_string(nu.values.size()) + " nodal values, grid has " +
                                std::to_string(grid.node_count()) + " nodes");
    }
    for (const auto& v : u.values) {
        if (v.size() != grid.dim()) throw DimensionMismatch("deformation values must have d components");
    }
    for (const auto& v : nu.values) {
        if (v.size() != spec.embedding_dim) throw DimensionMismatch("descriptor values must have N components");
    }
}

DiagnosticsReport field_diagnostics(const ManifoldSpec& spec, const ReferenceGrid& grid, const DeformationField& u,
                                    const MorphField& nu, double r, double s) {
    if (!(r > 1.0) || !(s > 1.0)) throw Error("diagnostic exponents must exceed 1");
    check_field_shapes(spec, grid, u, nu);
    const long cells = grid.cell_count();
    const int nq = grid.quadrature_points_per_cell();
    const double wq = grid.cell_volume() / nq;
    std::vector<double> cell_min(cells), cell_minors(cells), cell_grad(cells);

#pragma omp parallel for schedule(static)
    for (long c = 0; c < cells; ++c) {
        double mn = std::numeric_limits<double>::infinity();
        double sm = 0.0, sg = 0.0;
        for (int q = 0; q < nq; ++q) {
            const JetSample jet = compute_jet(spec, grid, u, nu, c, q);
            const MinorsVector m = minors(jet.F);
            mn = std::min(mn, m.det);
            sm += wq * std::pow(m.norm(), r);
            sg += wq * std::pow(jet.grad.norm(), s);
        }
        cell_min[c] = mn;
        cell_minors[c] = sm;
        cell_grad[c] = sg;
    }

    DiagnosticsReport rep;
    rep.min_det = std::numeric_limits<double>::infinity();
    double sm = 0.0, sg = 0.0;
    for (long c = 0; c < cells; ++c) {
        rep.min_det = std::min(rep.min_det, cell_min[c]);
        sm += cell_minors[c];
        sg += cell_grad[c];
    }
    rep.minors_Lr = std::pow(sm, 1.0 / r);
    rep.grad_Ls = std::pow(sg, 1.0 / s);
    rep.orientation_ok = rep.min_det > 0.0;
    return rep;
}

} // namespace cbody
