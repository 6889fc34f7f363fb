#pragma once

#include "cbody/grid.hpp"
#include "cbody/manifold.hpp"

#include <vector>

namespace cbody {

/// Nodal values of the transplacement u.
struct DeformationField {
    std::vector<VecD> values;

    static DeformationField identity(const ReferenceGrid& grid);
};

/// Nodal values of the morphological descriptor.
struct MorphField {
    std::vector<VecN> values;

    static MorphField constant(const ReferenceGrid& grid, const VecN& value);
};

/// First prolongation (x, u, F, nu, N) at one point of a cell.
///
/// `grad` is the tangent-projected descriptor gradient. The discrete field
/// also has a normal gradient component (its ambient derivative is
/// grad + nu (x) grad_normal) and the interpolated-then-retracted descriptor
/// carries the retraction Jacobian factor 1/|nu_bar|; both are kept so the
/// constitutive derivatives can match the discrete energy exactly.
struct JetSample {
    VecD x;
    VecD u;
    MatD F;
    VecN nu;
    MatND grad;
    VecD grad_normal;
    double retraction_scale = 1.0;

    MatND ambient_grad() const { return grad + nu * grad_normal.transpose(); }
};

/// (F, cof F, det F) for d = 3; (F, det F) for d = 2 (cof left empty).
struct MinorsVector {
    MatD F;
    MatD cof;
    double det = 0.0;

    double norm() const;
};

struct DiagnosticsReport {
    double min_det = 0.0;
    double minors_Lr = 0.0;
    double grad_Ls = 0.0;
    bool orientation_ok = false;
};

/// Local coordinates in [-1, 1]^d of Gauss point `q` (bit b: sign along axis b).
VecD gauss_point(int dim, int q);

/// Jet of the per-cell multilinear interpolant at the local point `xi`.
JetSample compute_jet_at(const ManifoldSpec& spec, const ReferenceGrid& grid, const DeformationField& u,
                         const MorphField& nu, long cell, const VecD& xi);

JetSample compute_jet(const ManifoldSpec& spec, const ReferenceGrid& grid, const DeformationField& u,
                      const MorphField& nu, long cell, int quadrature_point);

using ShapeGradients = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 3>;

/// Shape-function values and physical gradients (row per local node) at `xi`.
void shape_functions(const ReferenceGrid& grid, const VecD& xi, double* values, ShapeGradients& gradients);

/// Same as shape_functions at Gauss point `q`, from the grid's table.
void gauss_shape_functions(const ReferenceGrid& grid, int q, double* values, ShapeGradients& gradients);

MatD cofactor(const MatD& F);
MinorsVector minors(const MatD& F);

DiagnosticsReport field_diagnostics(const ManifoldSpec& spec, const ReferenceGrid& grid, const DeformationField& u,
                                    const MorphField& nu, double r, double s);

/// Throws DimensionMismatch unless both fields match the grid and manifold.
void check_field_shapes(const ManifoldSpec& spec, const ReferenceGrid& grid, const DeformationField& u,
                        const MorphField& nu);

} // namespace cbody
