#pragma once

#include "cbody/types.hpp"

#include <string>
#include <string_view>

namespace cbody {

enum class ManifoldKind { SphereS2, EuclideanRk };
enum class So3Action { VectorAction, TrivialAction };

/// The manifold of substructural shapes, embedded in R^N, together with
/// the SO(3) action used by observer changes.
struct ManifoldSpec {
    ManifoldKind kind = ManifoldKind::SphereS2;
    int embedding_dim = 3;
    So3Action action = So3Action::VectorAction;

    static ManifoldSpec sphere(So3Action action);
    static ManifoldSpec euclidean(int k);

    /// Accepts "s2-vector", "s2-trivial" and "rk-trivial:<k>".
    static ManifoldSpec parse(std::string_view key);
    std::string key() const;

    int tangent_dim() const { return kind == ManifoldKind::SphereS2 ? 2 : embedding_dim; }
    bool is_sphere() const { return kind == ManifoldKind::SphereS2; }
    bool vector_action() const { return action == So3Action::VectorAction; }
};

struct ManifoldPoint {
    VecN coords;
};

struct TangentCovector {
    VecN base;
    VecN comps;
};

struct AdjointBundle {
    Vec3 astar_mu;
    Vec3 dastar_S;
};

/// True when `p` satisfies the ManifoldPoint invariants within `tol`.
bool on_manifold(const ManifoldSpec& spec, const VecN& p, double tol = 1e-12);

/// Nearest point of M to p in the ambient metric.
ManifoldPoint project_point(const ManifoldSpec& spec, const VecN& p);

/// Orthogonal projection of w onto T_nu M.
TangentCovector project_tangent(const ManifoldSpec& spec, const ManifoldPoint& nu, const VecN& w);

/// A(nu) q.
TangentCovector rotation_generator(const ManifoldSpec& spec, const ManifoldPoint& nu, const Vec3& q);

/// A*(nu) mu and the contraction (DA*) S, where `grad` holds the spatial
/// derivative of the descriptor field column by column.
AdjointBundle rotation_adjoint_bundle(const ManifoldSpec& spec, const ManifoldPoint& nu,
                                      const TangentCovector& mu, const MatND& S, const MatND& grad);

/// Orthonormal basis of T_nu M as the columns of an N x m matrix.
MatNN tangent_basis(const ManifoldSpec& spec, const VecN& nu);

// Raw-vector variants used by the inner kernels.
VecN tangent_part(const ManifoldSpec& spec, const VecN& nu, const VecN& w);
MatND tangent_part_columns(const ManifoldSpec& spec, const VecN& nu, const MatND& m);
VecN retract(const ManifoldSpec& spec, const VecN& nu, const VecN& step);
Vec3 adjoint_action(const ManifoldSpec& spec, const VecN& nu, const VecN& mu);
Vec3 adjoint_gradient_contraction(const ManifoldSpec& spec, const MatND& S, const MatND& grad);
VecN generator_action(const ManifoldSpec& spec, const VecN& nu, const Vec3& q);

} // namespace cbody
