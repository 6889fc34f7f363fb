#pragma once

#include "cbody/energy.hpp"

#include <cstdint>

namespace cbody {

/// Standard and substructural actions at one jet.
struct ActionState {
    MatD P;       ///< first Piola-Kirchhoff stress
    MatND S;      ///< microstress, columns tangent at nu
    VecN z;       ///< self-action
    VecN beta;    ///< external substructural bulk action
    VecD b;       ///< standard bulk action
    MatD eshelby; ///< e I - F^T P - N^T S
    double energy = 0.0;
    VecD dx_energy; ///< explicit x-derivative of e
};

/// Closed-form derivatives of the built-in density.
///
/// z is the derivative of the internal density along M with the ambient
/// descriptor gradient held fixed: the tangent part of d(e_int)/d(nu) plus
/// the curvature term -S (grad_normal) from re-projecting the gradient.
ActionState compute_actions(const ManifoldSpec& spec, const EnergyModel& m, const JetSample& jet);

/// Central differences of density_eval in u, F, nu (retracted tangent
/// steps, ambient gradient fixed) and N.
ActionState fd_oracle(const ManifoldSpec& spec, const EnergyModel& m, const JetSample& jet, double step);

/// Moderate random jet for oracle comparisons: F = I + 0.3 G with det F >= 0.2,
/// nu on M, O(1) tangent and normal gradients, x inside the box.
JetSample random_jet(const ManifoldSpec& spec, int dim, const VecD& origin, const VecD& extents,
                     std::uint64_t seed);

struct SelfActionSplit {
    VecN z1;
    VecN z2; ///< component in Ker A*(nu)
};

SelfActionSplit decompose_self_action(const ManifoldSpec& spec, const VecN& nu, const VecN& z);

MatD eshelby_tensor(const ManifoldSpec& spec, const EnergyModel& m, const JetSample& jet);

/// Largest entrywise deviation of `a` from `b` across every action, relative
/// to max(1, |b|) per quantity.
double max_relative_deviation(const ActionState& a, const ActionState& b);

} // namespace cbody
