#pragma once

#include "cbody/kernels.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cbody {

/// A discrete state with its evaluated actions, shared read-only by every
/// verification pass.
struct VerifiedState {
    const ManifoldSpec& spec;
    const EnergyModel& model;
    const ReferenceGrid& grid;
    const DeformationField& u;
    const MorphField& nu;
    Execution exec;
    StateEvaluation eval;
    NodalResiduals residuals; ///< whole body, unmasked

    VerifiedState(const ManifoldSpec& s, const EnergyModel& m, const ReferenceGrid& g, const DeformationField& uu,
                  const MorphField& nn, Execution exec = Execution::Parallel);
};

/// Virtual rates at the nodes.
struct RateField {
    std::vector<VecD> h;
    std::vector<VecN> upsilon;

    static RateField zero(const ReferenceGrid& grid, int n);
};

/// Nodal contact actions of a part: t(a) = R^p(a) - theta_p(a) Rm(a), with R^p
/// the residual assembled over the part's cells, theta_p(a) the fraction of
/// the cells around a that belong to the part and Rm the whole-body residual
/// with Dirichlet rows zeroed. Vanishes at nodes interior to the part; exactly
/// additive over disjoint parts.
struct ContactFluxes {
    std::vector<VecD> t_u;
    std::vector<VecN> t_nu;
};

ContactFluxes contact_fluxes(const VerifiedState& st, const Part& part);

/// External power on a part: quadrature of b.h + beta.upsilon over its cells
/// plus the contact power sum_a t(a).(h_a, upsilon_a).
/// Throws NonTangentError if some upsilon is not tangent at its node.
double external_power(const VerifiedState& st, const Part& part, const RateField& rate);

/// P(h + c + q x y, upsilon + A q) - P(h, upsilon), y the current placement.
double power_invariance_gap(const VerifiedState& st, const Part& part, const RateField& rate, const Vec3& c,
                            const Vec3& q);

/// Rate field of a semi-classical observer change: c + q x y and A(nu) q.
RateField rigid_rate(const VerifiedState& st, const Vec3& c, const Vec3& q);

struct IntegralBalances {
    VecD force;
    Vec3 torque;
};

/// Left-hand sides of the integral force and torque balances about the pivot
/// y0 (current placement).
IntegralBalances integral_balances(const VerifiedState& st, const Part& part, const VecD& y0);

/// Node-wise residuals with Dirichlet rows zeroed; r_nu is tangent-projected.
NodalResiduals local_residuals(const VerifiedState& st);

struct SkewResidual {
    std::vector<double> residual; ///< per cell, max over its Gauss points
    std::vector<double> scale;    ///< |P||F| at the same point
    std::vector<double> relative; ///< residual / max(|P||F| + |A*z| + |(DA*)S|, tiny)
};

/// |skw(P F^T) - K(A* z + (DA*) S)| per cell, K the skew matrix with the given
/// axial vector. In d = 2 only the in-plane (e3) axis is compared.
SkewResidual skew_residual(const VerifiedState& st);

/// Skew residual of a single jet/action pair.
double skew_residual_at(const ManifoldSpec& spec, const JetSample& jet, const ActionState& act);

struct TestField {
    std::vector<VecD> h;
    std::vector<VecN> upsilon;
};

/// Hat functions at random interior nodes plus three smooth bumps; zero on
/// Dirichlet nodes, tangent at nu.
std::vector<TestField> make_test_basis(const VerifiedState& st, int size, std::uint64_t seed);

struct WeakResiduals {
    double weak_el = 0.0;
    double weak_sub = 0.0;
};

/// Max over the test fields of the weak Euler-Lagrange / substructural forms,
/// each normalized by the lumped L1 mass of the test field.
WeakResiduals weak_residuals(const VerifiedState& st, const std::vector<TestField>& basis);

struct ConfigurationalResidual {
    std::vector<char> interior;          ///< nodes away from the boundary
    std::vector<VecD> residual;          ///< weak (Div P_eshelby - d_x e) density
    std::vector<VecD> identity_defect;   ///< residual - F^T r_u - N^T r_nu
    double residual_norm = 0.0;          ///< max over interior nodes
    double defect_norm = 0.0;
    double scale = 0.0;                  ///< (max |P_eshelby| + stiffness) / L + max |d_x e|
};

ConfigurationalResidual configurational_residual(const VerifiedState& st);

struct Tolerances {
    double tol_eq = 1e-7;
    double tol_skew = 1e-8;
    double tol_config = 1e-2;
    double tol_identity = 1e-10;
};

/// Constant of the configurational tolerance tol_config = C h / L.
inline constexpr double kConfigToleranceConstant = 0.5;

Tolerances default_tolerances(const ReferenceGrid& grid, double tol_stat, double scale = 1.0);

struct PartBalance {
    double force_norm = 0.0;
    double torque_norm = 0.0;
};

struct BalanceReport {
    VecD force_residual;
    double force_residual_norm = 0.0;
    Vec3 torque_residual = Vec3::Zero();
    double torque_residual_norm = 0.0;
    double local_force_residual_norm = 0.0;
    double micro_residual_norm = 0.0;
    double skew_residual_norm = 0.0;
    double weak_el_residual = 0.0;
    double weak_sub_residual = 0.0;
    double config_residual_norm = 0.0;
    double config_identity_defect = 0.0;
    double power_gap = 0.0;
    double observer_identity_defect = 0.0;
    double cauchy_skew_norm = 0.0;
    double self_action_gap = 0.0;
    VecN micro_integral_diagnostic;
    std::map<std::string, PartBalance> parts;
    Tolerances tolerances;
    std::vector<std::string> failing;

    bool passed() const { return failing.empty(); }
};

BalanceReport verify_balances(const VerifiedState& st, const Tolerances& tol, int test_basis_size,
                              std::uint64_t seed);

} // namespace cbody
