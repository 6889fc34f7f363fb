#pragma once

#include "cbody/kernels.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cbody {

struct SolverConfig {
    long max_iterations = 5000;
    double tol_stat = 1e-8;        ///< max over free nodes of |residual| / node volume
    double initial_step = 1e-2;    ///< first trial step, per unit cell volume
    double backtracking = 0.5;
    double sufficient_decrease = 1e-4;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Prescribed values; only entries at Dirichlet nodes are used.
struct BoundaryData {
    std::vector<VecD> u0;
    std::vector<VecN> nu0;

    /// u0(x) = A x + b everywhere, constant nu0.
    static BoundaryData affine(const ReferenceGrid& grid, const MatD& A, const VecD& b, const VecN& nu0);
    /// Throws ConfigError unless sized to the grid with nu0 on M at Dirichlet nodes.
    void validate(const ManifoldSpec& spec, const ReferenceGrid& grid) const;
};

struct InitialGuess {
    bool has_nu = false;
    VecN nu;                      ///< constant initial descriptor when has_nu
    double nu_perturbation = 0.0; ///< tangent kick size at free nodes
    double u_perturbation = 0.0;  ///< displacement kick, in units of the smallest spacing
};

struct FieldState {
    DeformationField u;
    MorphField nu;
};

/// u: the prescribed u0 extended to every node; nu: the given constant or the
/// projected average of nu0 over the Dirichlet-nu nodes. Optional seeded
/// perturbations touch free nodes only.
FieldState initial_state(const ManifoldSpec& spec, const ReferenceGrid& grid, const BoundaryData& bd,
                         const InitialGuess& guess, std::uint64_t seed);

inline constexpr double kMinDet = 1e-10;

/// current + step with Dirichlet data restored and nu retracted onto M after
/// a tangent step. Returns false (trial rejected) when some Gauss point has
/// det F <= kMinDet.
bool project_fields(const ManifoldSpec& spec, const ReferenceGrid& grid, const BoundaryData& bd,
                    const std::vector<VecD>& du, const std::vector<VecN>& dnu, const FieldState& current,
                    FieldState& trial, Execution exec = Execution::Parallel);

struct HistoryRow {
    long iter = 0;
    double energy = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
};

enum class SolverStatus { Converged, BudgetExhausted, LineSearchFailed };
std::string status_name(SolverStatus s);

struct SolverResult {
    FieldState state;
    std::vector<HistoryRow> history;
    SolverStatus status = SolverStatus::BudgetExhausted;
    std::string message;
};

/// Dirichlet-masked residuals with tangent-projected nu rows, and their
/// stationarity norm max_a |R_a| / V_a.
struct Gradient {
    std::vector<VecD> g_u;
    std::vector<VecN> g_nu;
    double norm = 0.0;
    double squared = 0.0;
};

Gradient masked_gradient(const ManifoldSpec& spec, const ReferenceGrid& grid, const MorphField& nu,
                         const NodalResiduals& r);

/// Compares the assembled residuals with central differences of the total
/// energy along random admissible directions (free nodes, tangent nu moves
/// followed by retraction). Returns max |analytic - fd| / sum |R| |direction|.
double check_discrete_gradient(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid,
                               const FieldState& state, int directions, std::uint64_t seed, double step,
                               Execution exec = Execution::Parallel);

/// Projected gradient descent with Barzilai-Borwein trial steps and Armijo
/// backtracking. Throws OrientationError for an infeasible initial state.
SolverResult minimize(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid,
                      const BoundaryData& bd, const FieldState& initial, const SolverConfig& cfg,
                      Execution exec = Execution::Parallel);

} // namespace cbody
