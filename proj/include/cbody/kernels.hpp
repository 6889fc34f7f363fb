#pragma once

#include "cbody/actions.hpp"

#include <vector>

namespace cbody {

/// Serial reference loops or OpenMP cell-parallel loops. Both reduce in the
/// same order, so their results are bit-identical.
enum class Execution { Serial, Parallel };

/// Jet and actions at every Gauss point, indexed cell * nq + q.
struct QuadratureRecord {
    JetSample jet;
    ActionState act;
    double weight = 0.0;
};

struct StateEvaluation {
    int points_per_cell = 0;
    std::vector<QuadratureRecord> records;

    const QuadratureRecord& at(long cell, int q) const { return records[cell * points_per_cell + q]; }
};

/// Evaluates jets and actions on every cell. Throws OrientationError naming
/// the first offending cell.
StateEvaluation evaluate_state(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid,
                               const DeformationField& u, const MorphField& nu,
                               Execution exec = Execution::Parallel);

/// Unmasked Galerkin residuals: r_u(a) = sum w (P grad phi_a - b phi_a) and
/// r_nu(a) = sum w (S grad phi_a + J (z - beta) phi_a) in ambient coordinates,
/// restricted to the cells of `part`.
struct NodalResiduals {
    std::vector<VecD> r_u;
    std::vector<VecN> r_nu;
};

NodalResiduals assemble_residuals(const ReferenceGrid& grid, const StateEvaluation& state, const Part& part,
                                  Execution exec = Execution::Parallel);

/// Energy and residuals in one pass, for the solver.
struct EnergyAndResiduals {
    double energy = 0.0;
    NodalResiduals residuals;
};

EnergyAndResiduals assemble_energy_and_residuals(const ManifoldSpec& spec, const EnergyModel& m,
                                                 const ReferenceGrid& grid, const DeformationField& u,
                                                 const MorphField& nu, Execution exec = Execution::Parallel);

/// Energy only. Returns false (and leaves `energy` untouched) when some Gauss
/// point has det F <= min_det.
bool try_total_energy(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid,
                      const DeformationField& u, const MorphField& nu, double min_det, double& energy,
                      Execution exec = Execution::Parallel);

/// Smallest det F over every Gauss point; needs only the deformation.
double min_jacobian(const ReferenceGrid& grid, const DeformationField& u, Execution exec = Execution::Parallel);

} // namespace cbody
