#pragma once

#include "cbody/fields.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cbody {

/// Positive scalar weight w(x) multiplying the internal energy.
struct WeightFunction {
    enum class Kind { Constant, LinearRamp };
    Kind kind = Kind::Constant;
    double value = 1.0;
    VecD gradient; ///< used by LinearRamp: w(x) = value + gradient . x

    double operator()(const VecD& x) const;
    VecD derivative(int dim) const;
    /// Extreme values over the box [origin, origin + extents].
    std::pair<double, double> bounds(const VecD& origin, const VecD& extents) const;
};

/// Coefficients of the built-in stored energy
///
///   e = w(x) [ mu/2 (|F|^2 - d - 2 ln J)
///            + delta (|cof F|^r - d^{r/2} - a d^{r/2} ln J)     a = (d-1) r / d
///            + delta (J^r - 1 - r ln J)
///            + kappa/s |N|^s + alpha/2 |F^T nu|^2
///            + c4 (J - ln J - 1) ]
///       - b0 . u - beta0 . nu
///
/// Every bracketed group is polyconvex, non-negative, and vanishes with zero
/// stress at F = I; nu enters the coupling through its first min(d, N) entries.
struct EnergyModel {
    double mu = 1.0;
    double delta = 0.0;
    double c4 = 1.0;
    double kappa = 0.0;
    double alpha = 0.0;
    double r = 2.0;
    double s = 2.0;
    VecD body_force;          ///< b0, d entries
    VecN substructural_field; ///< beta0, N entries
    WeightFunction weight;

    /// Default model sized for dimension `dim` and descriptor dimension `n`.
    static EnergyModel zero_loads(int dim, int n);

    /// Checks exponents, finiteness, load sizes and positivity of w on the box.
    void validate(int dim, int n, const VecD& origin, const VecD& extents) const;
};

/// Coefficient-only part of the internal density (without w(x)).
double internal_bracket(const EnergyModel& m, const MatD& F, const VecN& nu, const MatND& grad);

double internal_density(const EnergyModel& m, const JetSample& jet);
double external_density(const EnergyModel& m, const JetSample& jet);

/// e(x, u, F, nu, N). Throws OrientationError when det F <= 0.
double density_eval(const EnergyModel& m, const JetSample& jet);

/// Polyconvex representative Pe(x, u, nu, xi, N); +inf when the det block is <= 0.
double polyconvex_density(const EnergyModel& m, const VecD& x, const VecD& u, const VecN& nu, const MinorsVector& xi,
                          const MatND& grad);

/// Barrier c4 (t - ln t - 1).
double barrier(const EnergyModel& m, double t);

/// Energy of one cell (sum over its Gauss points).
double cell_energy(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid, const DeformationField& u,
                   const MorphField& nu, long cell);

/// Quadrature of the density over all cells. Throws OrientationError naming the cell.
double total_energy(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid,
                    const DeformationField& u, const MorphField& nu);

/// Energy restricted to a set of cells.
double part_energy(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid,
                   const DeformationField& u, const MorphField& nu, const Part& part);

struct GrowthConstants {
    double C1 = 0.0;
    double C0 = 0.0;
    double w_min = 1.0;
    double w_max = 1.0;
    bool coercive = false; ///< C1 > 0 and c4 > 0
};

GrowthConstants growth_constants(const EnergyModel& m, int dim, const VecD& origin, const VecD& extents);

struct ProbeWitness {
    std::string kind; ///< "consistency", "convexity" or "growth"
    long sample = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    std::vector<double> F;
    std::vector<double> grad;
    std::vector<double> nu;
};

struct ProbeReport {
    long samples = 0;
    long consistency_violations = 0;
    long convexity_violations = 0;
    long growth_violations = 0;
    double max_consistency_error = 0.0;
    GrowthConstants growth;
    std::vector<ProbeWitness> witnesses;

    long violations() const { return consistency_violations + convexity_violations + growth_violations; }
    bool passed() const { return violations() == 0; }
};

/// Samples the polyconvex representation: consistency with e, midpoint
/// convexity in (xi, N), and the growth inequality.
ProbeReport polyconvex_probe(const ManifoldSpec& spec, const EnergyModel& m, int dim, const VecD& origin,
                             const VecD& extents, long samples, std::uint64_t seed);

} // namespace cbody
