#include "cbody/energy.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace cbody {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

VecD coupling_vector(const VecN& nu, int d) {
    VecD v = VecD::Zero(d);
    const int k = std::min<int>(d, static_cast<int>(nu.size()));
    for (int i = 0; i < k; ++i) v[i] = nu[i];
    return v;
}

// Shared evaluation of the bracket from the blocks of a minors vector.
double bracket_from_blocks(const EnergyModel& m, const MatD& F, const MatD& C, double J, const VecN& nu,
                           const MatND& grad) {
    const int d = static_cast<int>(F.rows());
    const double dd = d;
    const double lnJ = std::log(J);
    const double a = (dd - 1.0) * m.r / dd;
    const double dr = std::pow(dd, 0.5 * m.r);
    double e = 0.0;
    e += 0.5 * m.mu * (F.squaredNorm() - dd - 2.0 * lnJ);
    e += m.delta * (std::pow(C.norm(), m.r) - dr - a * dr * lnJ);
    e += m.delta * (std::pow(J, m.r) - 1.0 - m.r * lnJ);
    e += m.kappa / m.s * std::pow(grad.norm(), m.s);
    const VecD Ftnu = F.transpose() * coupling_vector(nu, d);
    e += 0.5 * m.alpha * Ftnu.squaredNorm();
    e += m.c4 * (J - lnJ - 1.0);
    return e;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace

double WeightFunction::operator()(const VecD& x) const {
    if (kind == Kind::Constant) return value;
    return value + gradient.dot(x);
}

VecD WeightFunction::derivative(int dim) const {
    if (kind == Kind::Constant) return VecD::Zero(dim);
    return gradient;
}

std::pair<double, double> WeightFunction::bounds(const VecD& origin, const VecD& extents) const {
    if (kind == Kind::Constant) return {value, value};
    double lo = value + gradient.dot(origin);
    double hi = lo;
    for (int a = 0; a < gradient.size(); ++a) {
        const double change = gradient[a] * extents[a];
        if (change < 0) lo += change;
        else hi += change;
    }
    return {lo, hi};
}

EnergyModel EnergyModel::zero_loads(int dim, int n) {
    EnergyModel m;
    m.body_force = VecD::Zero(dim);
    m.substructural_field = VecN::Zero(n);
    m.weight.gradient = VecD::Zero(dim);
    return m;
}

void EnergyModel::validate(int dim, int n, const VecD& origin, const VecD& extents) const {
    if (!(r > 1.0) || !(s > 1.0)) throw ConfigError("energy exponents r and s must exceed 1");
    for (double c : {mu, delta, c4, kappa, alpha, r, s, weight.value}) {
        if (!std::isfinite(c)) throw ConfigError("energy coefficients must be finite");
    }
    if (body_force.size() != dim) throw ConfigError("energy.body_force must have " + std::to_string(dim) + " entries");
    if (substructural_field.size() != n) {
        throw ConfigError("energy.substructural_field must have " + std::to_string(n) + " entries");
    }
    if (!body_force.allFinite() || !substructural_field.allFinite()) throw ConfigError("loads must be finite");
    if (weight.kind == WeightFunction::Kind::LinearRamp && weight.gradient.size() != dim) {
        throw ConfigError("energy.weight.gradient must have " + std::to_string(dim) + " entries");
    }
    if (!(weight.bounds(origin, extents).first > 0.0)) {
        throw ConfigError("energy weight w(x) must be positive on the whole body");
    }
}

double internal_bracket(const EnergyModel& m, const MatD& F, const VecN& nu, const MatND& grad) {
    return bracket_from_blocks(m, F, cofactor(F), det(F), nu, grad);
}

double internal_density(const EnergyModel& m, const JetSample& jet) {
    const double J = det(jet.F);
    if (!(J > 0.0)) throw OrientationError("det F = " + std::to_string(J) + " <= 0");
    return m.weight(jet.x) * bracket_from_blocks(m, jet.F, cofactor(jet.F), J, jet.nu, jet.grad);
}

double external_density(const EnergyModel& m, const JetSample& jet) {
    return -m.body_force.dot(jet.u) - m.substructural_field.dot(jet.nu);
}

double density_eval(const EnergyModel& m, const JetSample& jet) {
    return internal_density(m, jet) + external_density(m, jet);
}

double polyconvex_density(const EnergyModel& m, const VecD& x, const VecD& u, const VecN& nu, const MinorsVector& xi,
                          const MatND& grad) {
    if (!(xi.det > 0.0)) return std::numeric_limits<double>::infinity();
    // In d = 2 the cofactor is a linear function of the F block.
    const MatD C = xi.F.rows() == 3 ? xi.cof : cofactor(xi.F);
    return m.weight(x) * bracket_from_blocks(m, xi.F, C, xi.det, nu, grad) - m.body_force.dot(u) -
           m.substructural_field.dot(nu);
}

double barrier(const EnergyModel& m, double t) { return m.c4 * (t - std::log(t) - 1.0); }

double cell_energy(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid, const DeformationField& u,
                   const MorphField& nu, long cell) {
    const int nq = grid.quadrature_points_per_cell();
    const double wq = grid.cell_volume() / nq;
    double e = 0.0;
    for (int q = 0; q < nq; ++q) {
        const JetSample jet = compute_jet(spec, grid, u, nu, cell, q);
        const double J = det(jet.F);
        if (!(J > 0.0)) {
            throw OrientationError("det F = " + std::to_string(J) + " <= 0 in cell " + std::to_string(cell), cell);
        }
        e += wq * density_eval(m, jet);
    }
    return e;
}

double part_energy(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid,
                   const DeformationField& u, const MorphField& nu, const Part& part) {
    check_field_shapes(spec, grid, u, nu);
    const long cells = grid.cell_count();
    std::vector<double> per_cell(cells, 0.0);
    std::vector<long> bad(cells, -1);
#pragma omp parallel for schedule(static)
    for (long c = 0; c < cells; ++c) {
        if (!part.contains(c)) continue;
        try {
            per_cell[c] = cell_energy(spec, m, grid, u, nu, c);
        } catch (const OrientationError&) {
            bad[c] = c;
        }
    }
    double e = 0.0;
    for (long c = 0; c < cells; ++c) {
        if (bad[c] >= 0) {
            throw OrientationError("det F <= 0 in cell " + std::to_string(c), c);
        }
        e += per_cell[c];
    }
    return e;
}

double total_energy(const ManifoldSpec& spec, const EnergyModel& m, const ReferenceGrid& grid,
                    const DeformationField& u, const MorphField& nu) {
    return part_energy(spec, m, grid, u, nu, Part::whole(grid));
}

GrowthConstants growth_constants(const EnergyModel& m, int dim, const VecD& origin, const VecD& extents) {
    GrowthConstants g;
    const auto [wmin, wmax] = m.weight.bounds(origin, extents);
    g.w_min = wmin;
    g.w_max = wmax;
    const double dd = dim;
    // |F|^2 >= |F|^r - 1 only holds for r <= 2.
    const double fcoef = m.r <= 2.0 ? m.mu / 4.0 : 0.0;
    const double block = std::min(fcoef, m.delta / 2.0) / std::pow(3.0, m.r - 1.0);
    const double c1 = std::min(block, m.kappa / m.s);
    g.C1 = wmin * std::max(0.0, c1);
    const double mu = std::max(0.0, m.mu);
    const double delta = std::max(0.0, m.delta);
    g.C0 = wmax * (mu / 4.0 + mu * dd * kLn2 / 2.0 + delta * (std::pow(dd, 0.5 * m.r) + 1.0) * kLn2);
    g.coercive = g.C1 > 0.0 && m.c4 > 0.0;
    return g;
}

namespace {

struct Sampler {
    std::mt19937_64 rng;
    std::normal_distribution<double> normal{0.0, 1.0};
    std::uniform_real_distribution<double> unit{0.0, 1.0};

    explicit Sampler(std::uint64_t seed) : rng(seed) {}

    double log_uniform(double lo, double hi) { return lo * std::pow(hi / lo, unit(rng)); }

    MatD matrix(int d, double scale) {
        MatD A(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) A(i, j) = scale * normal(rng) / std::sqrt(double(d));
        return A;
    }

    MatD orientation_preserving(int d) {
        for (;;) {
            const double scale = log_uniform(0.1, 10.0);
            MatD F = matrix(d, scale);
            if (det(F) < 0) F.col(0) *= -1.0;
            if (det(F) > 1e-6 * std::pow(scale, d)) return F;
        }
    }

    VecN descriptor(const ManifoldSpec& spec) {
        VecN v(spec.embedding_dim);
        for (int i = 0; i < v.size(); ++i) v[i] = normal(rng);
        if (spec.is_sphere()) {
            const double n = v.norm();
            return n > 1e-12 ? VecN(v / n) : descriptor(spec);
        }
        return 2.0 * v;
    }

    MatND gradient(const ManifoldSpec& spec, const VecN& nu, int d) {
        const double scale = log_uniform(1e-2, 1e2);
        MatND G(spec.embedding_dim, d);
        for (int i = 0; i < G.rows(); ++i)
            for (int j = 0; j < d; ++j) G(i, j) = scale * normal(rng) / std::sqrt(double(G.rows() * d));
        return tangent_part_columns(spec, nu, G);
    }

    MinorsVector free_minors(int d) {
        MinorsVector xi;
        const double scale = log_uniform(0.1, 10.0);
        xi.F = matrix(d, scale);
        if (d == 3) xi.cof = matrix(d, scale * scale);
        xi.det = log_uniform(1e-3, 1e3);
        return xi;
    }
};

std::vector<double> flatten(const MatD& m) { return {m.data(), m.data() + m.size()}; }
std::vector<double> flatten(const MatND& m) { return {m.data(), m.data() + m.size()}; }
std::vector<double> flatten(const VecN& v) { return {v.data(), v.data() + v.size()}; }

MinorsVector midpoint(const MinorsVector& a, const MinorsVector& b) {
    MinorsVector m;
    m.F = 0.5 * (a.F + b.F);
    if (a.cof.size() > 0) m.cof = 0.5 * (a.cof + b.cof);
    m.det = 0.5 * (a.det + b.det);
    return m;
}

} // namespace

ProbeReport polyconvex_probe(const ManifoldSpec& spec, const EnergyModel& m, int dim, const VecD& origin,
                             const VecD& extents, long samples, std::uint64_t seed) {
    if (samples < 1) throw Error("probe needs at least one sample");
    ProbeReport rep;
    rep.samples = samples;
    rep.growth = growth_constants(m, dim, origin, extents);
    constexpr std::size_t kMaxWitnesses = 5;
    std::size_t kept[3] = {0, 0, 0};

    auto keep = [&](int slot, ProbeWitness w) {
        if (kept[slot] < kMaxWitnesses) {
            rep.witnesses.push_back(std::move(w));
            ++kept[slot];
        }
    };

    for (long i = 0; i < samples; ++i) {
        Sampler rs(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i))));
        JetSample jet;
        jet.x.resize(dim);
        for (int a = 0; a < dim; ++a) jet.x[a] = origin[a] + extents[a] * rs.unit(rs.rng);
        jet.u.resize(dim);
        for (int a = 0; a < dim; ++a) jet.u[a] = 2.0 * rs.normal(rs.rng);
        jet.nu = rs.descriptor(spec);
        jet.F = rs.orientation_preserving(dim);
        jet.grad = rs.gradient(spec, jet.nu, dim);
        jet.grad_normal = VecD::Zero(dim);

        // (a) Pe(M(F)) == e
        const double e = density_eval(m, jet);
        const double pe = polyconvex_density(m, jet.x, jet.u, jet.nu, minors(jet.F), jet.grad);
        const double cerr = std::abs(pe - e) / std::max(1.0, std::abs(e));
        rep.max_consistency_error = std::max(rep.max_consistency_error, cerr);
        if (!(cerr <= 1e-12)) {
            ++rep.consistency_violations;
            keep(0, {"consistency", i, pe, e, flatten(jet.F), flatten(jet.grad), flatten(jet.nu)});
        }

        // (b) midpoint convexity along a segment in (xi, N): joint, xi-only or N-only.
        MinorsVector xa = rs.free_minors(dim), xb = rs.free_minors(dim);
        MatND ga = rs.gradient(spec, jet.nu, dim), gb = rs.gradient(spec, jet.nu, dim);
        const int mode = static_cast<int>(i % 3);
        if (mode == 1) gb = ga;
        if (mode == 2) xb = xa;
        const double fa = polyconvex_density(m, jet.x, jet.u, jet.nu, xa, ga);
        const double fb = polyconvex_density(m, jet.x, jet.u, jet.nu, xb, gb);
        const double fm = polyconvex_density(m, jet.x, jet.u, jet.nu, midpoint(xa, xb), 0.5 * (ga + gb));
        const double avg = 0.5 * (fa + fb);
        if (!(fm <= avg + 1e-10 * (1.0 + std::abs(fa) + std::abs(fb)))) {
            ++rep.convexity_violations;
            keep(1, {"convexity", i, fm, avg, flatten(midpoint(xa, xb).F), flatten(MatND(0.5 * (ga + gb))),
                     flatten(jet.nu)});
        }

        // (c) growth: e_int >= C1 (|M(F)|^r + |N|^s) - C0 + w_min theta(det F)
        const double lhs = internal_density(m, jet);
        const double J = det(jet.F);
        const double rhs = rep.growth.C1 * (std::pow(minors(jet.F).norm(), m.r) + std::pow(jet.grad.norm(), m.s)) -
                           rep.growth.C0 + rep.growth.w_min * barrier(m, J);
        if (!(lhs >= rhs - 1e-10 * (1.0 + std::abs(lhs) + std::abs(rhs)))) {
            ++rep.growth_violations;
            keep(2, {"growth", i, lhs, rhs, flatten(jet.F), flatten(jet.grad), flatten(jet.nu)});
        }
    }
    return rep;
}

} // namespace cbody
