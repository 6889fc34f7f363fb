#pragma once

#include "cbody/balances.hpp"
#include "cbody/solver.hpp"

#include <doctest.h>

#include <random>

namespace cbody::testing {

inline VecD vec(std::initializer_list<double> v) {
    VecD out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

inline VecN vecn(std::initializer_list<double> v) {
    VecN out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

inline std::array<FaceCondition, 6> all_faces(bool u, bool nu) {
    std::array<FaceCondition, 6> f;
    for (auto& c : f) c = {u, nu};
    return f;
}

inline ReferenceGrid unit_grid(int dim, int n, std::array<FaceCondition, 6> faces = {}) {
    return ReferenceGrid(dim, {n, n, dim == 3 ? n : 1}, VecD::Zero(dim), VecD::Ones(dim), faces);
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
    return q.normalized().toRotationMatrix();
}

/// Coupled model used across the tests: every coefficient active.
inline EnergyModel coupled_model(int dim, int n) {
    EnergyModel m = EnergyModel::zero_loads(dim, n);
    m.mu = 1.0;
    m.delta = 0.3;
    m.c4 = 1.0;
    m.kappa = 0.2;
    m.alpha = 0.5;
    return m;
}

inline double max_abs_diff(const MatND& a, const MatND& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace cbody::testing
