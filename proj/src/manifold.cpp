#include "cbody/manifold.hpp"

#include <charconv>
#include <cmath>

namespace cbody {

namespace {

Vec3 as3(const VecN& v) { return Vec3(v[0], v[1], v[2]); }

VecN fromVec3(const Vec3& v) {
    VecN out(3);
    out << v[0], v[1], v[2];
    return out;
}

} // namespace

ManifoldSpec ManifoldSpec::sphere(So3Action action) {
    return ManifoldSpec{ManifoldKind::SphereS2, 3, action};
}

ManifoldSpec ManifoldSpec::euclidean(int k) {
    if (k < 1 || k > kMaxManifoldDim) {
        throw ConfigError("euclidean descriptor dimension must lie in [1, " +
                          std::to_string(kMaxManifoldDim) + "], got " + std::to_string(k));
    }
    return ManifoldSpec{ManifoldKind::EuclideanRk, k, So3Action::TrivialAction};
}

ManifoldSpec ManifoldSpec::parse(std::string_view key) {
    if (key == "s2-vector") return sphere(So3Action::VectorAction);
    if (key == "s2-trivial") return sphere(So3Action::TrivialAction);
    constexpr std::string_view prefix = "rk-trivial:";
    if (key.substr(0, prefix.size()) == prefix) {
        auto digits = key.substr(prefix.size());
        int k = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
        if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
            throw ConfigError("bad manifold key '" + std::string(key) + "'");
        }
        return euclidean(k);
    }
    throw ConfigError("unknown manifold key '" + std::string(key) +
                      "' (expected s2-vector, s2-trivial or rk-trivial:<k>)");
}

std::string ManifoldSpec::key() const {
    if (is_sphere()) return vector_action() ? "s2-vector" : "s2-trivial";
    return "rk-trivial:" + std::to_string(embedding_dim);
}

bool on_manifold(const ManifoldSpec& spec, const VecN& p, double tol) {
    if (p.size() != spec.embedding_dim || !p.allFinite()) return false;
    if (spec.is_sphere()) return std::abs(p.norm() - 1.0) <= tol;
    return true;
}

ManifoldPoint project_point(const ManifoldSpec& spec, const VecN& p) {
    if (p.size() != spec.embedding_dim) {
        throw DimensionMismatch("point has " + std::to_string(p.size()) + " coordinates, manifold embeds in R^" +
                                std::to_string(spec.embedding_dim));
    }
    if (!spec.is_sphere()) return {p};
    const double n = p.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw DegenerateRetraction("cannot retract the zero vector onto S2");
    }
    return {p / n};
}

VecN tangent_part(const ManifoldSpec& spec, const VecN& nu, const VecN& w) {
    if (!spec.is_sphere()) return w;
    return w - nu * nu.dot(w);
}

MatND tangent_part_columns(const ManifoldSpec& spec, const VecN& nu, const MatND& m) {
    if (!spec.is_sphere()) return m;
    MatND out = m;
    out -= nu * (nu.transpose() * m);
    return out;
}

TangentCovector project_tangent(const ManifoldSpec& spec, const ManifoldPoint& nu, const VecN& w) {
    if (w.size() != spec.embedding_dim) throw DimensionMismatch("tangent vector has the wrong length");
    return {nu.coords, tangent_part(spec, nu.coords, w)};
}

VecN retract(const ManifoldSpec& spec, const VecN& nu, const VecN& step) {
    return project_point(spec, nu + step).coords;
}

VecN generator_action(const ManifoldSpec& spec, const VecN& nu, const Vec3& q) {
    if (!spec.vector_action()) return VecN::Zero(spec.embedding_dim);
    return fromVec3(q.cross(as3(nu)));
}

TangentCovector rotation_generator(const ManifoldSpec& spec, const ManifoldPoint& nu, const Vec3& q) {
    return {nu.coords, generator_action(spec, nu.coords, q)};
}

Vec3 adjoint_action(const ManifoldSpec& spec, const VecN& nu, const VecN& mu) {
    // <mu, q x nu> = q . (nu x mu)
    if (!spec.vector_action()) return Vec3::Zero();
    return as3(nu).cross(as3(mu));
}

Vec3 adjoint_gradient_contraction(const ManifoldSpec& spec, const MatND& S, const MatND& grad) {
    if (S.rows() != grad.rows() || S.cols() != grad.cols()) {
        throw DimensionMismatch("microstress and descriptor gradient have different shapes");
    }
    if (!spec.vector_action()) return Vec3::Zero();
    Vec3 out = Vec3::Zero();
    for (int k = 0; k < S.cols(); ++k) {
        out += Vec3(grad(0, k), grad(1, k), grad(2, k)).cross(Vec3(S(0, k), S(1, k), S(2, k)));
    }
    return out;
}

AdjointBundle rotation_adjoint_bundle(const ManifoldSpec& spec, const ManifoldPoint& nu,
                                      const TangentCovector& mu, const MatND& S, const MatND& grad) {
    return {adjoint_action(spec, nu.coords, mu.comps), adjoint_gradient_contraction(spec, S, grad)};
}

MatNN tangent_basis(const ManifoldSpec& spec, const VecN& nu) {
    const int n = spec.embedding_dim;
    if (!spec.is_sphere()) return MatNN::Identity(n, n);
    // Gram-Schmidt against the coordinate axis least aligned with nu.
    const Vec3 v = as3(nu);
    Eigen::Index axis = 0;
    v.cwiseAbs().minCoeff(&axis);
    Vec3 e = Vec3::Zero();
    e[axis] = 1.0;
    Vec3 t1 = (e - v * v.dot(e)).normalized();
    Vec3 t2 = v.cross(t1);
    MatNN basis(3, 2);
    basis.col(0) = fromVec3(t1);
    basis.col(1) = fromVec3(t2);
    return basis;
}

} // namespace cbody
