#include "cbody/actions.hpp"

#include <cmath>
#include <random>

namespace cbody {

namespace {

VecN coupling_gradient(const MatD& F, const VecN& nu, double alpha) {
    // d/dnu of alpha/2 |F^T nu_d|^2, nu_d the first min(d, N) entries of nu
    const int d = static_cast<int>(F.rows());
    const int k = std::min<int>(d, static_cast<int>(nu.size()));
    VecD nd = VecD::Zero(d);
    for (int i = 0; i < k; ++i) nd[i] = nu[i];
    const VecD g = alpha * (F * (F.transpose() * nd));
    VecN out = VecN::Zero(nu.size());
    for (int i = 0; i < k; ++i) out[i] = g[i];
    return out;
}

MatD coupling_stress(const MatD& F, const VecN& nu, double alpha) {
    const int d = static_cast<int>(F.rows());
    const int k = std::min<int>(d, static_cast<int>(nu.size()));
    VecD nd = VecD::Zero(d);
    for (int i = 0; i < k; ++i) nd[i] = nu[i];
    return alpha * nd * (nd.transpose() * F);
}

} // namespace

ActionState compute_actions(const ManifoldSpec& spec, const EnergyModel& m, const JetSample& jet) {
    const int d = static_cast<int>(jet.F.rows());
    const double J = det(jet.F);
    if (!(J > 0.0)) throw OrientationError("det F = " + std::to_string(J) + " <= 0");
    const double dd = d;
    const double w = m.weight(jet.x);
    const MatD C = cofactor(jet.F);
    const MatD Finv_t = C / J;
    const double cn = C.norm();
    const double a = (dd - 1.0) * m.r / dd;
    const double dr = std::pow(dd, 0.5 * m.r);
    const double Jr = std::pow(J, m.r);

    MatD P = m.mu * (jet.F - Finv_t);
    const MatD I = MatD::Identity(d, d);
    P += m.delta * (m.r * std::pow(cn, m.r - 2.0) * ((cn * cn) * I - C * C.transpose()) * Finv_t - a * dr * Finv_t);
    P += m.delta * m.r * (Jr - 1.0) * Finv_t;
    P += coupling_stress(jet.F, jet.nu, m.alpha);
    P += m.c4 * (J - 1.0) * Finv_t;
    P *= w;

    ActionState st;
    st.P = P;
    const double gn = jet.grad.norm();
    if (gn > 0.0) {
        st.S = (w * m.kappa * std::pow(gn, m.s - 2.0)) * jet.grad;
        st.S = tangent_part_columns(spec, jet.nu, st.S);
    } else {
        st.S = MatND::Zero(jet.grad.rows(), jet.grad.cols());
    }
    const VecN dnu_int = w * coupling_gradient(jet.F, jet.nu, m.alpha);
    st.z = tangent_part(spec, jet.nu, dnu_int);
    if (spec.is_sphere()) st.z -= st.S * jet.grad_normal;
    st.beta = tangent_part(spec, jet.nu, m.substructural_field);
    st.b = m.body_force;

    const double bracket = internal_bracket(m, jet.F, jet.nu, jet.grad);
    st.energy = w * bracket + external_density(m, jet);
    st.dx_energy = m.weight.derivative(d) * bracket;
    st.eshelby = st.energy * I - jet.F.transpose() * st.P - jet.grad.transpose() * st.S;
    return st;
}

ActionState fd_oracle(const ManifoldSpec& spec, const EnergyModel& m, const JetSample& jet, double step) {
    if (!(step > 0.0)) throw Error("finite-difference step must be positive");
    const int d = static_cast<int>(jet.F.rows());
    const int n = static_cast<int>(jet.nu.size());
    const double h2 = 2.0 * step;

    auto total = [&](const JetSample& j) {
        try {
            return density_eval(m, j);
        } catch (const OrientationError&) {
            throw OrientationError("finite-difference step " + std::to_string(step) +
                                   " pushes det F to a non-positive value");
        }
    };

    ActionState st;
    st.b = VecD::Zero(d);
    for (int i = 0; i < d; ++i) {
        JetSample p = jet, q = jet;
        p.u[i] += step;
        q.u[i] -= step;
        st.b[i] = -(total(p) - total(q)) / h2;
    }

    st.P = MatD::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        for (int k = 0; k < d; ++k) {
            JetSample p = jet, q = jet;
            p.F(i, k) += step;
            q.F(i, k) -= step;
            st.P(i, k) = (total(p) - total(q)) / h2;
        }
    }

    st.S = MatND::Zero(n, d);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) {
            JetSample p = jet, q = jet;
            p.grad(i, k) += step;
            q.grad(i, k) -= step;
            st.S(i, k) = (total(p) - total(q)) / h2;
        }
    }
    st.S = tangent_part_columns(spec, jet.nu, st.S);

    // Descriptor: move along each tangent direction with retraction and
    // re-project the (fixed) ambient gradient at the moved point.
    const MatND G = jet.ambient_grad();
    auto moved = [&](const VecN& dir, double t) {
        JetSample j = jet;
        j.nu = retract(spec, jet.nu, t * dir);
        if (spec.is_sphere()) {
            j.grad_normal = G.transpose() * j.nu;
            j.grad = G - j.nu * j.grad_normal.transpose();
        }
        return j;
    };
    const MatNN basis = tangent_basis(spec, jet.nu);
    st.z = VecN::Zero(n);
    st.beta = VecN::Zero(n);
    for (int c = 0; c < basis.cols(); ++c) {
        const VecN dir = basis.col(c);
        const JetSample p = moved(dir, step), q = moved(dir, -step);
        const double dint = (internal_density(m, p) - internal_density(m, q)) / h2;
        const double dext = (external_density(m, p) - external_density(m, q)) / h2;
        st.z += dint * dir;
        st.beta -= dext * dir;
    }

    st.dx_energy = VecD::Zero(d);
    for (int i = 0; i < d; ++i) {
        JetSample p = jet, q = jet;
        p.x[i] += step;
        q.x[i] -= step;
        st.dx_energy[i] = (total(p) - total(q)) / h2;
    }

    st.energy = total(jet);
    st.eshelby = st.energy * MatD::Identity(d, d) - jet.F.transpose() * st.P - jet.grad.transpose() * st.S;
    return st;
}

JetSample random_jet(const ManifoldSpec& spec, int dim, const VecD& origin, const VecD& extents,
                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = spec.embedding_dim;
    JetSample jet;
    jet.x.resize(dim);
    jet.u.resize(dim);
    for (int a = 0; a < dim; ++a) {
        jet.x[a] = origin[a] + extents[a] * unit(rng);
        jet.u[a] = normal(rng);
    }
    do {
        jet.F = MatD::Identity(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) jet.F(i, j) += 0.3 * normal(rng);
    } while (det(jet.F) < 0.2);
    VecN v(n);
    do {
        for (int i = 0; i < n; ++i) v[i] = normal(rng);
    } while (v.norm() < 1e-3);
    jet.nu = spec.is_sphere() ? VecN(v / v.norm()) : v;
    MatND G(n, dim);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < dim; ++j) G(i, j) = 0.7 * normal(rng);
    jet.grad = tangent_part_columns(spec, jet.nu, G);
    jet.grad_normal = VecD::Zero(dim);
    if (spec.is_sphere()) {
        for (int j = 0; j < dim; ++j) jet.grad_normal[j] = 0.3 * normal(rng);
    }
    return jet;
}

SelfActionSplit decompose_self_action(const ManifoldSpec& spec, const VecN& nu, const VecN& z) {
    const MatNN T = tangent_basis(spec, nu);
    const int m = static_cast<int>(T.cols());
    // Matrix of A*(nu) on the tangent basis.
    Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, kMaxManifoldDim> A(3, m);
    for (int c = 0; c < m; ++c) A.col(c) = adjoint_action(spec, nu, T.col(c));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(A), Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double scale = sv.size() > 0 ? std::max(1.0, sv[0]) : 1.0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) rank += sv[i] > 1e-12 * scale;
    const Eigen::MatrixXd V = svd.matrixV();

    SelfActionSplit out;
    out.z2 = VecN::Zero(z.size());
    const VecN zt = tangent_part(spec, nu, z);
    for (int c = rank; c < m; ++c) {
        const VecN k = T * V.col(c);
        out.z2 += k * k.dot(zt);
    }
    out.z1 = z - out.z2;
    return out;
}

MatD eshelby_tensor(const ManifoldSpec& spec, const EnergyModel& m, const JetSample& jet) {
    return compute_actions(spec, m, jet).eshelby;
}

double max_relative_deviation(const ActionState& a, const ActionState& b) {
    auto dev = [](const auto& x, const auto& y) {
        const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
        return (x - y).cwiseAbs().maxCoeff() / scale;
    };
    double worst = 0.0;
    worst = std::max(worst, dev(a.P, b.P));
    worst = std::max(worst, dev(a.S, b.S));
    worst = std::max(worst, dev(a.z, b.z));
    worst = std::max(worst, dev(a.beta, b.beta));
    worst = std::max(worst, dev(a.b, b.b));
    worst = std::max(worst, dev(a.eshelby, b.eshelby));
    return worst;
}

} // namespace cbody
