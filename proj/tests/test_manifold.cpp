#include "support.hpp"

using namespace cbody;
using namespace cbody::testing;

namespace {

const ManifoldSpec kSpecs[] = {ManifoldSpec::sphere(So3Action::VectorAction),
                               ManifoldSpec::sphere(So3Action::TrivialAction), ManifoldSpec::euclidean(4)};

VecN random_point(const ManifoldSpec& spec, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    VecN p(spec.embedding_dim);
    for (int i = 0; i < p.size(); ++i) p[i] = g(rng);
    return project_point(spec, p).coords;
}

VecN random_vec(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    VecN p(n);
    for (int i = 0; i < n; ++i) p[i] = g(rng);
    return p;
}

} // namespace

TEST_CASE("manifold keys parse and print") {
    CHECK(ManifoldSpec::parse("s2-vector").vector_action());
    CHECK(ManifoldSpec::parse("s2-trivial").is_sphere());
    CHECK_FALSE(ManifoldSpec::parse("s2-trivial").vector_action());
    const ManifoldSpec rk = ManifoldSpec::parse("rk-trivial:5");
    CHECK(rk.embedding_dim == 5);
    CHECK_FALSE(rk.is_sphere());
    CHECK(rk.key() == "rk-trivial:5");
    CHECK_THROWS(ManifoldSpec::parse("s3-vector"));
    CHECK_THROWS(ManifoldSpec::parse("rk-trivial:0"));
    CHECK_THROWS(ManifoldSpec::parse("rk-trivial:x"));
    CHECK_THROWS(ManifoldSpec::parse("rk-vector:3"));
}

TEST_CASE("project_point examples") {
    const ManifoldSpec s = ManifoldSpec::sphere(So3Action::VectorAction);
    CHECK((project_point(s, vecn({0, 0, 2})).coords - vecn({0, 0, 1})).norm() == 0.0);
    CHECK((project_point(s, vecn({1, 0, 0})).coords - vecn({1, 0, 0})).norm() == 0.0);
    CHECK_THROWS_AS(project_point(s, vecn({0, 0, 0})), DegenerateRetraction);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const VecN p = random_vec(3, rng);
        const VecN q = project_point(s, p).coords;
        CHECK(std::abs(q.norm() - 1.0) <= 1e-12);
        CHECK((q - p / p.norm()).norm() <= 1e-15);
    }
    const ManifoldSpec r = ManifoldSpec::euclidean(3);
    CHECK((project_point(r, vecn({0, 0, 0})).coords).norm() == 0.0);
}

TEST_CASE("project_tangent examples and idempotence") {
    const ManifoldSpec s = ManifoldSpec::sphere(So3Action::VectorAction);
    const ManifoldPoint nz{vecn({0, 0, 1})};
    CHECK((project_tangent(s, nz, vecn({1, 2, 3})).comps - vecn({1, 2, 0})).norm() == 0.0);
    CHECK(project_tangent(s, nz, nz.coords).comps.norm() == 0.0);
    const ManifoldSpec r = ManifoldSpec::euclidean(4);
    const VecN w = vecn({1, -2, 3, 0.5});
    CHECK((project_tangent(r, ManifoldPoint{vecn({1, 1, 1, 1})}, w).comps - w).norm() == 0.0);

    std::mt19937_64 rng(3);
    for (const auto& spec : kSpecs) {
        for (int i = 0; i < 50; ++i) {
            const ManifoldPoint nu{random_point(spec, rng)};
            const VecN once = project_tangent(spec, nu, random_vec(spec.embedding_dim, rng)).comps;
            const VecN twice = project_tangent(spec, nu, once).comps;
            CHECK((once - twice).norm() <= 1e-15 * (1.0 + once.norm()));
            if (spec.is_sphere()) CHECK(std::abs(once.dot(nu.coords)) <= 1e-12);
        }
    }
}

TEST_CASE("rotation generator and adjoint") {
    const ManifoldSpec v = ManifoldSpec::sphere(So3Action::VectorAction);
    const ManifoldPoint nz{vecn({0, 0, 1})};
    CHECK((rotation_generator(v, nz, Vec3(1, 0, 0)).comps - vecn({0, -1, 0})).norm() == 0.0);
    const TangentCovector mu{nz.coords, vecn({1, 0, 0})};
    const MatND zero = MatND::Zero(3, 3);
    CHECK((rotation_adjoint_bundle(v, nz, mu, zero, zero).astar_mu - Vec3(0, 1, 0)).norm() == 0.0);

    std::mt19937_64 rng(11);
    for (const auto& spec : kSpecs) {
        for (int i = 0; i < 100; ++i) {
            const ManifoldPoint nu{random_point(spec, rng)};
            const Vec3 q = random_vec(3, rng).head<3>();
            const TangentCovector a = rotation_generator(spec, nu, q);
            if (!spec.vector_action()) {
                CHECK(a.comps.norm() == 0.0);
            } else {
                CHECK(std::abs(a.comps.dot(nu.coords)) <= 1e-12);
                // linear in q
                const TangentCovector a2 = rotation_generator(spec, nu, 2.5 * q);
                CHECK((a2.comps - 2.5 * a.comps).norm() <= 1e-14);
            }
            const TangentCovector m{nu.coords, project_tangent(spec, nu, random_vec(spec.embedding_dim, rng)).comps};
            const Vec3 astar = rotation_adjoint_bundle(spec, nu, m, MatND::Zero(spec.embedding_dim, 3),
                                                       MatND::Zero(spec.embedding_dim, 3))
                                   .astar_mu;
            CHECK(std::abs(m.comps.dot(a.comps) - astar.dot(q)) <= 1e-12);
        }
    }
}

TEST_CASE("adjoint gradient contraction") {
    const ManifoldSpec v = ManifoldSpec::sphere(So3Action::VectorAction);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    const ManifoldPoint nz{vecn({0, 0, 1})};
    MatND S(3, 3);
    for (int i = 0; i < 9; ++i) S(i % 3, i / 3) = g(rng);
    CHECK(rotation_adjoint_bundle(v, nz, TangentCovector{nz.coords, VecN::Zero(3)}, S, MatND::Zero(3, 3))
              .dastar_S.norm() == 0.0);
    CHECK_THROWS_AS(rotation_adjoint_bundle(v, nz, TangentCovector{nz.coords, VecN::Zero(3)}, S, MatND::Zero(3, 2)),
                    DimensionMismatch);

    // finite differences of x -> A*(nu(x)) S(x) along a smooth field, fixed S
    for (int trial = 0; trial < 20; ++trial) {
        Mat3 A;
        for (int i = 0; i < 9; ++i) A(i % 3, i / 3) = g(rng);
        const Vec3 n0 = Vec3(g(rng), g(rng), g(rng)).normalized();
        auto nu_at = [&](const Vec3& x) -> Vec3 { return (n0 + 0.3 * A * x).normalized(); };
        MatND Sf(3, 3);
        for (int i = 0; i < 9; ++i) Sf(i % 3, i / 3) = g(rng);
        const Vec3 x0 = Vec3::Zero();
        const double h = 1e-6;
        MatND grad(3, 3);
        Vec3 fd = Vec3::Zero();
        for (int k = 0; k < 3; ++k) {
            const Vec3 e = Vec3::Unit(k);
            const Vec3 dp = nu_at(x0 + h * e), dm = nu_at(x0 - h * e);
            grad.col(k) = (dp - dm) / (2 * h);
            fd += (dp.cross(Vec3(Sf.col(k))) - dm.cross(Vec3(Sf.col(k)))) / (2 * h);
        }
        const VecN nu0 = nu_at(x0);
        const Vec3 closed = rotation_adjoint_bundle(v, ManifoldPoint{nu0}, TangentCovector{nu0, VecN::Zero(3)}, Sf, grad)
                                .dastar_S;
        CHECK((closed - fd).norm() <= 1e-6 * (1.0 + fd.norm()));
    }
    const ManifoldSpec t = ManifoldSpec::sphere(So3Action::TrivialAction);
    CHECK(rotation_adjoint_bundle(t, nz, TangentCovector{nz.coords, VecN::Zero(3)}, S, S).dastar_S.norm() == 0.0);
}

TEST_CASE("retraction is second-order on tangent steps") {
    const ManifoldSpec s = ManifoldSpec::sphere(So3Action::VectorAction);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 10; ++i) {
        const ManifoldPoint nu{random_point(s, rng)};
        const VecN v = project_tangent(s, nu, random_vec(3, rng)).comps;
        double err[3];
        const double ts[3] = {1e-2, 1e-3, 1e-4};
        for (int k = 0; k < 3; ++k) {
            const VecN p = nu.coords + ts[k] * v;
            err[k] = (project_point(s, p).coords - p).norm();
        }
        CHECK(std::log10(err[0] / err[1]) >= 1.9);
        CHECK(std::log10(err[1] / err[2]) >= 1.9);
    }
}

TEST_CASE("kernel of the adjoint has the expected rank") {
    std::mt19937_64 rng(13);
    for (const auto& spec : kSpecs) {
        const VecN nu = random_point(spec, rng);
        const MatNN basis = tangent_basis(spec, nu);
        Eigen::MatrixXd Astar(3, basis.cols());
        for (int j = 0; j < basis.cols(); ++j) Astar.col(j) = adjoint_action(spec, nu, basis.col(j));
        const long rank = Eigen::FullPivLU<Eigen::MatrixXd>(Astar).setThreshold(1e-12).rank();
        const long kernel = basis.cols() - rank;
        if (spec.vector_action()) {
            CHECK(kernel == 0);
        } else {
            CHECK(kernel == spec.tangent_dim());
        }
    }
}
