#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "obstacle_ldp/operators.hpp"

using namespace obstacle_ldp;

namespace {

Field random_field(const Mesh& mesh, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Field f(mesh.size());
    for (int i = 0; i < mesh.size(); ++i) f(i) = u(rng);
    return f;
}

// Flux-difference form written out node by node.
Field loop_p_laplace(const Field& u, double p, double h) {
    const int n = static_cast<int>(u.size());
    auto flux = [&](int j) {
        const double left = j == 0 ? 0.0 : u(j - 1);
        const double right = j == n ? 0.0 : u(j);
        const double g = (right - left) / h;
        return std::pow(std::abs(g), p - 2.0) * g;
    };
    Field out(n);
    for (int i = 0; i < n; ++i) out(i) = -(flux(i + 1) - flux(i)) / h;
    return out;
}

}  // namespace

TEST_CASE("p-Laplacian matches a node-by-node flux loop") {
    const Mesh mesh(24);
    std::mt19937_64 rng(1);
    for (double p : {2.0, 3.0, 4.0}) {
        const auto spec = OperatorSpec::p_laplace(p);
        for (int trial = 0; trial < 5; ++trial) {
            const Field u = random_field(mesh, rng);
            const Field ref = loop_p_laplace(u, p, mesh.h());
            CHECK((apply_operator(spec, u, mesh) - ref).cwiseAbs().maxCoeff() <=
                  1e-12 * (1.0 + ref.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("p = 2 reduces to the three-point stiffness matrix") {
    const Mesh mesh(10);
    const auto spec = OperatorSpec::p_laplace(2.0);
    std::mt19937_64 rng(2);
    const Field u = random_field(mesh, rng);
    const Field au = apply_operator(spec, u, mesh);
    const double h2 = mesh.h() * mesh.h();
    for (int i = 0; i < mesh.size(); ++i) {
        const double left = i == 0 ? 0.0 : u(i - 1);
        const double right = i == mesh.size() - 1 ? 0.0 : u(i + 1);
        CHECK(au(i) == doctest::Approx((2.0 * u(i) - left - right) / h2).epsilon(1e-12));
    }
}

TEST_CASE("potential identity <Au, u>_h = |u|_V^p") {
    const Mesh mesh(16);
    std::mt19937_64 rng(4);
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
        const auto spec = OperatorSpec::p_laplace(p);
        const Field u = random_field(mesh, rng);
        const double lhs = inner_h(apply_operator(spec, u, mesh), u, mesh);
        CHECK(lhs == doctest::Approx(std::pow(norm_v(u, p, mesh), p)).epsilon(p < 2 ? 1e-6 : 1e-12));
    }
}

TEST_CASE("analytic Jacobian agrees with finite differences") {
    const Mesh mesh(12);
    std::mt19937_64 rng(7);
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
        const auto spec = OperatorSpec::p_laplace(p);
        const Field u = random_field(mesh, rng);
        const Tridiagonal jac = p_laplace_jacobian(spec, u, mesh);
        const Eigen::MatrixXd fd = finite_difference_jacobian(spec, u, mesh);
        const double scale = fd.cwiseAbs().maxCoeff();
        for (int i = 0; i < mesh.size(); ++i) {
            CHECK(std::abs(jac.diag(i) - fd(i, i)) <= 1e-5 * scale);
            if (i + 1 < mesh.size()) {
                CHECK(std::abs(jac.upper(i) - fd(i, i + 1)) <= 1e-5 * scale);
                CHECK(std::abs(jac.lower(i) - fd(i + 1, i)) <= 1e-5 * scale);
            }
            for (int j = 0; j < mesh.size(); ++j) {
                if (std::abs(i - j) > 1) CHECK(fd(i, j) == 0.0);
            }
        }
    }
}

TEST_CASE("structural properties hold for p in {1.5, 2, 3, 4}") {
    const Mesh mesh(32);
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
        CAPTURE(p);
        const auto spec = OperatorSpec::p_laplace(p);
        CHECK(check_potential_identity(spec, mesh, 100, 1).passed());
        CHECK(check_t_monotonicity(spec, mesh, 100, 2).passed());
        CHECK(check_monotonicity(spec, mesh, 100, 3).passed());
        CHECK(check_coercivity(spec, mesh, 100, 4).passed());
        CHECK(check_growth(spec, mesh, 100, 5).passed());
        CHECK(check_hemicontinuity(spec, mesh, 20, 6).passed());
        const auto strong = check_strong_monotonicity(spec, mesh, 100, 7);
        CHECK(strong.passed());
        CHECK(strong.skipped == (p < 2.0));
    }
}

TEST_CASE("checks detect a non-monotone operator") {
    const Mesh mesh(16);
    CertifiedConstants c;
    c.alpha_bar = 1.0;
    // Negative Laplacian sign: anti-monotone and anti-coercive.
    const auto bad = OperatorSpec::custom_operator(2.0, c, [](const Field& u, const Mesh& m) {
        return Field(-apply_operator(OperatorSpec::p_laplace(2.0), u, m));
    });
    const auto mono = check_monotonicity(bad, mesh, 50, 1);
    CHECK_FALSE(mono.passed());
    CHECK(mono.witness_trial.has_value());
    CHECK_FALSE(check_t_monotonicity(bad, mesh, 50, 2).passed());
    CHECK_FALSE(check_coercivity(bad, mesh, 50, 3).passed());
    CHECK_FALSE(check_strong_monotonicity(bad, mesh, 50, 4).passed());
}

TEST_CASE("growth check detects an understated constant") {
    const Mesh mesh(16);
    CertifiedConstants c;
    c.K_bar = 1.0;
    const auto tripled = OperatorSpec::custom_operator(2.0, c, [](const Field& u, const Mesh& m) {
        return Field(3.0 * apply_operator(OperatorSpec::p_laplace(2.0), u, m));
    });
    CHECK_FALSE(check_growth(tripled, mesh, 50, 1).passed());
}

TEST_CASE("randomized checks are reproducible from the seed") {
    const Mesh mesh(16);
    const auto spec = OperatorSpec::p_laplace(3.0);
    const auto a = check_coercivity(spec, mesh, 40, 99);
    const auto b = check_coercivity(spec, mesh, 40, 99);
    CHECK(a.min_margin == b.min_margin);
    CHECK(a.failures == b.failures);
}

TEST_CASE("dual order decomposition of a static obstacle under constant forcing") {
    const Mesh mesh(8);
    const auto spec = OperatorSpec::p_laplace(2.0);
    const int n_steps = 4;
    const double dt = 0.25;
    std::vector<Field> psi(n_steps + 2, Field::Zero(mesh.size()));
    std::vector<Field> f(n_steps + 1, Field::Constant(mesh.size(), -5.0));
    const auto dod = dual_order_decomposition(spec, mesh, psi, f, dt);
    REQUIRE(dod.h.size() == static_cast<std::size_t>(n_steps + 1));
    for (const auto& hm : dod.h_minus) CHECK((hm.array() - 5.0).abs().maxCoeff() == 0.0);
    for (const auto& hp : dod.h_plus) CHECK(hp.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dual order decomposition of a moving obstacle") {
    const Mesh mesh(8);
    const auto spec = OperatorSpec::p_laplace(2.0);
    const double dt = 0.5;
    const Field s = sample(mesh, [](double x) { return std::sin(3.14159265358979 * x); });
    std::vector<Field> psi{0.0 * s, 1.0 * s, 2.0 * s};
    std::vector<Field> f{Field::Zero(mesh.size()), Field::Zero(mesh.size())};
    const auto dod = dual_order_decomposition(spec, mesh, psi, f, dt);
    for (int n = 0; n < 2; ++n) {
        const Field expected = -(psi[n + 1] - psi[n]) / dt - apply_operator(spec, psi[n], mesh);
        CHECK((dod.h[n] - expected).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((dod.h_plus[n] - dod.h_minus[n] - dod.h[n]).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(dod.h_minus[n].minCoeff() >= 0.0);
    }
}
