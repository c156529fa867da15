#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "obstacle_ldp/noise.hpp"

using namespace obstacle_ldp;

TEST_CASE("sine basis is orthonormal under the lumped inner product") {
    const Mesh mesh(32);
    const auto q = QSpec::sine_basis(mesh, 8);
    CHECK(q.orthonormality_defect(mesh) < 1e-12);
    for (int k = 0; k < 8; ++k) {
        const double expected = 6.0 / (std::numbers::pi * std::numbers::pi) / ((k + 1.0) * (k + 1.0));
        CHECK(q.eigenvalues(k) == doctest::Approx(expected).epsilon(1e-14));
        CHECK(q.basis(3, k) ==
              doctest::Approx(std::sqrt(2.0) * std::sin((k + 1) * std::numbers::pi * mesh.x(3))));
    }
    double trace = 0.0;
    for (int k = 0; k < 8; ++k) trace += q.eigenvalues(k);
    CHECK(q.trace == doctest::Approx(trace));
    CHECK_THROWS_AS(QSpec::sine_basis(mesh, 32), ParameterError);
}

TEST_CASE("full trace of the default spectrum tends to one") {
    const Mesh mesh(512);
    const auto q = QSpec::sine_basis(mesh, 500);
    CHECK(q.trace == doctest::Approx(1.0).epsilon(2e-3));
    CHECK(q.trace < 1.0);
}

TEST_CASE("control norm and ball projection") {
    Eigen::MatrixXd a(2, 2);
    a << 1.0, 2.0, 3.0, 4.0;
    const double dt = 0.1;
    const double norm_sq = dt * (1 + 4 + 9 + 16);
    CHECK(h0_norm_sq(Control{a, std::nullopt}, dt) == doctest::Approx(norm_sq));
    const auto inside = Control::in_ball(a, 10.0, dt);
    CHECK(inside.coefficients == a);
    const auto projected = Control::in_ball(a, 1.0, dt);
    CHECK(h0_norm_sq(projected, dt) == doctest::Approx(1.0));
    CHECK(projected.radius.value() == 1.0);
    CHECK(h0_norm_sq(Control::zero(5, 3), dt) == 0.0);
}

TEST_CASE("diffusion vanishes on the obstacle") {
    const Mesh mesh(16);
    const auto q = QSpec::sine_basis(mesh, 4);
    const auto d = DiffusionSpec::nemytskii(2.0, q, 1.0);
    const Field psi = sample(mesh, [](double x) { return x * (1 - x); });
    const Eigen::VectorXd c = Eigen::VectorXd::Ones(4);
    CHECK(apply_diffusion_control(d, q, psi, psi, c).cwiseAbs().maxCoeff() == 0.0);
    CHECK(hs_norm_sq(d, q, psi, psi, mesh) == 0.0);
    const Field below = psi.array() - 0.5;
    CHECK(apply_truncated_diffusion(d, q, below, psi, c).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Hilbert-Schmidt norm matches an explicit mode sum") {
    const Mesh mesh(16);
    const auto q = QSpec::sine_basis(mesh, 5);
    const auto d = DiffusionSpec::nemytskii(1.5, q, 0.0);
    const Field u = sample(mesh, [](double x) { return std::cos(3 * x); });
    const Field psi = Field::Zero(mesh.size());
    double sum = 0.0;
    for (int k = 0; k < q.K; ++k) {
        const Field gk = 1.5 * u.cwiseProduct(q.basis.col(k));
        sum += q.eigenvalues(k) * mesh.h() * gk.squaredNorm();
    }
    CHECK(hs_norm_sq(d, q, u, psi, mesh) == doctest::Approx(sum).epsilon(1e-13));
}

TEST_CASE("certified diffusion constants hold and understated ones fail") {
    const Mesh mesh(32);
    const auto q = QSpec::sine_basis(mesh, 8);
    const Field psi = sample(mesh, [](double x) { return 0.3 * std::sin(std::numbers::pi * x); });
    const auto d = DiffusionSpec::nemytskii(2.0, q, norm_h(psi, mesh));
    CHECK(d.M == doctest::Approx(2.0 * 4.0 * q.trace));
    CHECK(check_diffusion_lipschitz(d, q, psi, mesh, 100, 1).passed());
    CHECK(check_diffusion_growth(d, q, psi, mesh, 100, 2).passed());
    auto weak = d;
    weak.M = 1e-3 * d.M;
    weak.L = 1e-3 * d.L;
    CHECK_FALSE(check_diffusion_lipschitz(weak, q, psi, mesh, 100, 1).passed());
    CHECK_FALSE(check_diffusion_growth(weak, q, psi, mesh, 100, 2).passed());
}

TEST_CASE("Wiener increments are reproducible and have variance dt") {
    const Mesh mesh(16);
    const auto q = QSpec::sine_basis(mesh, 4);
    const double dt = 0.01;
    const auto a = sample_wiener(q, 20000, dt, 42);
    const auto b = sample_wiener(q, 20000, dt, 42);
    CHECK(a.increments == b.increments);
    CHECK(a.seed == 42);
    const auto c = sample_wiener(q, 20000, dt, 43);
    CHECK(a.increments != c.increments);
    const double n = static_cast<double>(a.increments.size());
    const double mean = a.increments.mean();
    const double var = a.increments.array().square().mean() - mean * mean;
    CHECK(std::abs(mean) < 5.0 * std::sqrt(dt / n));
    // Var of the sample variance is 2 dt^2 / n for Gaussians.
    CHECK(std::abs(var - dt) < 5.0 * dt * std::sqrt(2.0 / n));
}

TEST_CASE("noise increment is the lambda-weighted mode field") {
    const Mesh mesh(16);
    const auto q = QSpec::sine_basis(mesh, 3);
    const auto w = sample_wiener(q, 4, 0.1, 7);
    for (int n = 0; n < 4; ++n) {
        Field expected = Field::Zero(mesh.size());
        for (int k = 0; k < 3; ++k) {
            expected += std::sqrt(q.eigenvalues(k)) * w.increments(n, k) * q.basis.col(k);
        }
        CHECK((noise_increment(q, w, n) - expected).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("Girsanov shift and log density by hand") {
    WienerPath w;
    w.dt = 0.5;
    w.increments.resize(2, 1);
    w.increments << 0.3, -0.2;
    Eigen::MatrixXd a(2, 1);
    a << 1.0, 2.0;
    const Control c{a, std::nullopt};
    const double delta = 0.25;
    const auto shifted = girsanov_shift(w, c, delta);
    CHECK(shifted.increments(0, 0) == doctest::Approx(0.3 + 1.0 * 0.5 / 0.25));
    CHECK(shifted.increments(1, 0) == doctest::Approx(-0.2 + 2.0 * 0.5 / 0.25));
    // -(1/delta)(1*0.3 + 2*(-0.2)) - (1/(2 delta^2)) * 0.5 * (1 + 4)
    const double expected = -(1.0 / delta) * (0.3 - 0.4) - (1.0 / (2 * delta * delta)) * 0.5 * 5.0;
    CHECK(girsanov_log_density(w, c, delta, w.dt) == doctest::Approx(expected).epsilon(1e-14));
    CHECK_THROWS_AS(girsanov_shift(w, c, 0.0), ParameterError);
    CHECK_THROWS_AS(girsanov_log_density(w, c, -1.0, w.dt), ParameterError);
}

TEST_CASE("Girsanov weights average to one") {
    const Mesh mesh(8);
    const auto q = QSpec::sine_basis(mesh, 2);
    const int n_steps = 10;
    const double dt = 0.1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n_steps, 2, 0.3);
    const Control c{a, std::nullopt};
    const double delta = 1.0;
    double sum = 0.0, sum_sq = 0.0;
    const int paths = 20000;
    for (int i = 0; i < paths; ++i) {
        const double wgt = std::exp(girsanov_log_density(sample_wiener(q, n_steps, dt, 1000 + i), c, delta, dt));
        sum += wgt;
        sum_sq += wgt * wgt;
    }
    const double mean = sum / paths;
    const double se = std::sqrt((sum_sq / paths - mean * mean) / paths);
    CHECK(std::abs(mean - 1.0) < 5.0 * se);
}
