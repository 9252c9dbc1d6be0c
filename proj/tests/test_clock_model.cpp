#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "clockwatch/clock_model.hpp"
#include "clockwatch/errors.hpp"

using namespace clockwatch;

namespace {

double rel_err(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace

TEST_CASE("transition block entries") {
    const Eigen::Matrix3d phi1 = transition_block(1.0);
    Eigen::Matrix3d want;
    want << 1, 1, 0.5,
            0, 1, 1,
            0, 0, 1;
    CHECK((phi1 - want).cwiseAbs().maxCoeff() == 0.0);

    const Eigen::Matrix3d phi2 = transition_block(2.0);
    Eigen::Matrix3d want2;
    want2 << 1, 2, 2,
             0, 1, 2,
             0, 0, 1;
    CHECK((phi2 - want2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transition block composes as a semigroup") {
    const Eigen::Matrix3d half = transition_block(0.5);
    CHECK(((half * half) - transition_block(1.0)).cwiseAbs().maxCoeff() <= 1e-15);

    NormalSampler rng(7);
    for (int i = 0; i < 50; ++i) {
        const double t1 = std::abs(rng()) + 0.1;
        const double t2 = std::abs(rng()) + 0.1;
        const Eigen::Matrix3d lhs = transition_block(t1) * transition_block(t2);
        const Eigen::Matrix3d rhs = transition_block(t1 + t2);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("transition block rejects bad tau") {
    CHECK_THROWS_AS(transition_block(0.0), std::invalid_argument);
    CHECK_THROWS_AS(transition_block(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(transition_block(std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
    CHECK_THROWS_AS(transition_block(std::nan("")), std::invalid_argument);
}

TEST_CASE("process noise block values") {
    SUBCASE("all-zero spec gives the zero matrix") {
        const Eigen::Matrix3d q = process_noise_block(NoiseSpec{}, 3.7);
        CHECK(q.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("phase-only spec at tau=1") {
        const Eigen::Matrix3d q = process_noise_block(NoiseSpec{1.0, 0.0, 0.0}, 1.0);
        CHECK(q(0, 0) == 1.0);
        Eigen::Matrix3d rest = q;
        rest(0, 0) = 0.0;
        CHECK(rest.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("two-density example at tau=1") {
        const Eigen::Matrix3d q = process_noise_block(NoiseSpec{1e-22, 1e-26, 0.0}, 1.0);
        CHECK(q(0, 0) == doctest::Approx(1e-22 + 1e-26 / 3.0).epsilon(1e-14));
        CHECK(q(0, 1) == doctest::Approx(5e-27).epsilon(1e-14));
        CHECK(q(1, 1) == doctest::Approx(1e-26).epsilon(1e-14));
        CHECK(q(0, 2) == 0.0);
        CHECK(q(1, 2) == 0.0);
        CHECK(q(2, 2) == 0.0);
    }
}

TEST_CASE("process noise block is symmetric PSD and scales linearly") {
    NormalSampler rng(11);
    for (int i = 0; i < 100; ++i) {
        const NoiseSpec spec{std::abs(rng()) * 1e-20, std::abs(rng()) * 1e-24,
                             std::abs(rng()) * 1e-30};
        const double tau = std::abs(rng()) * 10.0 + 0.01;
        const Eigen::Matrix3d q = process_noise_block(spec, tau);
        CHECK((q - q.transpose()).cwiseAbs().maxCoeff() == 0.0);
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(q);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-12 * q.trace());

        const double c = 3.25;
        const Eigen::Matrix3d scaled =
            process_noise_block(NoiseSpec{c * spec.q_theta, c * spec.q_gamma, c * spec.q_drift}, tau);
        CHECK((scaled - c * q).cwiseAbs().maxCoeff() <= 1e-12 * scaled.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("process noise block rejects invalid specs") {
    CHECK_THROWS_AS(process_noise_block(NoiseSpec{-1e-22, 0.0, 0.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(process_noise_block(NoiseSpec{1e-22, 0.0, 0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("process noise sampling") {
    SUBCASE("ideal clock draws exact zeros") {
        NormalSampler rng(1);
        const Eigen::Vector3d w = sample_process_noise(NoiseSpec{}, 1.0, rng);
        CHECK(w.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("phase-only spec excites only the phase component") {
        NormalSampler rng(2);
        for (int i = 0; i < 20; ++i) {
            const Eigen::Vector3d w = sample_process_noise(NoiseSpec{1.0, 0.0, 0.0}, 1.0, rng);
            CHECK(w[1] == 0.0);
            CHECK(w[2] == 0.0);
        }
    }
    SUBCASE("same seed reproduces the draw") {
        NormalSampler a(42), b(42);
        const NoiseSpec spec{1e-22, 1e-26, 1e-32};
        const Eigen::Vector3d wa = sample_process_noise(spec, 1.0, a);
        const Eigen::Vector3d wb = sample_process_noise(spec, 1.0, b);
        CHECK((wa - wb).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("sampled noise matches the covariance it was drawn from") {
    // Monte-Carlo oracle: the empirical second moments of 1e5 draws must
    // reproduce the analytic block within 5% on the diagonal.
    const NoiseSpec spec{1e-22, 1e-26, 1e-31};
    const double tau = 1.0;
    const Eigen::Matrix3d q = process_noise_block(spec, tau);
    NormalSampler rng(123);
    const int n = 100000;
    Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
    for (int i = 0; i < n; ++i) {
        const Eigen::Vector3d w = sample_process_noise(spec, tau, rng);
        acc += w * w.transpose();
    }
    acc /= static_cast<double>(n);
    for (int d = 0; d < 3; ++d) {
        CHECK(rel_err(acc(d, d), q(d, d)) < 0.05);
    }
}

TEST_CASE("propagation examples") {
    SUBCASE("pure frequency offset integrates linearly") {
        const ClockState next =
            propagate_state(ClockState{0.0, 1e-9, 0.0}, 10.0, Eigen::Vector3d::Zero());
        CHECK(next.theta == doctest::Approx(1e-8).epsilon(1e-14));
        CHECK(next.gamma == 1e-9);
        CHECK(next.drift == 0.0);
    }
    SUBCASE("drift contributes half D tau^2 to phase") {
        const ClockState next =
            propagate_state(ClockState{0.0, 0.0, 2e-12}, 10.0, Eigen::Vector3d::Zero());
        CHECK(next.theta == doctest::Approx(1e-10).epsilon(1e-14));
        CHECK(next.gamma == doctest::Approx(2e-11).epsilon(1e-14));
        CHECK(next.drift == 2e-12);
    }
    SUBCASE("non-finite input is rejected") {
        CHECK_THROWS_AS(propagate_state(ClockState{std::nan(""), 0.0, 0.0}, 1.0,
                                        Eigen::Vector3d::Zero()),
                        std::invalid_argument);
    }
}

TEST_CASE("n zero-noise steps reproduce the closed form") {
    const double theta0 = 2.5e-7, gamma = 3e-10, drift = 1.5e-14, tau = 2.0;
    ClockState state{theta0, gamma, drift};
    for (int n = 1; n <= 100; ++n) {
        state = propagate_state(state, tau, Eigen::Vector3d::Zero());
        const double t = static_cast<double>(n) * tau;
        const double want = deterministic_phase(theta0, gamma, drift, t);
        CHECK(rel_err(state.theta, want) <= 1e-15);
    }
}

TEST_CASE("deterministic phase") {
    CHECK(deterministic_phase(0.0, 0.0, 0.0, 12345.0) == 0.0);
    CHECK(deterministic_phase(1e-6, 0.0, 0.0, 100.0) == 1e-6);
    CHECK(deterministic_phase(0.0, 1e-9, 1e-14, 100.0) ==
          doctest::Approx(1e-7 + 5e-11).epsilon(1e-14));
}

TEST_CASE("propagated clouds match the predicted covariance") {
    // Ensemble statistics after one stochastic step from a dispersed cloud:
    // cov = Phi P0 Phi^T + Q, checked within 5% on the diagonals.
    const NoiseSpec spec{1e-22, 1e-26, 1e-31};
    const double tau = 4.0;
    const Eigen::Matrix3d phi = transition_block(tau);
    const Eigen::Matrix3d q = process_noise_block(spec, tau);
    const Eigen::Vector3d p0_diag(4e-22, 9e-26, 1e-31);
    const Eigen::Matrix3d want =
        phi * p0_diag.asDiagonal() * phi.transpose() + q;
    const ClockState center_state{1e-8, 2e-10, 1e-15};

    NormalSampler rng(77);
    const int n = 100000;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
    const Eigen::Vector3d center = phi * center_state.vec();
    for (int i = 0; i < n; ++i) {
        ClockState start = center_state;
        start.theta += std::sqrt(p0_diag[0]) * rng();
        start.gamma += std::sqrt(p0_diag[1]) * rng();
        start.drift += std::sqrt(p0_diag[2]) * rng();
        const Eigen::Vector3d w = sample_process_noise(spec, tau, rng);
        const Eigen::Vector3d dev = propagate_state(start, tau, w).vec() - center;
        mean += dev;
        acc += dev * dev.transpose();
    }
    mean /= static_cast<double>(n);
    acc /= static_cast<double>(n);
    for (int d = 0; d < 3; ++d) {
        CHECK(rel_err(acc(d, d), want(d, d)) < 0.05);
        CHECK(std::abs(mean(d)) < 5.0 * std::sqrt(want(d, d) / n));
    }
}

TEST_CASE("psd cholesky factors degenerate blocks with exact zero columns") {
    const Eigen::Matrix3d q = process_noise_block(NoiseSpec{1e-22, 0.0, 0.0}, 1.0);
    const Eigen::Matrix3d l = detail::psd_cholesky(q);
    CHECK(l(0, 0) == doctest::Approx(1e-11).epsilon(1e-12));
    CHECK(l.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(l.col(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(((l * l.transpose()) - q).cwiseAbs().maxCoeff() <= 1e-15 * q(0, 0));

    Eigen::Matrix3d bad;
    bad << 1.0, 0.0, 0.0,
           0.0, -1.0, 0.0,
           0.0, 0.0, 1.0;
    CHECK_THROWS_AS(detail::psd_cholesky(bad), NumericalError);
}
