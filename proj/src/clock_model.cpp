#include "clockwatch/clock_model.hpp"

#include <cmath>
#include <stdexcept>

#include "clockwatch/errors.hpp"

namespace clockwatch {

bool ClockState::finite() const {
    return std::isfinite(theta) && std::isfinite(gamma) && std::isfinite(drift);
}

bool NoiseSpec::valid() const {
    return std::isfinite(q_theta) && std::isfinite(q_gamma) && std::isfinite(q_drift) &&
           q_theta >= 0.0 && q_gamma >= 0.0 && q_drift >= 0.0;
}

double NormalSampler::operator()() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 53-bit uniforms; u1 shifted into (0,1] so log() is always finite.
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    const double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * kScale;
    const double u2 = static_cast<double>(eng_() >> 11) * kScale;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
}

Eigen::Matrix3d transition_block(double tau) {
    if (!std::isfinite(tau) || tau <= 0.0) {
        throw std::invalid_argument("transition_block: tau must be positive and finite");
    }
    Eigen::Matrix3d phi;
    phi << 1.0, tau, 0.5 * tau * tau,
           0.0, 1.0, tau,
           0.0, 0.0, 1.0;
    return phi;
}

Eigen::Matrix3d process_noise_block(const NoiseSpec& spec, double tau) {
    if (!spec.valid()) {
        throw std::invalid_argument("process_noise_block: spectral densities must be finite and nonnegative");
    }
    if (!std::isfinite(tau) || tau <= 0.0) {
        throw std::invalid_argument("process_noise_block: tau must be positive and finite");
    }
    const double t2 = tau * tau;
    const double t3 = t2 * tau;
    const double t4 = t3 * tau;
    const double t5 = t4 * tau;
    const double qt = spec.q_theta;
    const double qg = spec.q_gamma;
    const double qd = spec.q_drift;

    Eigen::Matrix3d q;
    q(0, 0) = qt * tau + qg * t3 / 3.0 + qd * t5 / 20.0;
    q(0, 1) = qg * t2 / 2.0 + qd * t4 / 8.0;
    q(0, 2) = qd * t3 / 6.0;
    q(1, 1) = qg * tau + qd * t3 / 3.0;
    q(1, 2) = qd * t2 / 2.0;
    q(2, 2) = qd * tau;
    q(1, 0) = q(0, 1);
    q(2, 0) = q(0, 2);
    q(2, 1) = q(1, 2);
    return q;
}

namespace detail {

Eigen::Matrix3d psd_cholesky(const Eigen::Matrix3d& a) {
    const double scale = std::max({a(0, 0), a(1, 1), a(2, 2), 0.0});
    const double tol = 1e-12 * scale;
    Eigen::Matrix3d l = Eigen::Matrix3d::Zero();
    for (int k = 0; k < 3; ++k) {
        double d = a(k, k);
        for (int j = 0; j < k; ++j) d -= l(k, j) * l(k, j);
        if (d <= tol) {
            if (d < -tol) {
                throw NumericalError("psd_cholesky: matrix is not positive semidefinite", d);
            }
            // Null pivot: the whole column must vanish or the matrix is not PSD.
            for (int i = k + 1; i < 3; ++i) {
                double r = a(i, k);
                for (int j = 0; j < k; ++j) r -= l(i, j) * l(k, j);
                if (std::abs(r) > tol) {
                    throw NumericalError("psd_cholesky: matrix is not positive semidefinite", r);
                }
            }
            continue;
        }
        l(k, k) = std::sqrt(d);
        for (int i = k + 1; i < 3; ++i) {
            double r = a(i, k);
            for (int j = 0; j < k; ++j) r -= l(i, j) * l(k, j);
            l(i, k) = r / l(k, k);
        }
    }
    return l;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

Eigen::Vector3d sample_process_noise(const NoiseSpec& spec, double tau, NormalSampler& rng) {
    const Eigen::Matrix3d q = process_noise_block(spec, tau);
    if (spec.ideal()) {
        return Eigen::Vector3d::Zero();
    }
    const Eigen::Matrix3d l = detail::psd_cholesky(q);
    const Eigen::Vector3d n(rng(), rng(), rng());
    return l * n;
}

ClockState propagate_state(const ClockState& state, double tau, const Eigen::Vector3d& noise) {
    if (!state.finite() || !noise.allFinite()) {
        throw std::invalid_argument("propagate_state: non-finite state or noise");
    }
    const Eigen::Vector3d next = transition_block(tau) * state.vec() + noise;
    return ClockState::from_vec(next);
}

double deterministic_phase(double theta0, double gamma, double drift, double t) {
    if (!std::isfinite(theta0) || !std::isfinite(gamma) || !std::isfinite(drift) ||
        !std::isfinite(t)) {
        throw std::invalid_argument("deterministic_phase: non-finite input");
    }
    return theta0 + gamma * t + 0.5 * drift * t * t;
}

}  // namespace clockwatch
