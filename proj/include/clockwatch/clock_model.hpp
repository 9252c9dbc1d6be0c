#pragma once

// Three-state clock model: phase offset, fractional frequency offset and
// frequency drift against an ideal reference. Propagation over a step tau is
// exact (polynomial transition plus integrated process-noise covariance), so
// simulated traces carry no step-size bias.

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace clockwatch {

/// State of one clock at an epoch. Units: seconds, s/s, 1/s.
struct ClockState {
    double theta = 0.0;  ///< phase offset vs. ideal time [s]
    double gamma = 0.0;  ///< fractional frequency offset [s/s]
    double drift = 0.0;  ///< frequency drift rate [1/s]

    Eigen::Vector3d vec() const { return {theta, gamma, drift}; }
    static ClockState from_vec(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
    bool finite() const;
};

/// Spectral densities of the three white-noise drivers of the clock model.
/// All-zero denotes an ideal (noiseless) clock.
struct NoiseSpec {
    double q_theta = 0.0;  ///< white frequency noise density [s^2/s]
    double q_gamma = 0.0;  ///< random-walk frequency noise density [(s/s)^2/s]
    double q_drift = 0.0;  ///< random-run frequency noise density [(1/s)^2/s]

    bool valid() const;  // finite and nonnegative
    bool ideal() const { return q_theta == 0.0 && q_gamma == 0.0 && q_drift == 0.0; }
};

/// Deterministic standard-normal source (Box-Muller over mt19937_64), so the
/// same seed reproduces the same stream on any platform with IEEE doubles.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : eng_(seed) {}

    double operator()();

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// State-transition block for one clock over step tau:
///   [[1, tau, tau^2/2], [0, 1, tau], [0, 0, 1]].
/// Throws std::invalid_argument for non-positive or non-finite tau.
Eigen::Matrix3d transition_block(double tau);

/// Integrated process-noise covariance of one clock over step tau.
/// Symmetric positive semidefinite for any valid spec.
Eigen::Matrix3d process_noise_block(const NoiseSpec& spec, double tau);

/// Draws one correlated 3-vector of process noise with covariance
/// process_noise_block(spec, tau). Degenerate directions (zero densities)
/// produce exact zeros. Throws NumericalError if the block is not PSD,
/// which would indicate a bug in the block construction.
Eigen::Vector3d sample_process_noise(const NoiseSpec& spec, double tau, NormalSampler& rng);

/// One exact propagation step: transition_block(tau) * state + noise.
ClockState propagate_state(const ClockState& state, double tau, const Eigen::Vector3d& noise);

/// Closed-form noiseless phase: theta0 + gamma*t + drift*t^2/2.
double deterministic_phase(double theta0, double gamma, double drift, double t);

namespace detail {

/// Lower-triangular factor L with L*L^T = a for a symmetric PSD 3x3 matrix.
/// Zero pivots (relative to the largest diagonal entry) yield exactly-zero
/// columns so degenerate covariances factor cleanly.
Eigen::Matrix3d psd_cholesky(const Eigen::Matrix3d& a);

/// splitmix64 mix, used to derive independent per-stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace detail

}  // namespace clockwatch
