#pragma once

// Discrete Kalman filter over a stacked 3N clock state: the GNSS-disciplined
// clock (index 0) plus N-1 local oscillators. Measurements are the N-1 phase
// differences between the GNSS clock and each local clock. Only differences
// are observable; estimates are reported in a gauge where the local-ensemble
// mean is zero, so the clock-0 slots read directly as GNSS-minus-ensemble.

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "clockwatch/clock_model.hpp"

namespace clockwatch {

/// Model bound to an ensemble filter: per-clock noise specs (index 0 is the
/// GNSS-disciplined clock), nominal step, and the diagonal measurement-noise
/// value. A small positive r_diag keeps the innovation covariance well
/// conditioned even for noise-free synthetic measurements.
struct FilterModel {
    std::vector<NoiseSpec> clock_specs;
    double tau = 1.0;
    double r_diag = 0.0;

    std::size_t clock_count() const { return clock_specs.size(); }
    void validate() const;
};

/// Estimated stacked state and covariance at an epoch.
struct FilterState {
    Eigen::VectorXd x_hat;
    Eigen::MatrixXd p;
    double epoch = 0.0;

    std::size_t clock_count() const { return static_cast<std::size_t>(x_hat.size()) / 3; }
};

/// Innovation sequence entry: residual, its covariance, and the normalized
/// innovation squared (chi-square with N-1 degrees of freedom when the
/// filter model matches the data).
struct InnovationRecord {
    Eigen::VectorXd innovation;
    Eigen::MatrixXd innovation_cov;
    double nis = 0.0;
};

/// GNSS clock estimate relative to the local-clock ensemble mean, with the
/// corresponding covariance diagonal entries.
struct DifferentialEstimate {
    double theta = 0.0;      ///< [s]
    double gamma = 0.0;      ///< [s/s]
    double theta_var = 0.0;  ///< [s^2]
    double gamma_var = 0.0;  ///< [(s/s)^2]
};

/// Measurement matrix: N-1 rows, row i has +1 at the GNSS phase slot and -1
/// at the phase slot of local clock i.
Eigen::MatrixXd measurement_matrix(std::size_t n_clocks);

/// Initial state: x_hat = 0, p = identity, epoch = 0.
/// Throws std::invalid_argument when fewer than two clocks are configured.
FilterState build_filter(const FilterModel& model);

/// Time update: x <- Phi x, p <- Phi p Phi^T + tau*Q, epoch += tau, with
/// block-diagonal Phi and Q assembled per clock spec.
FilterState predict(const FilterState& state, const FilterModel& model);

/// Measurement update with z (N-1 phase differences [s]). Returns the updated
/// state (re-gauged to the local-ensemble mean) and the innovation record.
/// Throws NumericalError when the innovation covariance is singular.
std::pair<FilterState, InnovationRecord> update(const FilterState& state,
                                                const Eigen::VectorXd& z,
                                                const FilterModel& model);

/// Clock-0 slots of the estimate and covariance diagonal.
DifferentialEstimate gnss_differential_estimate(const FilterState& state);

/// Bounds the unobservable common-mode component of the covariance: when its
/// largest eigenvalue exceeds the cap, the state is re-gauged and the common
/// mode reset to the cap. Differential estimates and their variances are
/// unchanged. No-op while the common mode is within the cap.
FilterState rebase_covariance(const FilterState& state, double common_mode_cap = 1.0);

namespace detail {

/// Re-gauge a stacked state so the local-clock mean of each component is zero.
Eigen::VectorXd remove_local_mean(const Eigen::VectorXd& x);

/// Covariance of the re-gauged state: A p A^T for the gauge transform A that
/// subtracts the local-ensemble mean blockwise. Removes the unobservable
/// common-mode variance, which would otherwise dwarf the observable part and
/// destroy it through cancellation; every differential variance is preserved.
Eigen::MatrixXd remove_local_mean_cov(const Eigen::MatrixXd& p);

/// Orthonormal basis (3 columns) of the common-mode subspace: uniform shifts
/// of theta, gamma, or drift across all clocks.
Eigen::MatrixXd common_mode_basis(std::size_t n_clocks);

}  // namespace detail

}  // namespace clockwatch
