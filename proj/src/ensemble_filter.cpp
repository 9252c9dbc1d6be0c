#include "clockwatch/ensemble_filter.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "clockwatch/errors.hpp"

namespace clockwatch {

void FilterModel::validate() const {
    if (clock_specs.size() < 2) {
        throw std::invalid_argument("FilterModel: need at least 2 clocks (GNSS + 1 local)");
    }
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw std::invalid_argument("FilterModel: tau must be positive and finite");
    }
    if (!(r_diag >= 0.0) || !std::isfinite(r_diag)) {
        throw std::invalid_argument("FilterModel: r_diag must be nonnegative and finite");
    }
    for (const auto& spec : clock_specs) {
        if (!spec.valid()) {
            throw std::invalid_argument("FilterModel: invalid clock noise spec");
        }
    }
}

Eigen::MatrixXd measurement_matrix(std::size_t n_clocks) {
    if (n_clocks < 2) {
        throw std::invalid_argument("measurement_matrix: need at least 2 clocks");
    }
    const auto rows = static_cast<Eigen::Index>(n_clocks - 1);
    const auto cols = static_cast<Eigen::Index>(3 * n_clocks);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        h(i, 0) = 1.0;
        h(i, 3 * (i + 1)) = -1.0;
    }
    return h;
}

FilterState build_filter(const FilterModel& model) {
    model.validate();
    const auto dim = static_cast<Eigen::Index>(3 * model.clock_count());
    FilterState state;
    state.x_hat = Eigen::VectorXd::Zero(dim);
    state.p = Eigen::MatrixXd::Identity(dim, dim);
    state.epoch = 0.0;
    return state;
}

FilterState predict(const FilterState& state, const FilterModel& model) {
    model.validate();
    const std::size_t n = model.clock_count();
    if (state.clock_count() != n) {
        throw std::invalid_argument("predict: state/model clock count mismatch");
    }
    const Eigen::Matrix3d phi = transition_block(model.tau);

    FilterState next;
    next.x_hat.resize(state.x_hat.size());
    next.p.resizeLike(state.p);
    next.epoch = state.epoch + model.tau;

    // Block structure: apply phi per clock instead of forming the 3N x 3N Phi.
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(3 * i);
        next.x_hat.segment<3>(r) = phi * state.x_hat.segment<3>(r);
        for (std::size_t j = 0; j < n; ++j) {
            const auto c = static_cast<Eigen::Index>(3 * j);
            next.p.block<3, 3>(r, c) = phi * state.p.block<3, 3>(r, c) * phi.transpose();
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(3 * i);
        next.p.block<3, 3>(r, r) += model.tau * process_noise_block(model.clock_specs[i], model.tau);
    }
    next.p = ((next.p + next.p.transpose()) * 0.5).eval();
    return next;
}

std::pair<FilterState, InnovationRecord> update(const FilterState& state,
                                                const Eigen::VectorXd& z,
                                                const FilterModel& model) {
    model.validate();
    const std::size_t n = model.clock_count();
    if (state.clock_count() != n) {
        throw std::invalid_argument("update: state/model clock count mismatch");
    }
    if (z.size() != static_cast<Eigen::Index>(n - 1)) {
        throw std::invalid_argument("update: measurement dimension must be N-1");
    }
    if (!z.allFinite()) {
        throw std::invalid_argument("update: non-finite measurement");
    }

    const Eigen::MatrixXd h = measurement_matrix(n);
    const Eigen::MatrixXd ph_t = state.p * h.transpose();
    Eigen::MatrixXd c = h * ph_t;
    c.diagonal().array() += model.r_diag;
    c = ((c + c.transpose()) * 0.5).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    Eigen::VectorXd ev = eig.eigenvalues();
    const double ev_max = ev.maxCoeff();
    const double ev_min = ev.minCoeff();
    if (!(ev_max > 0.0) || (model.r_diag == 0.0 && ev_min < 1e-12 * ev_max)) {
        const double cond = ev_min > 0.0 ? ev_max / ev_min : std::numeric_limits<double>::infinity();
        throw NumericalError("update: innovation covariance is singular or near-singular", cond);
    }
    // C >= R holds exactly; eigenvalues below that are round-off and get
    // clamped so the inverse stays bounded.
    const double ev_floor = std::max(model.r_diag * (1.0 - 1e-12), 1e-14 * ev_max);
    ev = ev.cwiseMax(ev_floor);

    const Eigen::VectorXd innovation = z - h * state.x_hat;
    const Eigen::MatrixXd c_inv = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                                  eig.eigenvectors().transpose();
    const Eigen::MatrixXd gain = ph_t * c_inv;

    FilterState next;
    next.epoch = state.epoch;
    next.x_hat = detail::remove_local_mean(state.x_hat + gain * innovation);
    next.p = state.p - gain * h * state.p;
    next.p = detail::remove_local_mean_cov(next.p);
    next.p = ((next.p + next.p.transpose()) * 0.5).eval();
    // Collapsing from the unit initial covariance to the measurement scale
    // loses the small eigenvalues to round-off; floor them at zero so the
    // covariance stays PSD and later gains stay bounded.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> peig(next.p);
    if (peig.eigenvalues().minCoeff() < 0.0) {
        next.p = peig.eigenvectors() *
                 peig.eigenvalues().cwiseMax(0.0).asDiagonal() *
                 peig.eigenvectors().transpose();
        next.p = ((next.p + next.p.transpose()) * 0.5).eval();
    }

    InnovationRecord rec;
    rec.innovation = innovation;
    rec.innovation_cov = c;
    rec.nis = innovation.dot(c_inv * innovation);
    return {std::move(next), std::move(rec)};
}

DifferentialEstimate gnss_differential_estimate(const FilterState& state) {
    if (state.x_hat.size() < 6) {
        throw std::invalid_argument("gnss_differential_estimate: state too small");
    }
    DifferentialEstimate est;
    est.theta = state.x_hat[0];
    est.gamma = state.x_hat[1];
    est.theta_var = state.p(0, 0);
    est.gamma_var = state.p(1, 1);
    return est;
}

namespace detail {

Eigen::VectorXd remove_local_mean(const Eigen::VectorXd& x) {
    const std::size_t n = static_cast<std::size_t>(x.size()) / 3;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (std::size_t i = 1; i < n; ++i) {
        mean += x.segment<3>(static_cast<Eigen::Index>(3 * i));
    }
    mean /= static_cast<double>(n - 1);
    Eigen::VectorXd out = x;
    for (std::size_t i = 0; i < n; ++i) {
        out.segment<3>(static_cast<Eigen::Index>(3 * i)) -= mean;
    }
    return out;
}

Eigen::MatrixXd remove_local_mean_cov(const Eigen::MatrixXd& p) {
    const std::size_t n = static_cast<std::size_t>(p.rows()) / 3;
    const double inv_locals = 1.0 / static_cast<double>(n - 1);
    Eigen::MatrixXd out = p;
    // Rows: subtract the local-mean row block from every clock's rows.
    Eigen::MatrixXd mean_rows = Eigen::MatrixXd::Zero(3, p.cols());
    for (std::size_t j = 1; j < n; ++j) {
        mean_rows += p.middleRows(static_cast<Eigen::Index>(3 * j), 3);
    }
    mean_rows *= inv_locals;
    for (std::size_t i = 0; i < n; ++i) {
        out.middleRows(static_cast<Eigen::Index>(3 * i), 3) -= mean_rows;
    }
    // Columns: same on the result.
    Eigen::MatrixXd mean_cols = Eigen::MatrixXd::Zero(p.rows(), 3);
    for (std::size_t j = 1; j < n; ++j) {
        mean_cols += out.middleCols(static_cast<Eigen::Index>(3 * j), 3);
    }
    mean_cols *= inv_locals;
    for (std::size_t i = 0; i < n; ++i) {
        out.middleCols(static_cast<Eigen::Index>(3 * i), 3) -= mean_cols;
    }
    return out;
}

Eigen::MatrixXd common_mode_basis(std::size_t n_clocks) {
    const auto dim = static_cast<Eigen::Index>(3 * n_clocks);
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(dim, 3);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_clocks));
    for (std::size_t i = 0; i < n_clocks; ++i) {
        for (Eigen::Index c = 0; c < 3; ++c) {
            u(static_cast<Eigen::Index>(3 * i) + c, c) = inv_sqrt_n;
        }
    }
    return u;
}

}  // namespace detail

FilterState rebase_covariance(const FilterState& state, double common_mode_cap) {
    const std::size_t n = state.clock_count();
    if (n < 2) {
        throw std::invalid_argument("rebase_covariance: state too small");
    }
    const Eigen::MatrixXd u = detail::common_mode_basis(n);
    const Eigen::Matrix3d common = u.transpose() * state.p * u;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(common);
    if (eig.eigenvalues().maxCoeff() <= common_mode_cap * (1.0 + 1e-9)) {
        return state;
    }

    FilterState next;
    next.epoch = state.epoch;
    next.x_hat = detail::remove_local_mean(state.x_hat);
    next.p = detail::remove_local_mean_cov(state.p) + common_mode_cap * (u * u.transpose());
    next.p = ((next.p + next.p.transpose()) * 0.5).eval();
    return next;
}

}  // namespace clockwatch
