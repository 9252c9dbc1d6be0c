#include "clockwatch/stability.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace clockwatch {

namespace {

// Non-overlapping block means at factor m.
std::vector<double> block_means(const std::vector<double>& y, std::size_t m) {
    const std::size_t blocks = y.size() / m;
    std::vector<double> avg(blocks);
    for (std::size_t k = 0; k < blocks; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += y[k * m + j];
        avg[k] = s / static_cast<double>(m);
    }
    return avg;
}

void check_series(const FrequencySeries& series, std::size_t m) {
    if (m == 0) throw std::invalid_argument("averaging factor m must be >= 1");
    if (!(series.tau0 > 0.0) || !std::isfinite(series.tau0)) {
        throw std::invalid_argument("tau0 must be positive and finite");
    }
}

}  // namespace

FrequencySeries phase_to_frequency(std::span<const double> phase, double tau0) {
    if (phase.size() < 2) {
        throw std::invalid_argument("phase_to_frequency: need at least 2 phase samples, got " +
                                    std::to_string(phase.size()));
    }
    if (!(tau0 > 0.0) || !std::isfinite(tau0)) {
        throw std::invalid_argument("phase_to_frequency: tau0 must be positive and finite");
    }
    FrequencySeries out;
    out.tau0 = tau0;
    out.values.resize(phase.size() - 1);
    for (std::size_t i = 0; i + 1 < phase.size(); ++i) {
        out.values[i] = (phase[i + 1] - phase[i]) / tau0;
    }
    return out;
}

StabilityPoint hadamard_variance(const FrequencySeries& series, std::size_t m) {
    check_series(series, m);
    if (series.values.size() < 3 * m) {
        throw std::invalid_argument("hadamard_variance: need at least " + std::to_string(3 * m) +
                                    " samples at factor " + std::to_string(m) + ", got " +
                                    std::to_string(series.values.size()));
    }
    const std::vector<double> avg = block_means(series.values, m);
    const std::size_t big_m = avg.size();
    double acc = 0.0;
    for (std::size_t i = 0; i + 2 < big_m; ++i) {
        const double d = avg[i + 2] - 2.0 * avg[i + 1] + avg[i];
        acc += d * d;
    }
    StabilityPoint p;
    p.tau = static_cast<double>(m) * series.tau0;
    p.num_terms = big_m - 2;
    p.var = acc / (6.0 * static_cast<double>(big_m - 2));
    return p;
}

StabilityPoint allan_variance(const FrequencySeries& series, std::size_t m) {
    check_series(series, m);
    if (series.values.size() < 2 * m) {
        throw std::invalid_argument("allan_variance: need at least " + std::to_string(2 * m) +
                                    " samples at factor " + std::to_string(m) + ", got " +
                                    std::to_string(series.values.size()));
    }
    const std::vector<double> avg = block_means(series.values, m);
    const std::size_t big_m = avg.size();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < big_m; ++i) {
        const double d = avg[i + 1] - avg[i];
        acc += d * d;
    }
    StabilityPoint p;
    p.tau = static_cast<double>(m) * series.tau0;
    p.num_terms = big_m - 1;
    p.var = acc / (2.0 * static_cast<double>(big_m - 1));
    return p;
}

double hadamard_model(const NoiseSpec& spec, double tau) {
    return spec.q_theta / tau + spec.q_gamma * tau / 6.0 +
           11.0 / 120.0 * spec.q_drift * tau * tau * tau;
}

double allan_model(const NoiseSpec& spec, double tau) {
    return spec.q_theta / tau + spec.q_gamma * tau / 3.0 +
           spec.q_drift * tau * tau * tau / 20.0;
}

NoiseFit fit_noise_coefficients(std::span<const StabilityPoint> points) {
    if (points.size() < 3) {
        throw std::invalid_argument("fit_noise_coefficients: need at least 3 points");
    }
    double tau_min = std::numeric_limits<double>::infinity();
    double tau_max = 0.0;
    for (const auto& p : points) {
        if (!(p.tau > 0.0) || !std::isfinite(p.tau) || p.var < 0.0 || !std::isfinite(p.var)) {
            throw std::invalid_argument("fit_noise_coefficients: invalid stability point");
        }
        tau_min = std::min(tau_min, p.tau);
        tau_max = std::max(tau_max, p.tau);
    }
    if (tau_max == tau_min) {
        throw std::invalid_argument("fit_noise_coefficients: degenerate design matrix, all taus equal");
    }
    if (tau_max / tau_min < 10.0) {
        throw std::invalid_argument("fit_noise_coefficients: taus must span at least a decade");
    }

    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd rhs(n);
    double var_floor = 0.0;
    for (const auto& p : points) var_floor = std::max(var_floor, p.var);
    if (var_floor == 0.0) {
        return NoiseFit{NoiseSpec{}, 0.0};  // ideal clock, nothing to fit
    }
    var_floor *= 1e-12;  // zero points get a finite weight derived from the largest one
    for (Eigen::Index i = 0; i < n; ++i) {
        const double tau = points[i].tau;
        const double w = 1.0 / std::max(points[i].var, var_floor);  // sqrt of 1/var^2 weighting
        design(i, 0) = w / tau;
        design(i, 1) = w * tau / 6.0;
        design(i, 2) = w * 11.0 / 120.0 * tau * tau * tau;
        rhs(i) = w * points[i].var;
    }

    // Active-set nonnegative least squares over three coefficients: solve,
    // clip negatives, re-solve over the remaining columns until stable.
    std::array<bool, 3> active = {true, true, true};
    Eigen::Vector3d q = Eigen::Vector3d::Zero();
    for (int pass = 0; pass < 4; ++pass) {
        std::vector<Eigen::Index> cols;
        for (Eigen::Index c = 0; c < 3; ++c) {
            if (active[static_cast<std::size_t>(c)]) cols.push_back(c);
        }
        q.setZero();
        if (cols.empty()) break;
        Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = design.col(cols[c]);
        const Eigen::VectorXd sol = sub.colPivHouseholderQr().solve(rhs);
        bool clipped = false;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (sol[static_cast<Eigen::Index>(c)] < 0.0) {
                active[static_cast<std::size_t>(cols[c])] = false;
                clipped = true;
            } else {
                q[cols[c]] = sol[static_cast<Eigen::Index>(c)];
            }
        }
        if (clipped) continue;
        // Drop coefficients whose contribution is below round-off everywhere;
        // they are artifacts of solving an exactly-degenerate system.
        const double rhs_scale = rhs.cwiseAbs().maxCoeff();
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const double contribution =
                design.col(cols[c]).cwiseAbs().maxCoeff() * q[cols[c]];
            if (q[cols[c]] > 0.0 && contribution < 1e-9 * rhs_scale) {
                active[static_cast<std::size_t>(cols[c])] = false;
                q[cols[c]] = 0.0;
                clipped = true;
            }
        }
        if (!clipped) break;
    }

    NoiseFit fit;
    fit.spec = NoiseSpec{q[0], q[1], q[2]};
    double acc = 0.0;
    std::size_t used = 0;
    for (const auto& p : points) {
        const double model = hadamard_model(fit.spec, p.tau);
        if (p.var > 0.0 && model > 0.0) {
            const double r = std::log(model / p.var);
            acc += r * r;
            ++used;
        }
    }
    fit.residual = used ? std::sqrt(acc / static_cast<double>(used)) : 0.0;
    return fit;
}

std::vector<std::size_t> octave_factors(std::size_t n_samples, double span_fraction) {
    std::vector<std::size_t> out;
    const double limit = span_fraction * static_cast<double>(n_samples);
    for (std::size_t m = 1; static_cast<double>(m) <= limit && 3 * m <= n_samples; m *= 2) {
        out.push_back(m);
    }
    return out;
}

}  // namespace clockwatch
