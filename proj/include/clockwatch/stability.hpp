#pragma once

// Frequency-stability statistics (Hadamard and Allan variances) and the
// inverse problem of fitting the three clock-noise spectral densities to a
// set of Hadamard points. Estimators are the non-overlapping variants.

#include <cstddef>
#include <span>
#include <vector>

#include "clockwatch/clock_model.hpp"

namespace clockwatch {

/// Fractional-frequency samples y_i at a fixed sampling interval tau0.
struct FrequencySeries {
    std::vector<double> values;  ///< dimensionless y_i
    double tau0 = 1.0;           ///< sampling interval [s]
};

/// One stability point at averaging time tau.
struct StabilityPoint {
    double tau = 0.0;           ///< averaging time [s]
    double var = 0.0;           ///< variance (dimensionless)
    std::size_t num_terms = 0;  ///< squared differences averaged
};

/// Result of fitting spectral densities to Hadamard points.
struct NoiseFit {
    NoiseSpec spec;
    double residual = 0.0;  ///< log-domain RMS misfit over nonzero points
};

/// y_i = (theta_{i+1} - theta_i) / tau0. Requires at least two phase samples.
FrequencySeries phase_to_frequency(std::span<const double> phase, double tau0);

/// Non-overlapping Hadamard (three-sample) variance at averaging factor m:
/// block means of m samples, then mean squared second difference / 6.
/// Insensitive to linear frequency drift. Requires values.size() >= 3m.
StabilityPoint hadamard_variance(const FrequencySeries& series, std::size_t m);

/// Non-overlapping Allan (two-sample) variance at averaging factor m.
/// Requires values.size() >= 2m.
StabilityPoint allan_variance(const FrequencySeries& series, std::size_t m);

/// Hadamard variance predicted by the three-density clock model at tau:
///   q_theta/tau + q_gamma*tau/6 + 11*q_drift*tau^3/120.
double hadamard_model(const NoiseSpec& spec, double tau);

/// Allan variance predicted by the same model:
///   q_theta/tau + q_gamma*tau/3 + q_drift*tau^3/20.
double allan_model(const NoiseSpec& spec, double tau);

/// Nonnegative weighted least squares of Hadamard points against
/// hadamard_model. Weights are 1/var^2 so relative errors are equalized;
/// negative solutions are clipped to zero and the reduced system re-solved.
/// Requires >= 3 points whose taus span at least a decade.
NoiseFit fit_noise_coefficients(std::span<const StabilityPoint> points);

/// Octave-spaced averaging factors 1, 2, 4, ... while m*tau0 stays within
/// span_fraction of the record length (span/10 by default).
std::vector<std::size_t> octave_factors(std::size_t n_samples, double span_fraction = 0.1);

}  // namespace clockwatch
