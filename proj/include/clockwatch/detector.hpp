#pragma once

// Dual statistical test on the filter's GNSS differential estimates: the
// phase test flags offsets beyond the calibrated confidence interval, the
// frequency test flags steering beyond the clock stability model. The two
// flags map onto a four-way decision matrix.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "clockwatch/ensemble_filter.hpp"
#include "clockwatch/scenario.hpp"

namespace clockwatch {

/// One-time benign calibration: sample standard deviations of the two
/// estimate series and the threshold multiplier (6 by default).
struct CalibrationResult {
    double sigma_theta = 0.0;  ///< [s]
    double sigma_gamma = 0.0;  ///< [s/s]
    double multiplier = 6.0;

    double theta_threshold() const { return multiplier * sigma_theta; }
    double gamma_threshold() const { return multiplier * sigma_gamma; }
};

enum class Classification { Nominal, ActiveAttack, PersistentOffset, FrequencyAnomaly };

std::string to_string(Classification c);

/// Per-epoch outcome of the dual test.
struct DetectionVerdict {
    double epoch = 0.0;
    bool phase_alarm = false;
    bool freq_alarm = false;
    Classification classification = Classification::Nominal;
};

/// Run-level metrics. Alarms on benign runs (no attack start) all count as
/// false positives, as do alarms raised before the attack starts.
struct RunMetrics {
    std::optional<double> first_alarm_epoch;
    std::optional<double> detection_latency;     ///< first alarm - attack start [s]
    std::optional<double> offset_at_detection;   ///< attack truth at first phase alarm [s]
    std::size_t false_positive_count = 0;
};

/// Options of the streaming detector. `confirm_epochs` requires that many
/// consecutive raw exceedances before an alarm is raised (1 = immediate);
/// `warmup_epochs` suppresses alarms while the filter covariance settles.
struct DetectorOptions {
    std::size_t confirm_epochs = 1;
    std::size_t warmup_epochs = 30;
};

/// Sample standard deviations of benign estimate series. Requires at least
/// 100 epochs and strictly positive variance in both series.
CalibrationResult calibrate(std::span<const double> theta_hat, std::span<const double> gamma_hat,
                            double multiplier = 6.0);

/// True iff |theta_hat| exceeds multiplier*sigma_theta (strict).
bool phase_test(double theta_hat, const CalibrationResult& cal);

/// True iff |gamma_hat| exceeds multiplier*sigma_gamma (strict).
bool frequency_test(double gamma_hat, const CalibrationResult& cal);

/// Decision matrix over the two alarm flags.
Classification classify(bool phase_alarm, bool freq_alarm);

/// Aggregate a verdict sequence into run metrics. attack_truth must be
/// aligned with the verdicts; attack_start empty marks a benign run.
RunMetrics evaluate_run(std::span<const DetectionVerdict> verdicts,
                        std::span<const double> attack_truth,
                        std::optional<double> attack_start);

/// Per-epoch output of a filter pass (and, when calibrated, of the detector).
struct DetectionSeries {
    std::vector<double> epochs;
    std::vector<double> theta_hat;   ///< GNSS-minus-ensemble phase estimate [s]
    std::vector<double> gamma_hat;   ///< GNSS-minus-ensemble frequency estimate [s/s]
    std::vector<double> theta_var;
    std::vector<double> gamma_var;
    std::vector<double> nis;
    std::vector<DetectionVerdict> verdicts;  ///< empty for plain filter passes
};

/// Run the ensemble filter over a measurement stream (one N-1 vector of
/// phase differences per epoch) and return the estimate series.
DetectionSeries run_filter(const std::vector<double>& epochs,
                           const std::vector<Eigen::VectorXd>& measurements,
                           const FilterModel& model);

/// Convenience: measure a truth trace at the given quantization, then filter.
DetectionSeries run_filter(const TraceSet& traces, const FilterModel& model, double quantization);

/// Filter pass plus dual test and classification per epoch.
DetectionSeries run_detection(const std::vector<double>& epochs,
                              const std::vector<Eigen::VectorXd>& measurements,
                              const FilterModel& model, const CalibrationResult& cal,
                              const DetectorOptions& options = {});
DetectionSeries run_detection(const TraceSet& traces, const FilterModel& model,
                              double quantization, const CalibrationResult& cal,
                              const DetectorOptions& options = {});

/// Convenience: filter a benign trace and calibrate on the post-warmup
/// estimates.
CalibrationResult calibrate_from_trace(const TraceSet& traces, const FilterModel& model,
                                       double quantization, double multiplier = 6.0,
                                       std::size_t warmup_epochs = 100);

}  // namespace clockwatch
