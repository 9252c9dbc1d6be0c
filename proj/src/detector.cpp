#include "clockwatch/detector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace clockwatch {

std::string to_string(Classification c) {
    switch (c) {
        case Classification::Nominal: return "Nominal";
        case Classification::ActiveAttack: return "ActiveAttack";
        case Classification::PersistentOffset: return "PersistentOffset";
        case Classification::FrequencyAnomaly: return "FrequencyAnomaly";
    }
    return "Nominal";
}

CalibrationResult calibrate(std::span<const double> theta_hat, std::span<const double> gamma_hat,
                            double multiplier) {
    if (theta_hat.size() != gamma_hat.size()) {
        throw std::invalid_argument("calibrate: series lengths differ");
    }
    if (theta_hat.size() < 100) {
        throw std::invalid_argument("calibrate: need at least 100 benign epochs, got " +
                                    std::to_string(theta_hat.size()));
    }
    if (!(multiplier > 0.0) || !std::isfinite(multiplier)) {
        throw std::invalid_argument("calibrate: multiplier must be positive");
    }

    auto sample_std = [](std::span<const double> xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double acc = 0.0;
        for (double x : xs) acc += (x - mean) * (x - mean);
        return std::sqrt(acc / static_cast<double>(xs.size() - 1));
    };

    CalibrationResult cal;
    cal.sigma_theta = sample_std(theta_hat);
    cal.sigma_gamma = sample_std(gamma_hat);
    cal.multiplier = multiplier;
    if (!(cal.sigma_theta > 0.0) || !(cal.sigma_gamma > 0.0)) {
        throw std::invalid_argument("calibrate: degenerate benign series with zero variance");
    }
    return cal;
}

bool phase_test(double theta_hat, const CalibrationResult& cal) {
    return std::abs(theta_hat) > cal.theta_threshold();
}

bool frequency_test(double gamma_hat, const CalibrationResult& cal) {
    return std::abs(gamma_hat) > cal.gamma_threshold();
}

Classification classify(bool phase_alarm, bool freq_alarm) {
    if (phase_alarm && freq_alarm) return Classification::ActiveAttack;
    if (phase_alarm) return Classification::PersistentOffset;
    if (freq_alarm) return Classification::FrequencyAnomaly;
    return Classification::Nominal;
}

RunMetrics evaluate_run(std::span<const DetectionVerdict> verdicts,
                        std::span<const double> attack_truth,
                        std::optional<double> attack_start) {
    if (verdicts.size() != attack_truth.size()) {
        throw std::invalid_argument("evaluate_run: verdicts/attack_truth lengths differ");
    }
    RunMetrics metrics;
    for (std::size_t k = 0; k < verdicts.size(); ++k) {
        const DetectionVerdict& v = verdicts[k];
        const bool any_alarm = v.phase_alarm || v.freq_alarm;
        if (!any_alarm) continue;
        const bool pre_attack = !attack_start || v.epoch < *attack_start;
        if (pre_attack) {
            ++metrics.false_positive_count;
            continue;
        }
        if (!metrics.first_alarm_epoch) {
            metrics.first_alarm_epoch = v.epoch;
            metrics.detection_latency = v.epoch - *attack_start;
        }
        if (v.phase_alarm && !metrics.offset_at_detection) {
            metrics.offset_at_detection = attack_truth[k];
        }
    }
    return metrics;
}

DetectionSeries run_filter(const std::vector<double>& epochs,
                           const std::vector<Eigen::VectorXd>& measurements,
                           const FilterModel& model) {
    model.validate();
    if (epochs.size() != measurements.size()) {
        throw std::invalid_argument("run_filter: epochs/measurements length mismatch");
    }
    if (epochs.empty()) {
        throw std::invalid_argument("run_filter: empty measurement stream");
    }
    if (measurements.front().size() != static_cast<Eigen::Index>(model.clock_count() - 1)) {
        throw std::invalid_argument("run_filter: stream has " +
                                    std::to_string(measurements.front().size()) +
                                    " measurement rows but the model expects " +
                                    std::to_string(model.clock_count() - 1));
    }
    const std::size_t n = epochs.size();

    DetectionSeries series;
    series.epochs = epochs;
    series.theta_hat.resize(n);
    series.gamma_hat.resize(n);
    series.theta_var.resize(n);
    series.gamma_var.resize(n);
    series.nis.resize(n);

    FilterState state = build_filter(model);
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) {
            state = predict(state, model);
        }
        auto [updated, record] = update(state, measurements[k], model);
        state = rebase_covariance(updated);
        const DifferentialEstimate est = gnss_differential_estimate(state);
        series.theta_hat[k] = est.theta;
        series.gamma_hat[k] = est.gamma;
        series.theta_var[k] = est.theta_var;
        series.gamma_var[k] = est.gamma_var;
        series.nis[k] = record.nis;
    }
    return series;
}

DetectionSeries run_filter(const TraceSet& traces, const FilterModel& model, double quantization) {
    traces.validate();
    model.validate();
    if (model.clock_count() != traces.local_clock_count() + 1) {
        throw std::invalid_argument("run_filter: trace has " +
                                    std::to_string(traces.local_clock_count()) +
                                    " local clocks but the model expects " +
                                    std::to_string(model.clock_count() - 1));
    }
    return run_filter(traces.epochs, measure(traces, quantization), model);
}

namespace {

void apply_verdicts(DetectionSeries& series, const CalibrationResult& cal,
                    const DetectorOptions& options) {
    const std::size_t epochs = series.epochs.size();
    series.verdicts.resize(epochs);
    std::size_t phase_streak = 0;
    std::size_t freq_streak = 0;
    for (std::size_t k = 0; k < epochs; ++k) {
        phase_streak = phase_test(series.theta_hat[k], cal) ? phase_streak + 1 : 0;
        freq_streak = frequency_test(series.gamma_hat[k], cal) ? freq_streak + 1 : 0;
        const bool warm = k >= options.warmup_epochs;
        DetectionVerdict& v = series.verdicts[k];
        v.epoch = series.epochs[k];
        v.phase_alarm = warm && phase_streak >= options.confirm_epochs;
        v.freq_alarm = warm && freq_streak >= options.confirm_epochs;
        v.classification = classify(v.phase_alarm, v.freq_alarm);
    }
}

}  // namespace

DetectionSeries run_detection(const std::vector<double>& epochs,
                              const std::vector<Eigen::VectorXd>& measurements,
                              const FilterModel& model, const CalibrationResult& cal,
                              const DetectorOptions& options) {
    DetectionSeries series = run_filter(epochs, measurements, model);
    apply_verdicts(series, cal, options);
    return series;
}

DetectionSeries run_detection(const TraceSet& traces, const FilterModel& model,
                              double quantization, const CalibrationResult& cal,
                              const DetectorOptions& options) {
    DetectionSeries series = run_filter(traces, model, quantization);
    apply_verdicts(series, cal, options);
    return series;
}

CalibrationResult calibrate_from_trace(const TraceSet& traces, const FilterModel& model,
                                       double quantization, double multiplier,
                                       std::size_t warmup_epochs) {
    const DetectionSeries series = run_filter(traces, model, quantization);
    if (series.epochs.size() <= warmup_epochs) {
        throw std::invalid_argument("calibrate_from_trace: trace shorter than warmup");
    }
    const std::span<const double> theta(series.theta_hat);
    const std::span<const double> gamma(series.gamma_hat);
    return calibrate(theta.subspan(warmup_epochs), gamma.subspan(warmup_epochs), multiplier);
}

}  // namespace clockwatch
