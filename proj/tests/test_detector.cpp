#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "clockwatch/clock_model.hpp"
#include "clockwatch/detector.hpp"
#include "clockwatch/scenario.hpp"

using namespace clockwatch;

namespace {

// Calibration matching the static reference deployment.
CalibrationResult static_cal(double multiplier = 6.0) {
    return CalibrationResult{5.5834e-8, 1.4109e-9, multiplier};
}

std::vector<double> constant_series(std::size_t n, double v) {
    return std::vector<double>(n, v);
}

}  // namespace

TEST_CASE("calibrate") {
    SUBCASE("computes sample standard deviations") {
        NormalSampler rng(17);
        std::vector<double> theta, gamma;
        for (int i = 0; i < 5000; ++i) {
            theta.push_back(5e-8 * rng());
            gamma.push_back(2e-9 * rng());
        }
        const CalibrationResult cal = calibrate(theta, gamma);
        CHECK(cal.sigma_theta == doctest::Approx(5e-8).epsilon(0.05));
        CHECK(cal.sigma_gamma == doctest::Approx(2e-9).epsilon(0.05));
        CHECK(cal.multiplier == 6.0);
    }
    SUBCASE("too few epochs") {
        const auto xs = constant_series(50, 1e-8);
        CHECK_THROWS_AS(calibrate(xs, xs), std::invalid_argument);
    }
    SUBCASE("zero variance is degenerate") {
        const auto xs = constant_series(200, 0.0);
        CHECK_THROWS_AS(calibrate(xs, xs), std::invalid_argument);
    }
}

TEST_CASE("phase test thresholds") {
    const CalibrationResult cal = static_cal();
    CHECK(cal.theta_threshold() == doctest::Approx(3.35004e-7).epsilon(1e-12));
    CHECK(phase_test(2e-6, cal));
    CHECK(phase_test(-2e-6, cal));
    CHECK_FALSE(phase_test(0.0, cal));
    CHECK_FALSE(phase_test(cal.theta_threshold(), cal));  // strict inequality
    CHECK(phase_test(std::nextafter(cal.theta_threshold(), 1.0), cal));
}

TEST_CASE("frequency test thresholds") {
    const CalibrationResult cal = static_cal();
    CHECK(cal.gamma_threshold() == doctest::Approx(8.4654e-9).epsilon(1e-12));
    CHECK(frequency_test(20e-9, cal));
    CHECK(frequency_test(-2e-8, cal));
    CHECK_FALSE(frequency_test(0.0, cal));
    CHECK_FALSE(frequency_test(cal.gamma_threshold(), cal));
}

TEST_CASE("classification truth table") {
    CHECK(classify(true, true) == Classification::ActiveAttack);
    CHECK(classify(true, false) == Classification::PersistentOffset);
    CHECK(classify(false, true) == Classification::FrequencyAnomaly);
    CHECK(classify(false, false) == Classification::Nominal);
}

TEST_CASE("alarm monotonicity in the estimate and the multiplier") {
    const CalibrationResult cal6 = static_cal(6.0);
    const CalibrationResult cal4 = static_cal(4.0);
    NormalSampler rng(19);
    for (int i = 0; i < 200; ++i) {
        const double theta = 5e-7 * rng();
        if (phase_test(theta, cal6)) {
            CHECK(phase_test(theta * 1.5, cal6));
            CHECK(phase_test(theta, cal4));  // lower multiplier never fires later
        }
        const double gamma = 1e-8 * rng();
        if (frequency_test(gamma, cal6)) {
            CHECK(frequency_test(gamma, cal4));
        }
    }
}

TEST_CASE("alarms are scale invariant") {
    const CalibrationResult cal = static_cal();
    NormalSampler rng(23);
    for (int i = 0; i < 200; ++i) {
        const double theta = 6e-7 * rng();
        const double gamma = 2e-8 * rng();
        const double c = 1e3;
        CalibrationResult scaled = cal;
        scaled.sigma_theta *= c;
        scaled.sigma_gamma *= c;
        CHECK(phase_test(theta, cal) == phase_test(theta * c, scaled));
        CHECK(frequency_test(gamma, cal) == frequency_test(gamma * c, scaled));
    }
}

TEST_CASE("evaluate run") {
    auto verdict = [](double epoch, bool pa, bool fa) {
        return DetectionVerdict{epoch, pa, fa, classify(pa, fa)};
    };

    SUBCASE("latency and offset at first phase alarm") {
        std::vector<DetectionVerdict> vs;
        std::vector<double> truth;
        for (int k = 0; k < 100; ++k) {
            const double epoch = k;
            const bool freq = k >= 70;
            const bool phase = k >= 80;
            vs.push_back(verdict(epoch, phase, freq));
            truth.push_back(k >= 60 ? 20e-9 * (k - 60) : 0.0);
        }
        const RunMetrics m = evaluate_run(vs, truth, 60.0);
        REQUIRE(m.first_alarm_epoch.has_value());
        CHECK(*m.first_alarm_epoch == 70.0);
        CHECK(*m.detection_latency == 10.0);
        REQUIRE(m.offset_at_detection.has_value());
        CHECK(*m.offset_at_detection == doctest::Approx(20e-9 * 20));
        CHECK(m.false_positive_count == 0);
    }
    SUBCASE("no alarms leaves the metrics empty") {
        std::vector<DetectionVerdict> vs;
        std::vector<double> truth;
        for (int k = 0; k < 50; ++k) {
            vs.push_back(verdict(k, false, false));
            truth.push_back(0.0);
        }
        const RunMetrics m = evaluate_run(vs, truth, 10.0);
        CHECK_FALSE(m.first_alarm_epoch.has_value());
        CHECK_FALSE(m.detection_latency.has_value());
        CHECK_FALSE(m.offset_at_detection.has_value());
    }
    SUBCASE("benign runs count every alarm as a false positive") {
        std::vector<DetectionVerdict> vs;
        std::vector<double> truth(30, 0.0);
        for (int k = 0; k < 30; ++k) {
            vs.push_back(verdict(k, k == 7, k == 12));
        }
        const RunMetrics m = evaluate_run(vs, truth, std::nullopt);
        CHECK(m.false_positive_count == 2);
        CHECK_FALSE(m.first_alarm_epoch.has_value());
    }
    SUBCASE("misaligned series are rejected") {
        std::vector<DetectionVerdict> vs(5);
        std::vector<double> truth(4, 0.0);
        CHECK_THROWS_AS(evaluate_run(vs, truth, std::nullopt), std::invalid_argument);
    }
}

TEST_CASE("benign pipeline: calibration, steady state and false positives") {
    // End-to-end benign behaviour on the static reference preset. Expected
    // calibration sigmas come from the deployment this simulation mirrors:
    // sigma_theta ~ 5.5834e-8 s and sigma_gamma ~ 1.4109e-9 s/s within 30%.
    const ScenarioConfig cfg = scenario_preset("benign-static");
    const TraceSet traces = simulate(cfg);
    const FilterModel model = filter_model_for(cfg);
    const CalibrationResult cal = calibrate_from_trace(traces, model, cfg.quantization);

    CHECK(cal.sigma_theta == doctest::Approx(5.5834e-8).epsilon(0.30));
    CHECK(cal.sigma_gamma == doctest::Approx(1.4109e-9).epsilon(0.30));

    // The mobile reference differs: lower phase sigma, higher frequency sigma.
    const ScenarioConfig mob = scenario_preset("benign-mobile");
    const TraceSet mtraces = simulate(mob);
    const CalibrationResult mcal =
        calibrate_from_trace(mtraces, filter_model_for(mob), mob.quantization);
    CHECK(mcal.sigma_theta == doctest::Approx(3.5606e-8).epsilon(0.30));
    CHECK(mcal.sigma_gamma == doctest::Approx(2.2561e-9).epsilon(0.30));

    // Benign estimates stay below the 6-sigma static threshold everywhere.
    const DetectionSeries series = run_filter(traces, model, cfg.quantization);
    for (double th : series.theta_hat) {
        CHECK(std::abs(th) < 6.0 * 5.5834e-8);
    }

    // Fresh benign run against that calibration: at most one false positive
    // in 1e4 epochs (6-sigma tails plus estimate autocorrelation).
    ScenarioConfig fresh = cfg;
    fresh.seed = 777;
    const TraceSet fresh_traces = simulate(fresh);
    const DetectionSeries det = run_detection(fresh_traces, model, fresh.quantization, cal);
    const RunMetrics m = evaluate_run(det.verdicts, fresh_traces.attack_truth, std::nullopt);
    std::size_t phase_alarms = 0;
    for (const auto& v : det.verdicts) phase_alarms += v.phase_alarm ? 1 : 0;
    CHECK(phase_alarms <= 1);
    CHECK(m.false_positive_count <= 1);
}

TEST_CASE("ramp attack: estimate tracks the injected offset") {
    const ScenarioConfig cfg = scenario_preset("texbat2-like");
    const TraceSet traces = simulate(cfg);
    const FilterModel model = filter_model_for(cfg);
    const DetectionSeries series = run_filter(traces, model, cfg.quantization);
    // After the lift completes (T=160 s) plus settling, the differential
    // phase estimate reads the injected 2 us within 10%.
    for (std::size_t k = 0; k < series.epochs.size(); ++k) {
        if (series.epochs[k] >= 200.0) {
            CHECK(series.theta_hat[k] == doctest::Approx(2e-6).epsilon(0.10));
        }
    }
}

TEST_CASE("detection pipeline on the ramp preset") {
    const ScenarioConfig benign = scenario_preset("benign-static");
    const FilterModel model = filter_model_for(benign);
    const CalibrationResult cal =
        calibrate_from_trace(simulate(benign), model, benign.quantization);

    const ScenarioConfig cfg = scenario_preset("texbat2-like");
    const TraceSet traces = simulate(cfg);
    const DetectionSeries det = run_detection(traces, model, cfg.quantization, cal);
    const RunMetrics m = evaluate_run(det.verdicts, traces.attack_truth, cfg.attack.start);

    REQUIRE(m.detection_latency.has_value());
    CHECK(*m.detection_latency <= 60.0);
    REQUIRE(m.offset_at_detection.has_value());
    CHECK(*m.offset_at_detection <= 5e-7);
    CHECK(m.false_positive_count == 0);

    // Multiplier monotonicity on the same series: 4-sigma never fires later.
    CalibrationResult cal4 = cal;
    cal4.multiplier = 4.0;
    const DetectionSeries det4 = run_detection(traces, model, cfg.quantization, cal4);
    const RunMetrics m4 = evaluate_run(det4.verdicts, traces.attack_truth, cfg.attack.start);
    REQUIRE(m4.first_alarm_epoch.has_value());
    CHECK(*m4.first_alarm_epoch <= *m.first_alarm_epoch);

    // ...and never fewer false positives on a fixed benign series.
    ScenarioConfig fresh = benign;
    fresh.seed = 4242;
    const TraceSet benign_traces = simulate(fresh);
    auto count_alarms = [&](const CalibrationResult& c) {
        const DetectionSeries d = run_detection(benign_traces, model, fresh.quantization, c);
        const RunMetrics bm = evaluate_run(d.verdicts, benign_traces.attack_truth, std::nullopt);
        return bm.false_positive_count;
    };
    CHECK(count_alarms(cal4) >= count_alarms(cal));
}

TEST_CASE("verdict sequence through lift and cap") {
    const ScenarioConfig benign = scenario_preset("benign-static");
    const FilterModel model = filter_model_for(benign);
    const CalibrationResult cal =
        calibrate_from_trace(simulate(benign), model, benign.quantization);

    const ScenarioConfig cfg = scenario_preset("texbat2-like");
    const TraceSet traces = simulate(cfg);
    const DetectionSeries det = run_detection(traces, model, cfg.quantization, cal);

    bool saw_nominal_before_attack = false;
    bool saw_active_during_lift = false;
    bool saw_persistent_after_cap = false;
    std::size_t freq_only_after_cap = 0;
    const double cap_time = 160.0;
    for (const auto& v : det.verdicts) {
        if (v.epoch < 60.0 && v.classification == Classification::Nominal) {
            saw_nominal_before_attack = true;
        }
        if (v.epoch > 60.0 && v.epoch < cap_time &&
            v.classification == Classification::ActiveAttack) {
            saw_active_during_lift = true;
        }
        if (v.epoch > cap_time + 40.0 &&
            v.classification == Classification::PersistentOffset) {
            saw_persistent_after_cap = true;
        }
        if (v.epoch > cap_time + 5.0 &&
            v.classification == Classification::FrequencyAnomaly) {
            ++freq_only_after_cap;
        }
    }
    CHECK(saw_nominal_before_attack);
    CHECK(saw_active_during_lift);
    CHECK(saw_persistent_after_cap);
    CHECK(freq_only_after_cap == 0);
}

TEST_CASE("frequency impulse: frequency alarm with no phase alarm") {
    const ScenarioConfig benign = scenario_preset("benign-static");
    const FilterModel model = filter_model_for(benign);
    const CalibrationResult cal =
        calibrate_from_trace(simulate(benign), model, benign.quantization);

    const ScenarioConfig cfg = scenario_preset("texbat3-like");
    const TraceSet traces = simulate(cfg);
    const DetectionSeries det = run_detection(traces, model, cfg.quantization, cal);

    std::size_t phase_alarms = 0;
    bool freq_alarm_at_impulse = false;
    for (const auto& v : det.verdicts) {
        phase_alarms += v.phase_alarm ? 1 : 0;
        if (v.freq_alarm && v.epoch >= cfg.attack.start &&
            v.epoch <= cfg.attack.start + cfg.attack.impulse_duration + 30.0) {
            freq_alarm_at_impulse = true;
        }
    }
    CHECK(phase_alarms == 0);
    CHECK(freq_alarm_at_impulse);
}

TEST_CASE("confirmation count trades latency for robustness") {
    const ScenarioConfig benign = scenario_preset("benign-static");
    const FilterModel model = filter_model_for(benign);
    const CalibrationResult cal =
        calibrate_from_trace(simulate(benign), model, benign.quantization);

    const ScenarioConfig cfg = scenario_preset("texbat2-like");
    const TraceSet traces = simulate(cfg);
    DetectorOptions confirm3;
    confirm3.confirm_epochs = 3;
    const DetectionSeries det1 = run_detection(traces, model, cfg.quantization, cal);
    const DetectionSeries det3 = run_detection(traces, model, cfg.quantization, cal, confirm3);
    const RunMetrics m1 = evaluate_run(det1.verdicts, traces.attack_truth, cfg.attack.start);
    const RunMetrics m3 = evaluate_run(det3.verdicts, traces.attack_truth, cfg.attack.start);
    REQUIRE(m1.first_alarm_epoch.has_value());
    REQUIRE(m3.first_alarm_epoch.has_value());
    CHECK(*m3.first_alarm_epoch >= *m1.first_alarm_epoch);
}
