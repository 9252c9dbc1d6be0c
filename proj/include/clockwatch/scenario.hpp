#pragma once

// Synthetic scenario generation: per-epoch truth phases for a GNSS-disciplined
// clock and a set of local oscillators, with an optional adversarial steering
// profile added to the GNSS time solution, plus the quantized phase-difference
// measurements a hardware phase detector would report.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "clockwatch/clock_model.hpp"
#include "clockwatch/ensemble_filter.hpp"

namespace clockwatch {

enum class AttackKind { None, Ramp, Step, FreqImpulse };

std::string to_string(AttackKind kind);
AttackKind attack_kind_from_string(std::string_view s);

/// Adversarial steering of the GNSS time solution.
///  - ramp: offset grows at pull_rate from `start` until it caps at target_offset
///  - step: offset jumps to target_offset at `start`
///  - freq_impulse: rectangular frequency pulse (amplitude, duration) whose
///    integral is the induced phase, constant after the pulse ends
struct AttackProfile {
    AttackKind kind = AttackKind::None;
    double start = 0.0;              ///< [s]
    double target_offset = 0.0;      ///< [s], ramp/step
    double pull_rate = 0.0;          ///< [s/s], ramp slope cap
    double impulse_amplitude = 0.0;  ///< [s/s], freq_impulse
    double impulse_duration = 0.0;   ///< [s], freq_impulse

    void validate() const;
};

/// Benign behaviour of the GNSS-disciplined clock: white discipline error from
/// the receiver plus an optional slow discipline wander, modelled as a
/// first-order Gauss-Markov process with relaxation rate steering_gain.
struct GnssClockModel {
    double benign_phase_sigma = 3e-8;  ///< white discipline error [s]
    double steering_gain = 1e-2;       ///< wander relaxation rate [1/s]
    double random_walk_sigma = 0.0;    ///< stationary wander amplitude [s], 0 disables

    void validate() const;
};

/// Filter configuration carried alongside a scenario: the noise spec the
/// filter assumes for the GNSS-disciplined clock and an optional override of
/// the measurement-noise diagonal (defaults to white-sigma^2 + quantization
/// variance).
struct FilterSettings {
    NoiseSpec gnss_clock;
    std::optional<double> r_diag;
};

/// Declarative scenario description. Identical configs (same seed) produce
/// bit-identical traces.
struct ScenarioConfig {
    double duration = 500.0;  ///< [s]
    double tau = 1.0;         ///< sampling step [s]
    std::vector<NoiseSpec> local_clocks;
    GnssClockModel gnss;
    AttackProfile attack;
    double quantization = 5e-9;  ///< phase-detector grid [s], 0 = exact
    std::uint64_t seed = 1;
    FilterSettings filter;

    void validate() const;
    std::size_t epoch_count() const;
};

/// Per-epoch truth series. attack_truth is the injected offset a(t), zero
/// before the attack starts; gnss_phase includes it.
struct TraceSet {
    std::vector<double> epochs;
    std::vector<double> gnss_phase;
    std::vector<std::vector<double>> local_phases;  ///< [clock][epoch]
    std::vector<double> attack_truth;

    std::size_t epoch_count() const { return epochs.size(); }
    std::size_t local_clock_count() const { return local_phases.size(); }
    void validate() const;
};

/// Injected GNSS offset at time t for a profile.
double attack_offset(const AttackProfile& profile, double t);

/// Generate the truth traces for a configured scenario.
TraceSet simulate(const ScenarioConfig& config);

/// Phase-difference measurements z_i = gnss_phase - local_phase_i, rounded to
/// the quantization grid (0 = exact).
std::vector<Eigen::VectorXd> measure(const TraceSet& traces, double quantization);

/// Filter model matching a scenario: GNSS spec from the filter settings,
/// local specs from the scenario, r_diag defaulted as described above.
FilterModel filter_model_for(const ScenarioConfig& config);

/// Default filter model for traces without a config: all local clocks assume
/// the stock OCXO spec and the GNSS clock the stock discipline spec.
FilterModel default_filter_model(std::size_t local_clock_count);

/// Reference noise spec of the stock simulated OCXO.
NoiseSpec ocxo_noise_spec();

/// Stock spec the filter assumes for the GNSS-disciplined clock.
NoiseSpec default_gnss_filter_spec();

/// Named scenario presets: benign-static, benign-mobile, texbat2-like,
/// texbat3-like, texbat5-like. Throws std::invalid_argument for unknown names.
ScenarioConfig scenario_preset(std::string_view name);
std::vector<std::string> scenario_preset_names();

}  // namespace clockwatch
