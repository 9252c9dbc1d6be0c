#include "clockwatch/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace clockwatch {

std::string to_string(AttackKind kind) {
    switch (kind) {
        case AttackKind::None: return "none";
        case AttackKind::Ramp: return "ramp";
        case AttackKind::Step: return "step";
        case AttackKind::FreqImpulse: return "freq_impulse";
    }
    return "none";
}

AttackKind attack_kind_from_string(std::string_view s) {
    if (s == "none") return AttackKind::None;
    if (s == "ramp") return AttackKind::Ramp;
    if (s == "step") return AttackKind::Step;
    if (s == "freq_impulse") return AttackKind::FreqImpulse;
    throw std::invalid_argument("unknown attack kind: " + std::string(s));
}

void AttackProfile::validate() const {
    if (!(start >= 0.0) || !std::isfinite(start)) {
        throw std::invalid_argument("attack: start must be nonnegative and finite");
    }
    switch (kind) {
        case AttackKind::None:
            break;
        case AttackKind::Ramp:
            if (!(pull_rate > 0.0) || !std::isfinite(pull_rate)) {
                throw std::invalid_argument("attack: ramp requires pull_rate > 0");
            }
            if (target_offset == 0.0 || !std::isfinite(target_offset)) {
                throw std::invalid_argument("attack: ramp requires nonzero target_offset");
            }
            break;
        case AttackKind::Step:
            if (target_offset == 0.0 || !std::isfinite(target_offset)) {
                throw std::invalid_argument("attack: step requires nonzero target_offset");
            }
            break;
        case AttackKind::FreqImpulse:
            if (!std::isfinite(impulse_amplitude) || impulse_amplitude == 0.0) {
                throw std::invalid_argument("attack: freq_impulse requires nonzero impulse_amplitude");
            }
            if (!(impulse_duration > 0.0) || !std::isfinite(impulse_duration)) {
                throw std::invalid_argument("attack: freq_impulse requires impulse_duration > 0");
            }
            break;
    }
}

void GnssClockModel::validate() const {
    if (!(benign_phase_sigma >= 0.0) || !std::isfinite(benign_phase_sigma)) {
        throw std::invalid_argument("gnss: benign_phase_sigma must be nonnegative and finite");
    }
    if (!(steering_gain > 0.0) || !std::isfinite(steering_gain)) {
        throw std::invalid_argument("gnss: steering_gain must be positive and finite");
    }
    if (!(random_walk_sigma >= 0.0) || !std::isfinite(random_walk_sigma)) {
        throw std::invalid_argument("gnss: random_walk_sigma must be nonnegative and finite");
    }
}

void ScenarioConfig::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw std::invalid_argument("scenario: tau must be positive and finite");
    }
    if (!(duration >= 10.0 * tau)) {
        throw std::invalid_argument("scenario: duration must be at least 10*tau");
    }
    if (local_clocks.empty()) {
        throw std::invalid_argument("scenario: need at least one local clock");
    }
    for (const auto& spec : local_clocks) {
        if (!spec.valid()) {
            throw std::invalid_argument("scenario: invalid local clock noise spec");
        }
    }
    if (!(quantization >= 0.0) || !std::isfinite(quantization)) {
        throw std::invalid_argument("scenario: quantization must be nonnegative and finite");
    }
    if (!filter.gnss_clock.valid()) {
        throw std::invalid_argument("scenario: invalid filter gnss clock spec");
    }
    if (filter.r_diag && (!(*filter.r_diag >= 0.0) || !std::isfinite(*filter.r_diag))) {
        throw std::invalid_argument("scenario: filter r_diag must be nonnegative and finite");
    }
    gnss.validate();
    attack.validate();
}

std::size_t ScenarioConfig::epoch_count() const {
    return static_cast<std::size_t>(std::floor(duration / tau)) + 1;
}

void TraceSet::validate() const {
    const std::size_t n = epochs.size();
    if (gnss_phase.size() != n || attack_truth.size() != n) {
        throw std::invalid_argument("TraceSet: column lengths differ");
    }
    for (const auto& col : local_phases) {
        if (col.size() != n) {
            throw std::invalid_argument("TraceSet: column lengths differ");
        }
    }
    if (local_phases.empty()) {
        throw std::invalid_argument("TraceSet: need at least one local clock");
    }
}

double attack_offset(const AttackProfile& profile, double t) {
    if (t < 0.0 || !std::isfinite(t)) {
        throw std::invalid_argument("attack_offset: t must be nonnegative and finite");
    }
    switch (profile.kind) {
        case AttackKind::None:
            return 0.0;
        case AttackKind::Step:
            return t >= profile.start ? profile.target_offset : 0.0;
        case AttackKind::Ramp: {
            if (t <= profile.start) return 0.0;
            const double lifted = profile.pull_rate * (t - profile.start);
            const double sign = profile.target_offset >= 0.0 ? 1.0 : -1.0;
            return sign * std::min(lifted, std::abs(profile.target_offset));
        }
        case AttackKind::FreqImpulse: {
            if (t <= profile.start) return 0.0;
            const double active = std::min(t - profile.start, profile.impulse_duration);
            return profile.impulse_amplitude * active;
        }
    }
    return 0.0;
}

TraceSet simulate(const ScenarioConfig& config) {
    config.validate();
    const std::size_t epochs = config.epoch_count();
    const std::size_t locals = config.local_clocks.size();

    TraceSet traces;
    traces.epochs.resize(epochs);
    traces.gnss_phase.resize(epochs);
    traces.attack_truth.resize(epochs);
    traces.local_phases.assign(locals, std::vector<double>(epochs));

    for (std::size_t k = 0; k < epochs; ++k) {
        traces.epochs[k] = static_cast<double>(k) * config.tau;
    }

    // Independent streams per noise source so the draw sequence of one clock
    // never depends on the configuration of another.
    NormalSampler white_rng(detail::mix_seed(config.seed, 0));
    NormalSampler wander_rng(detail::mix_seed(config.seed, 1));

    const GnssClockModel& g = config.gnss;
    double wander = 0.0;
    if (g.random_walk_sigma > 0.0) {
        wander = g.random_walk_sigma * wander_rng();  // start at a stationary draw
    }
    const double rho = std::exp(-g.steering_gain * config.tau);
    const double wander_step = g.random_walk_sigma * std::sqrt(std::max(0.0, 1.0 - rho * rho));
    for (std::size_t k = 0; k < epochs; ++k) {
        if (k > 0 && g.random_walk_sigma > 0.0) {
            wander = rho * wander + wander_step * wander_rng();
        }
        const double white = g.benign_phase_sigma > 0.0 ? g.benign_phase_sigma * white_rng() : 0.0;
        traces.gnss_phase[k] = white + wander;
    }
    // Attack enters additively after all noise so that, for a fixed seed, the
    // trace with an attack differs from the benign one by exactly a(t).
    for (std::size_t k = 0; k < epochs; ++k) {
        const double a = attack_offset(config.attack, traces.epochs[k]);
        traces.attack_truth[k] = a;
        traces.gnss_phase[k] += a;
    }

    for (std::size_t c = 0; c < locals; ++c) {
        NormalSampler rng(detail::mix_seed(config.seed, 2 + c));
        ClockState state;
        traces.local_phases[c][0] = state.theta;
        for (std::size_t k = 1; k < epochs; ++k) {
            const Eigen::Vector3d noise = sample_process_noise(config.local_clocks[c], config.tau, rng);
            state = propagate_state(state, config.tau, noise);
            traces.local_phases[c][k] = state.theta;
        }
    }
    return traces;
}

std::vector<Eigen::VectorXd> measure(const TraceSet& traces, double quantization) {
    traces.validate();
    if (!(quantization >= 0.0) || !std::isfinite(quantization)) {
        throw std::invalid_argument("measure: quantization must be nonnegative and finite");
    }
    const std::size_t epochs = traces.epoch_count();
    const std::size_t locals = traces.local_clock_count();
    std::vector<Eigen::VectorXd> out(epochs, Eigen::VectorXd(static_cast<Eigen::Index>(locals)));
    for (std::size_t k = 0; k < epochs; ++k) {
        for (std::size_t i = 0; i < locals; ++i) {
            const double diff = traces.gnss_phase[k] - traces.local_phases[i][k];
            out[k][static_cast<Eigen::Index>(i)] =
                quantization > 0.0 ? quantization * std::round(diff / quantization) : diff;
        }
    }
    return out;
}

namespace {

// Stock spec of the filter's GNSS-disciplined clock model: sized so the phase
// estimate tracks the discipline wander within a few seconds while the
// frequency estimate averages over roughly fifteen.
constexpr NoiseSpec kGnssFilterSpec{9e-18, 1.875e-19, 0.0};

double default_r_diag(double white_sigma, double quantization) {
    return white_sigma * white_sigma + quantization * quantization / 12.0;
}

}  // namespace

FilterModel filter_model_for(const ScenarioConfig& config) {
    config.validate();
    FilterModel model;
    model.tau = config.tau;
    model.clock_specs.reserve(config.local_clocks.size() + 1);
    model.clock_specs.push_back(config.filter.gnss_clock);
    for (const auto& spec : config.local_clocks) {
        model.clock_specs.push_back(spec);
    }
    model.r_diag = config.filter.r_diag.value_or(
        default_r_diag(config.gnss.benign_phase_sigma, config.quantization));
    return model;
}

FilterModel default_filter_model(std::size_t local_clock_count) {
    FilterModel model;
    model.tau = 1.0;
    model.clock_specs.push_back(kGnssFilterSpec);
    for (std::size_t i = 0; i < local_clock_count; ++i) {
        model.clock_specs.push_back(ocxo_noise_spec());
    }
    model.r_diag = default_r_diag(3e-8, 5e-9);
    return model;
}

NoiseSpec ocxo_noise_spec() {
    // Chip-scale OCXO class part, white-FM dominated: Allan deviation within
    // a factor of two of 5e-10 for averaging times up to ~10 s and below
    // 1e-9 out to 1e3 s. Random-walk FM is kept negligible so the free
    // running ensemble holds sub-threshold wander over 1e4 s spans.
    return NoiseSpec{2.5e-19, 1e-27, 0.0};
}

NoiseSpec default_gnss_filter_spec() {
    return kGnssFilterSpec;
}

namespace {

std::vector<NoiseSpec> stock_local_clocks() {
    const NoiseSpec base = ocxo_noise_spec();
    std::vector<NoiseSpec> clocks;
    for (double scale : {0.85, 1.0, 1.15}) {
        clocks.push_back(NoiseSpec{base.q_theta * scale, base.q_gamma * scale, 0.0});
    }
    return clocks;
}

ScenarioConfig benign_static_config() {
    ScenarioConfig cfg;
    cfg.duration = 10000.0;
    cfg.tau = 1.0;
    cfg.local_clocks = stock_local_clocks();
    cfg.gnss = GnssClockModel{3e-8, 1.0 / 300.0, 5.0e-8};
    cfg.attack = AttackProfile{};
    cfg.quantization = 5e-9;
    cfg.seed = 101;
    cfg.filter.gnss_clock = kGnssFilterSpec;
    return cfg;
}

ScenarioConfig benign_mobile_config() {
    ScenarioConfig cfg = benign_static_config();
    cfg.gnss = GnssClockModel{3e-8, 1.0 / 18.0, 3.2e-8};
    cfg.seed = 102;
    return cfg;
}

}  // namespace

ScenarioConfig scenario_preset(std::string_view name) {
    if (name == "benign-static") {
        return benign_static_config();
    }
    if (name == "benign-mobile") {
        return benign_mobile_config();
    }
    if (name == "texbat2-like") {
        // Static receiver, code-aligned spoofer: 2 us lift at up to 20 ns/s
        // starting at T=60 s, so the ramp caps at T=160 s.
        ScenarioConfig cfg = benign_static_config();
        cfg.duration = 500.0;
        cfg.seed = 2;
        cfg.attack.kind = AttackKind::Ramp;
        cfg.attack.start = 60.0;
        cfg.attack.target_offset = 2e-6;
        cfg.attack.pull_rate = 20e-9;
        return cfg;
    }
    if (name == "texbat5-like") {
        // Mobile receiver variant: 1.8 us lift, same pull cap.
        ScenarioConfig cfg = benign_mobile_config();
        cfg.duration = 500.0;
        cfg.seed = 5;
        cfg.attack.kind = AttackKind::Ramp;
        cfg.attack.start = 60.0;
        cfg.attack.target_offset = 1.8e-6;
        cfg.attack.pull_rate = 20e-9;
        return cfg;
    }
    if (name == "texbat3-like") {
        // Phase-locked spoofer: sharp frequency excursion at T=150 s whose
        // integrated phase stays below the phase-test threshold.
        ScenarioConfig cfg = benign_static_config();
        cfg.duration = 500.0;
        cfg.seed = 3;
        cfg.attack.kind = AttackKind::FreqImpulse;
        cfg.attack.start = 150.0;
        cfg.attack.impulse_amplitude = 2.4e-8;
        cfg.attack.impulse_duration = 7.0;
        return cfg;
    }
    throw std::invalid_argument("unknown scenario preset: " + std::string(name));
}

std::vector<std::string> scenario_preset_names() {
    return {"benign-static", "benign-mobile", "texbat2-like", "texbat3-like", "texbat5-like"};
}

}  // namespace clockwatch
