// Command-line front end: simulate scenarios, characterize clock stability,
// run the ensemble detector over traces, and drive seed batches.
//
// Exit codes: 0 success, 2 usage/config error, 3 I/O error, 4 numerical error.

#include <fnmatch.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "clockwatch/detector.hpp"
#include "clockwatch/errors.hpp"
#include "clockwatch/report.hpp"
#include "clockwatch/scenario.hpp"
#include "clockwatch/stability.hpp"
#include "clockwatch/trace_io.hpp"

namespace fs = std::filesystem;
using namespace clockwatch;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path default_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("CLOCKWATCH_OUT"); env && *env) return env;
    return ".";
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

// Scenario source: a config file or a named preset, with optional overrides.
struct ScenarioSource {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;

    bool configured() const { return !config_path.empty() || !preset.empty(); }

    ScenarioConfig load() const {
        ScenarioConfig cfg;
        if (!config_path.empty()) {
            if (!fs::exists(config_path)) {
                throw UsageError("config file not found: " + config_path);
            }
            try {
                cfg = load_scenario_config(config_path);
            } catch (const ParseError& e) {
                throw UsageError("bad config " + config_path + ": " + e.what());
            } catch (const std::invalid_argument& e) {
                throw UsageError("bad config " + config_path + ": " + e.what());
            }
        } else {
            cfg = scenario_preset(preset);
        }
        if (seed) cfg.seed = *seed;
        return cfg;
    }

    std::string summary() const {
        return !config_path.empty() ? config_path : ("preset:" + preset);
    }
};

TraceSet load_trace_or_die(const fs::path& path) {
    if (!fs::exists(path)) {
        throw IoError("trace file not found: " + path.string());
    }
    try {
        return load_trace_csv(path);
    } catch (const ParseError& e) {
        throw IoError("bad trace " + path.string() + ": " + e.what());
    } catch (const InvalidDataError& e) {
        throw IoError("bad trace " + path.string() + ": " + e.what());
    }
}

std::optional<double> attack_start_from_truth(const TraceSet& traces) {
    for (std::size_t k = 0; k < traces.epoch_count(); ++k) {
        if (traces.attack_truth[k] != 0.0) {
            return traces.epochs[k];
        }
    }
    return std::nullopt;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
    ScenarioSource source;
    std::string out;
};

int cmd_simulate(const SimulateArgs& args) {
    const ScenarioConfig cfg = args.source.load();
    const fs::path out = default_out_dir(args.out);
    ensure_dir(out);

    const TraceSet traces = simulate(cfg);
    const fs::path trace_path = out / "trace.csv";
    const fs::path config_path = out / "config_resolved.json";
    try {
        save_trace_csv(traces, trace_path);
        save_scenario_config(cfg, config_path);
    } catch (const std::runtime_error& e) {
        throw IoError(e.what());
    }
    std::cout << "scenario " << args.source.summary() << " seed " << cfg.seed << ": "
              << traces.epoch_count() << " epochs, " << traces.local_clock_count()
              << " local clocks\n"
              << "wrote " << trace_path.string() << "\n"
              << "wrote " << config_path.string() << "\n";
    return 0;
}

// --- characterize -----------------------------------------------------------

struct CharacterizeArgs {
    std::string trace;
    std::string out;
};

int cmd_characterize(const CharacterizeArgs& args) {
    const TraceSet traces = load_trace_or_die(args.trace);
    if (traces.epoch_count() < 1000) {
        throw UsageError("characterize needs at least 1000 epochs, trace has " +
                         std::to_string(traces.epoch_count()));
    }
    const fs::path out = default_out_dir(args.out);
    ensure_dir(out);

    const double tau0 = traces.epochs[1] - traces.epochs[0];
    std::vector<StabilitySection> sections;
    auto characterize_column = [&](const std::string& name, const std::vector<double>& phase) {
        StabilitySection sec;
        sec.clock_name = name;
        const FrequencySeries y = phase_to_frequency(phase, tau0);
        for (std::size_t m : octave_factors(y.values.size())) {
            sec.hadamard.push_back(hadamard_variance(y, m));
            sec.allan.push_back(allan_variance(y, m));
        }
        sec.fit = fit_noise_coefficients(sec.hadamard);
        sections.push_back(std::move(sec));
    };
    characterize_column("gnss", traces.gnss_phase);
    for (std::size_t i = 0; i < traces.local_clock_count(); ++i) {
        characterize_column("clock" + std::to_string(i), traces.local_phases[i]);
    }

    const fs::path json_path = out / "stability_report.json";
    const fs::path csv_path = out / "stability_points.csv";
    try {
        write_stability_report(sections, json_path, csv_path);
    } catch (const std::runtime_error& e) {
        throw IoError(e.what());
    }
    std::cout << "characterized " << sections.size() << " clocks over "
              << traces.epoch_count() << " epochs\n"
              << "wrote " << json_path.string() << "\n"
              << "wrote " << csv_path.string() << "\n";
    return 0;
}

// --- detect -----------------------------------------------------------------

struct DetectArgs {
    std::string trace;
    std::string measurements;
    std::string calibration;
    std::string benign_trace;
    ScenarioSource source;
    double multiplier = 0.0;  // 0 = use calibration file / default 6
    std::string out;
};

int cmd_detect(const DetectArgs& args) {
    const fs::path out = default_out_dir(args.out);
    ensure_dir(out);

    // Input stream: either a truth trace or a measurement log.
    TraceSet traces;
    std::vector<double> epochs;
    std::vector<Eigen::VectorXd> z;
    const bool have_trace = !args.trace.empty();
    std::optional<ScenarioConfig> cfg;
    if (args.source.configured()) cfg = args.source.load();

    std::size_t local_clocks = 0;
    if (have_trace) {
        traces = load_trace_or_die(args.trace);
        local_clocks = traces.local_clock_count();
    } else {
        if (!fs::exists(args.measurements)) {
            throw IoError("measurement file not found: " + args.measurements);
        }
        try {
            std::tie(epochs, z) = load_measurement_csv(args.measurements);
        } catch (const ParseError& e) {
            throw IoError("bad measurements " + args.measurements + ": " + e.what());
        } catch (const InvalidDataError& e) {
            throw IoError("bad measurements " + args.measurements + ": " + e.what());
        }
        local_clocks = static_cast<std::size_t>(z.front().size());
    }

    const FilterModel model = cfg ? filter_model_for(*cfg) : default_filter_model(local_clocks);
    if (model.clock_count() != local_clocks + 1) {
        throw UsageError("trace/config mismatch: trace has " + std::to_string(local_clocks) +
                         " local clocks, config expects " +
                         std::to_string(model.clock_count() - 1));
    }
    const double quantization = cfg ? cfg->quantization : 5e-9;

    // Calibration: from file or from a benign reference trace.
    CalibrationResult cal;
    std::size_t cal_clocks = 0;
    if (!args.calibration.empty()) {
        if (!fs::exists(args.calibration)) {
            throw IoError("calibration file not found: " + args.calibration);
        }
        try {
            std::tie(cal, cal_clocks) = load_calibration(args.calibration);
        } catch (const ParseError& e) {
            throw IoError("bad calibration " + args.calibration + ": " + e.what());
        }
        if (cal_clocks != 0 && cal_clocks != local_clocks + 1) {
            throw UsageError("trace/calibration mismatch in clock count: calibration was made "
                             "with " +
                             std::to_string(cal_clocks) + " clocks, trace has " +
                             std::to_string(local_clocks + 1));
        }
    } else {
        const TraceSet benign = load_trace_or_die(args.benign_trace);
        if (benign.local_clock_count() != local_clocks) {
            throw UsageError("trace/benign-trace mismatch in clock count");
        }
        cal = calibrate_from_trace(benign, model, quantization);
    }
    if (args.multiplier > 0.0) cal.multiplier = args.multiplier;

    const DetectorOptions options;
    DetectionSeries series;
    std::optional<double> attack_start;
    std::vector<double> attack_truth;
    if (have_trace) {
        series = run_detection(traces, model, quantization, cal, options);
        attack_start = attack_start_from_truth(traces);
        attack_truth = traces.attack_truth;
    } else {
        series = run_detection(epochs, z, model, cal, options);
        attack_truth.assign(epochs.size(), 0.0);
        if (cfg && cfg->attack.kind != AttackKind::None) {
            attack_start = cfg->attack.start;
            for (std::size_t k = 0; k < epochs.size(); ++k) {
                attack_truth[k] = attack_offset(cfg->attack, epochs[k]);
            }
        }
    }
    const RunMetrics metrics = evaluate_run(series.verdicts, attack_truth, attack_start);

    RunReport report;
    report.scenario_summary = have_trace ? args.trace : args.measurements;
    if (cfg) {
        report.config_hash = config_hash_hex(scenario_config_to_json(*cfg));
        report.seed = cfg->seed;
    }
    report.calibration = cal;
    report.warmup_epochs = options.warmup_epochs;
    report.metrics = metrics;
    for (const auto& v : series.verdicts) {
        report.phase_alarm_count += v.phase_alarm ? 1 : 0;
        report.freq_alarm_count += v.freq_alarm ? 1 : 0;
    }

    const fs::path series_path = out / "series.csv";
    const fs::path report_path = out / "report.json";
    const fs::path cal_path = out / "calibration.json";
    try {
        write_detection_series_csv(series, cal, series_path);
        report.emitted_files = {series_path.string(), cal_path.string()};
        write_run_report(report, report_path);
        write_calibration(cal, local_clocks + 1, cal_path);
    } catch (const std::runtime_error& e) {
        throw IoError(e.what());
    }

    std::cout << "detection over " << series.epochs.size() << " epochs";
    if (metrics.first_alarm_epoch) {
        std::cout << ": first alarm at " << *metrics.first_alarm_epoch << " s";
        if (metrics.detection_latency) std::cout << " (latency " << *metrics.detection_latency << " s)";
    } else {
        std::cout << ": no alarms";
    }
    std::cout << "\nwrote " << report_path.string() << "\nwrote " << series_path.string() << "\n";
    return 0;
}

// --- batch ------------------------------------------------------------------

struct BatchArgs {
    std::string config_glob;
    std::vector<std::string> presets;
    std::string seeds = "1-20";
    double multiplier = 0.0;
    std::string out;
    unsigned jobs = 0;
};

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto dash = tok.find('-');
        if (dash != std::string::npos && dash > 0) {
            const std::uint64_t a = std::stoull(tok.substr(0, dash));
            const std::uint64_t b = std::stoull(tok.substr(dash + 1));
            if (b < a) throw UsageError("bad seed range: " + tok);
            for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
        } else if (!tok.empty()) {
            seeds.push_back(std::stoull(tok));
        }
    }
    if (seeds.empty()) throw UsageError("no seeds given");
    return seeds;
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
    const fs::path p(pattern);
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    const std::string name = p.filename().string();
    std::vector<fs::path> matches;
    if (!fs::is_directory(dir)) return matches;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (::fnmatch(name.c_str(), entry.path().filename().string().c_str(), 0) == 0) {
            matches.push_back(entry.path());
        }
    }
    std::sort(matches.begin(), matches.end());
    return matches;
}

struct BatchRow {
    std::string scenario;
    std::uint64_t seed = 0;
    RunMetrics metrics;
    std::size_t phase_alarms = 0;
    bool failed = false;
    std::string error;
};

int cmd_batch(const BatchArgs& args) {
    std::vector<std::pair<std::string, ScenarioConfig>> scenarios;
    if (!args.config_glob.empty()) {
        const std::vector<fs::path> files = expand_glob(args.config_glob);
        if (files.empty()) {
            throw UsageError("config glob matched no files: " + args.config_glob);
        }
        for (const auto& f : files) {
            ScenarioSource src;
            src.config_path = f.string();
            scenarios.emplace_back(f.string(), src.load());
        }
    }
    for (const auto& name : args.presets) {
        scenarios.emplace_back("preset:" + name, scenario_preset(name));
    }
    if (scenarios.empty()) {
        throw UsageError("batch needs --configs or --preset");
    }
    const std::vector<std::uint64_t> seeds = parse_seeds(args.seeds);

    const fs::path out = default_out_dir(args.out);
    ensure_dir(out);

    // One calibration per scenario, from its benign twin on a fixed seed.
    std::vector<CalibrationResult> cals(scenarios.size());
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        ScenarioConfig benign = scenarios[i].second;
        benign.attack = AttackProfile{};
        benign.seed = scenarios[i].second.seed + 1000003;
        benign.duration = std::max(benign.duration, 2000.0);
        cals[i] = calibrate_from_trace(simulate(benign), filter_model_for(benign),
                                       benign.quantization);
        if (args.multiplier > 0.0) cals[i].multiplier = args.multiplier;
    }

    std::vector<BatchRow> rows(scenarios.size() * seeds.size());
    std::atomic<std::size_t> next{0};
    const unsigned jobs = args.jobs ? args.jobs
                                    : std::max(1u, std::thread::hardware_concurrency());
    auto worker = [&]() {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= rows.size()) break;
            const std::size_t si = idx / seeds.size();
            const std::uint64_t seed = seeds[idx % seeds.size()];
            BatchRow& row = rows[idx];
            row.scenario = scenarios[si].first;
            row.seed = seed;
            try {
                ScenarioConfig cfg = scenarios[si].second;
                cfg.seed = seed;
                const TraceSet traces = simulate(cfg);
                const DetectionSeries det = run_detection(
                    traces, filter_model_for(cfg), cfg.quantization, cals[si]);
                const std::optional<double> start =
                    cfg.attack.kind == AttackKind::None
                        ? std::nullopt
                        : std::optional<double>(cfg.attack.start);
                row.metrics = evaluate_run(det.verdicts, traces.attack_truth, start);
                for (const auto& v : det.verdicts) row.phase_alarms += v.phase_alarm ? 1 : 0;
            } catch (const std::exception& e) {
                row.failed = true;
                row.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    // Per-run table plus median / interquartile summary per scenario.
    const fs::path table_path = out / "batch_metrics.csv";
    std::ofstream table(table_path);
    if (!table) throw IoError("cannot open for writing: " + table_path.string());
    table << "scenario,seed,status,first_alarm_epoch_s,detection_latency_s,"
             "offset_at_detection_s,false_positive_count,phase_alarm_count\n";
    for (const auto& row : rows) {
        table << row.scenario << ',' << row.seed << ',' << (row.failed ? "failed" : "ok") << ',';
        auto emit = [&table](const std::optional<double>& v) {
            if (v) table << *v;
            table << ',';
        };
        emit(row.metrics.first_alarm_epoch);
        emit(row.metrics.detection_latency);
        emit(row.metrics.offset_at_detection);
        table << row.metrics.false_positive_count << ',' << row.phase_alarms << '\n';
    }

    auto quantiles = [](std::vector<double> v) -> std::array<double, 3> {
        std::sort(v.begin(), v.end());
        auto q = [&v](double f) {
            const double pos = f * static_cast<double>(v.size() - 1);
            const std::size_t lo = static_cast<std::size_t>(pos);
            const std::size_t hi = std::min(lo + 1, v.size() - 1);
            return v[lo] + (pos - lo) * (v[hi] - v[lo]);
        };
        return {q(0.25), q(0.5), q(0.75)};
    };

    bool any_failed = false;
    for (std::size_t si = 0; si < scenarios.size(); ++si) {
        std::vector<double> lat, off;
        std::size_t fp = 0, failures = 0;
        for (std::size_t k = 0; k < seeds.size(); ++k) {
            const BatchRow& row = rows[si * seeds.size() + k];
            if (row.failed) {
                ++failures;
                continue;
            }
            if (row.metrics.detection_latency) lat.push_back(*row.metrics.detection_latency);
            if (row.metrics.offset_at_detection) off.push_back(*row.metrics.offset_at_detection);
            fp += row.metrics.false_positive_count;
        }
        any_failed = any_failed || failures > 0;
        std::ostringstream line;
        line << "# " << scenarios[si].first << ": runs=" << seeds.size()
             << " failures=" << failures << " false_positives=" << fp;
        if (!lat.empty()) {
            const auto lq = quantiles(lat);
            line << " latency_s[q25,med,q75]=[" << lq[0] << ',' << lq[1] << ',' << lq[2] << ']';
        }
        if (!off.empty()) {
            const auto oq = quantiles(off);
            line << " offset_s[q25,med,q75]=[" << oq[0] << ',' << oq[1] << ',' << oq[2] << ']';
        }
        table << line.str() << '\n';
        std::cout << line.str() << '\n';
    }
    if (!table) throw IoError("write failed: " + table_path.string());
    table.close();
    std::cout << "wrote " << table_path.string() << "\n";
    return any_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clock-ensemble simulation and GNSS time-attack detection"};
    app.set_version_flag("--version", std::string("clockwatch ") + kToolVersion);
    app.require_subcommand(1);

    SimulateArgs sim;
    CLI::App* simulate_cmd = app.add_subcommand("simulate", "generate a scenario trace");
    simulate_cmd->add_option("--config", sim.source.config_path, "scenario config JSON");
    simulate_cmd->add_option("--preset", sim.source.preset, "named scenario preset");
    std::uint64_t sim_seed = 0;
    CLI::Option* sim_seed_opt = simulate_cmd->add_option("--seed", sim_seed, "seed override");
    simulate_cmd->add_option("--out", sim.out, "output directory");

    CharacterizeArgs chr;
    CLI::App* characterize_cmd =
        app.add_subcommand("characterize", "stability analysis of a trace");
    characterize_cmd->add_option("--trace", chr.trace, "trace CSV")->required();
    characterize_cmd->add_option("--out", chr.out, "output directory");

    DetectArgs det;
    CLI::App* detect_cmd = app.add_subcommand("detect", "run the ensemble detector");
    detect_cmd->add_option("--trace", det.trace, "truth trace CSV");
    detect_cmd->add_option("--measurements", det.measurements, "measurement CSV (real logs)");
    detect_cmd->add_option("--calibration", det.calibration, "calibration JSON");
    detect_cmd->add_option("--benign-trace", det.benign_trace, "benign trace to calibrate on");
    detect_cmd->add_option("--config", det.source.config_path, "scenario config JSON");
    detect_cmd->add_option("--preset", det.source.preset, "named scenario preset");
    detect_cmd->add_option("--multiplier", det.multiplier, "threshold multiplier override");
    detect_cmd->add_option("--out", det.out, "output directory");

    BatchArgs bat;
    CLI::App* batch_cmd = app.add_subcommand("batch", "simulate+detect over configs x seeds");
    batch_cmd->add_option("--configs", bat.config_glob, "config file glob");
    batch_cmd->add_option("--preset", bat.presets, "named presets (repeatable)");
    batch_cmd->add_option("--seeds", bat.seeds, "seed list/range, e.g. 1-20 or 3,5,9");
    batch_cmd->add_option("--multiplier", bat.multiplier, "threshold multiplier override");
    batch_cmd->add_option("--out", bat.out, "output directory");
    batch_cmd->add_option("--jobs", bat.jobs, "parallel runs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (simulate_cmd->parsed()) {
            if (!sim.source.configured()) {
                throw UsageError("simulate needs --config or --preset");
            }
            if (sim_seed_opt->count() > 0) sim.source.seed = sim_seed;
            return cmd_simulate(sim);
        }
        if (characterize_cmd->parsed()) {
            return cmd_characterize(chr);
        }
        if (detect_cmd->parsed()) {
            if (det.trace.empty() == det.measurements.empty()) {
                throw UsageError("detect needs exactly one of --trace or --measurements");
            }
            if (det.calibration.empty() && det.benign_trace.empty()) {
                throw UsageError("detect needs --calibration or --benign-trace");
            }
            return cmd_detect(det);
        }
        if (batch_cmd->parsed()) {
            return cmd_batch(bat);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
