#include "clockwatch/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace clockwatch {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& field, std::size_t line, const char* what) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(std::string("unparsable ") + what + " value '" + field + "'", line);
    }
    return value;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path.string());
    }
    return in;
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ParseError("unknown key '" + key + "' in " + where);
        }
    }
}

NoiseSpec noise_spec_from_json(const json& obj, const std::string& where) {
    reject_unknown_keys(obj, {"q_theta", "q_gamma", "q_drift"}, where);
    NoiseSpec spec;
    spec.q_theta = obj.value("q_theta", 0.0);
    spec.q_gamma = obj.value("q_gamma", 0.0);
    spec.q_drift = obj.value("q_drift", 0.0);
    return spec;
}

json noise_spec_to_json(const NoiseSpec& spec) {
    return json{{"q_theta", spec.q_theta}, {"q_gamma", spec.q_gamma}, {"q_drift", spec.q_drift}};
}

}  // namespace

void save_trace_csv(const TraceSet& traces, const std::filesystem::path& path) {
    traces.validate();
    std::ofstream out = open_out(path);
    out << "epoch_s,gnss_phase_s";
    for (std::size_t i = 0; i < traces.local_clock_count(); ++i) {
        out << ",clock" << i << "_phase_s";
    }
    out << ",attack_truth_s\n";
    for (std::size_t k = 0; k < traces.epoch_count(); ++k) {
        out << format_double(traces.epochs[k]) << ',' << format_double(traces.gnss_phase[k]);
        for (std::size_t i = 0; i < traces.local_clock_count(); ++i) {
            out << ',' << format_double(traces.local_phases[i][k]);
        }
        out << ',' << format_double(traces.attack_truth[k]) << '\n';
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

TraceSet load_trace_csv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t line_no = 0;

    // Header (first non-comment line).
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        header = split_csv(line);
        break;
    }
    if (header.empty()) {
        throw ParseError("trace file has no header: " + path.string());
    }
    if (header.size() < 4) {
        throw ParseError("trace header needs epoch_s, gnss_phase_s, at least one clock column "
                         "and attack_truth_s",
                         line_no);
    }
    if (header.front() != "epoch_s") {
        throw ParseError("missing column 'epoch_s'", line_no);
    }
    if (header[1] != "gnss_phase_s") {
        throw ParseError("missing column 'gnss_phase_s'", line_no);
    }
    if (header.back() != "attack_truth_s") {
        throw ParseError("missing column 'attack_truth_s'", line_no);
    }
    const std::size_t locals = header.size() - 3;
    for (std::size_t i = 0; i < locals; ++i) {
        const std::string expected = "clock" + std::to_string(i) + "_phase_s";
        if (header[2 + i] != expected) {
            throw ParseError("missing column '" + expected + "'", line_no);
        }
    }

    TraceSet traces;
    traces.local_phases.assign(locals, {});
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        const double epoch = parse_double(fields[0], line_no, "epoch");
        if (!traces.epochs.empty() && epoch <= traces.epochs.back()) {
            throw InvalidDataError("epochs must be strictly increasing", line_no);
        }
        traces.epochs.push_back(epoch);
        traces.gnss_phase.push_back(parse_double(fields[1], line_no, "gnss_phase"));
        for (std::size_t i = 0; i < locals; ++i) {
            traces.local_phases[i].push_back(parse_double(fields[2 + i], line_no, "clock_phase"));
        }
        traces.attack_truth.push_back(parse_double(fields.back(), line_no, "attack_truth"));
    }
    if (traces.epochs.empty()) {
        throw ParseError("trace file has no data rows: " + path.string());
    }
    traces.validate();
    return traces;
}

void save_measurement_csv(const std::vector<double>& epochs,
                          const std::vector<Eigen::VectorXd>& measurements,
                          const std::filesystem::path& path) {
    if (epochs.size() != measurements.size()) {
        throw std::invalid_argument("save_measurement_csv: epochs/measurements length mismatch");
    }
    std::ofstream out = open_out(path);
    out << "epoch_s,clock_id,phase_diff_s\n";
    for (std::size_t k = 0; k < epochs.size(); ++k) {
        for (Eigen::Index i = 0; i < measurements[k].size(); ++i) {
            out << format_double(epochs[k]) << ',' << i << ','
                << format_double(measurements[k][i]) << '\n';
        }
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::pair<std::vector<double>, std::vector<Eigen::VectorXd>> load_measurement_csv(
    const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t line_no = 0;

    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        header = split_csv(line);
        break;
    }
    if (header != std::vector<std::string>{"epoch_s", "clock_id", "phase_diff_s"}) {
        throw ParseError("measurement header must be epoch_s,clock_id,phase_diff_s", line_no);
    }

    std::vector<double> epochs;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const std::vector<std::string> fields = split_csv(line);
        if (fields.size() != 3) {
            throw ParseError("expected 3 fields, got " + std::to_string(fields.size()), line_no);
        }
        const double epoch = parse_double(fields[0], line_no, "epoch");
        const double clock_id = parse_double(fields[1], line_no, "clock_id");
        const double diff = parse_double(fields[2], line_no, "phase_diff");
        const auto id = static_cast<std::size_t>(clock_id);
        if (epochs.empty() || epoch != epochs.back()) {
            if (!epochs.empty() && epoch < epochs.back()) {
                throw InvalidDataError("epochs must be non-decreasing", line_no);
            }
            epochs.push_back(epoch);
            rows.emplace_back();
        }
        if (id != rows.back().size()) {
            throw InvalidDataError("clock_id must enumerate 0..N-1 within an epoch", line_no);
        }
        rows.back().push_back(diff);
    }
    if (epochs.empty()) {
        throw ParseError("measurement file has no data rows: " + path.string());
    }
    std::vector<Eigen::VectorXd> measurements;
    measurements.reserve(rows.size());
    const std::size_t width = rows.front().size();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].size() != width) {
            throw InvalidDataError("inconsistent clock count across epochs");
        }
        measurements.push_back(Eigen::Map<const Eigen::VectorXd>(
            rows[k].data(), static_cast<Eigen::Index>(rows[k].size())));
    }
    return {std::move(epochs), std::move(measurements)};
}

std::string scenario_config_to_json(const ScenarioConfig& config) {
    json j;
    j["duration_s"] = config.duration;
    j["tau_s"] = config.tau;
    j["seed"] = config.seed;
    j["quantization_s"] = config.quantization;
    j["local_clocks"] = json::array();
    for (const auto& spec : config.local_clocks) {
        j["local_clocks"].push_back(noise_spec_to_json(spec));
    }
    j["gnss"] = json{{"benign_phase_sigma_s", config.gnss.benign_phase_sigma},
                     {"steering_gain_per_s", config.gnss.steering_gain},
                     {"random_walk_sigma_s", config.gnss.random_walk_sigma}};
    json attack;
    attack["kind"] = to_string(config.attack.kind);
    attack["start_s"] = config.attack.start;
    switch (config.attack.kind) {
        case AttackKind::Ramp:
            attack["target_offset_s"] = config.attack.target_offset;
            attack["pull_rate_s_per_s"] = config.attack.pull_rate;
            break;
        case AttackKind::Step:
            attack["target_offset_s"] = config.attack.target_offset;
            break;
        case AttackKind::FreqImpulse:
            attack["impulse_amplitude_ss"] = config.attack.impulse_amplitude;
            attack["impulse_duration_s"] = config.attack.impulse_duration;
            break;
        case AttackKind::None:
            break;
    }
    j["attack"] = attack;
    json filter;
    filter["gnss_clock"] = noise_spec_to_json(config.filter.gnss_clock);
    if (config.filter.r_diag) {
        filter["r_diag_s2"] = *config.filter.r_diag;
    }
    j["filter"] = filter;
    return j.dump(2) + "\n";
}

ScenarioConfig scenario_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ParseError("config must be a JSON object");
    }
    reject_unknown_keys(j, {"duration_s", "tau_s", "seed", "quantization_s", "local_clocks",
                            "gnss", "attack", "filter"},
                        "config");

    ScenarioConfig config;
    config.duration = j.value("duration_s", config.duration);
    config.tau = j.value("tau_s", config.tau);
    config.seed = j.value("seed", config.seed);
    config.quantization = j.value("quantization_s", config.quantization);

    if (!j.contains("local_clocks") || !j["local_clocks"].is_array() || j["local_clocks"].empty()) {
        throw ParseError("config requires a non-empty 'local_clocks' array");
    }
    config.local_clocks.clear();
    for (const auto& spec : j["local_clocks"]) {
        config.local_clocks.push_back(noise_spec_from_json(spec, "local_clocks entry"));
    }

    if (j.contains("gnss")) {
        const json& g = j["gnss"];
        reject_unknown_keys(g, {"benign_phase_sigma_s", "steering_gain_per_s", "random_walk_sigma_s"},
                            "gnss");
        config.gnss.benign_phase_sigma = g.value("benign_phase_sigma_s", config.gnss.benign_phase_sigma);
        config.gnss.steering_gain = g.value("steering_gain_per_s", config.gnss.steering_gain);
        config.gnss.random_walk_sigma = g.value("random_walk_sigma_s", config.gnss.random_walk_sigma);
    }

    if (j.contains("attack")) {
        const json& a = j["attack"];
        reject_unknown_keys(a, {"kind", "start_s", "target_offset_s", "pull_rate_s_per_s",
                                "impulse_amplitude_ss", "impulse_duration_s"},
                            "attack");
        config.attack.kind = attack_kind_from_string(a.value("kind", "none"));
        config.attack.start = a.value("start_s", 0.0);
        config.attack.target_offset = a.value("target_offset_s", 0.0);
        config.attack.pull_rate = a.value("pull_rate_s_per_s", 0.0);
        config.attack.impulse_amplitude = a.value("impulse_amplitude_ss", 0.0);
        config.attack.impulse_duration = a.value("impulse_duration_s", 0.0);
    }

    if (j.contains("filter")) {
        const json& f = j["filter"];
        reject_unknown_keys(f, {"gnss_clock", "r_diag_s2"}, "filter");
        if (f.contains("gnss_clock")) {
            config.filter.gnss_clock = noise_spec_from_json(f["gnss_clock"], "filter.gnss_clock");
        }
        if (f.contains("r_diag_s2")) {
            config.filter.r_diag = f["r_diag_s2"].get<double>();
        }
    } else {
        config.filter.gnss_clock = default_gnss_filter_spec();
    }

    config.validate();
    return config;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return scenario_config_from_json(buf.str());
}

void save_scenario_config(const ScenarioConfig& config, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << scenario_config_to_json(config);
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

}  // namespace clockwatch
