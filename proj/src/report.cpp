#include "clockwatch/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clockwatch/errors.hpp"

namespace clockwatch {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    return out;
}

json metrics_to_json(const RunMetrics& m) {
    json j;
    j["first_alarm_epoch_s"] = m.first_alarm_epoch ? json(*m.first_alarm_epoch) : json();
    j["detection_latency_s"] = m.detection_latency ? json(*m.detection_latency) : json();
    j["offset_at_detection_s"] = m.offset_at_detection ? json(*m.offset_at_detection) : json();
    j["false_positive_count"] = m.false_positive_count;
    return j;
}

json calibration_to_json(const CalibrationResult& cal) {
    return json{{"sigma_theta_s", cal.sigma_theta},
                {"sigma_gamma_ss", cal.sigma_gamma},
                {"multiplier", cal.multiplier}};
}

}  // namespace

std::string config_hash_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string run_report_to_json(const RunReport& report) {
    json j;
    j["tool_version"] = kToolVersion;
    j["scenario"] = report.scenario_summary;
    j["config_hash"] = report.config_hash;
    j["seed"] = report.seed;
    j["calibration"] = calibration_to_json(report.calibration);
    j["warmup_epochs"] = report.warmup_epochs;
    j["metrics"] = metrics_to_json(report.metrics);
    j["phase_alarm_count"] = report.phase_alarm_count;
    j["freq_alarm_count"] = report.freq_alarm_count;
    j["files"] = report.emitted_files;
    return j.dump(2) + "\n";
}

void write_run_report(const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << run_report_to_json(report);
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

void write_detection_series_csv(const DetectionSeries& series, const CalibrationResult& cal,
                                const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "epoch_s,theta_hat_s,gamma_hat_ss,theta_threshold_s,gamma_threshold_ss,"
           "phase_alarm,freq_alarm,classification\n";
    char buf[160];
    for (std::size_t k = 0; k < series.epochs.size(); ++k) {
        const DetectionVerdict* v = k < series.verdicts.size() ? &series.verdicts[k] : nullptr;
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%s\n",
                      series.epochs[k], series.theta_hat[k], series.gamma_hat[k],
                      cal.theta_threshold(), cal.gamma_threshold(),
                      v && v->phase_alarm ? 1 : 0, v && v->freq_alarm ? 1 : 0,
                      v ? to_string(v->classification).c_str() : "Nominal");
        out << buf;
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

void write_calibration(const CalibrationResult& cal, std::size_t clock_count,
                       const std::filesystem::path& path) {
    json j = calibration_to_json(cal);
    j["clock_count"] = clock_count;
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::pair<CalibrationResult, std::size_t> load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("calibration file is not valid JSON: " + std::string(e.what()));
    }
    CalibrationResult cal;
    try {
        cal.sigma_theta = j.at("sigma_theta_s").get<double>();
        cal.sigma_gamma = j.at("sigma_gamma_ss").get<double>();
        cal.multiplier = j.value("multiplier", 6.0);
    } catch (const json::exception& e) {
        throw ParseError("calibration file missing required field: " + std::string(e.what()));
    }
    const std::size_t clocks = j.value("clock_count", std::size_t{0});
    return {cal, clocks};
}

std::string stability_report_to_json(const std::vector<StabilitySection>& sections) {
    json arr = json::array();
    for (const auto& s : sections) {
        json points = json::array();
        for (std::size_t i = 0; i < s.hadamard.size(); ++i) {
            json p;
            p["tau_s"] = s.hadamard[i].tau;
            p["hadamard_var"] = s.hadamard[i].var;
            p["num_terms"] = s.hadamard[i].num_terms;
            if (i < s.allan.size()) {
                p["allan_var"] = s.allan[i].var;
            }
            points.push_back(p);
        }
        json sec;
        sec["clock"] = s.clock_name;
        sec["points"] = points;
        sec["fitted_spec"] = json{{"q_theta", s.fit.spec.q_theta},
                                  {"q_gamma", s.fit.spec.q_gamma},
                                  {"q_drift", s.fit.spec.q_drift}};
        sec["fit_residual"] = s.fit.residual;
        arr.push_back(sec);
    }
    json j;
    j["tool_version"] = kToolVersion;
    j["sections"] = arr;
    return j.dump(2) + "\n";
}

void write_stability_report(const std::vector<StabilitySection>& sections,
                            const std::filesystem::path& json_path,
                            const std::filesystem::path& csv_path) {
    {
        std::ofstream out = open_out(json_path);
        out << stability_report_to_json(sections);
        if (!out) {
            throw std::runtime_error("write failed: " + json_path.string());
        }
    }
    std::ofstream out = open_out(csv_path);
    out << "clock,tau_s,hadamard_var,allan_var,num_terms\n";
    char buf[160];
    for (const auto& s : sections) {
        for (std::size_t i = 0; i < s.hadamard.size(); ++i) {
            const double avar = i < s.allan.size() ? s.allan[i].var : 0.0;
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%zu\n", s.clock_name.c_str(),
                          s.hadamard[i].tau, s.hadamard[i].var, avar, s.hadamard[i].num_terms);
            out << buf;
        }
    }
    if (!out) {
        throw std::runtime_error("write failed: " + csv_path.string());
    }
}

}  // namespace clockwatch
