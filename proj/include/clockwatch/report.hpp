#pragma once

// Structured outputs of the command-line front end: run reports, per-epoch
// detection series for plotting, calibration files and stability reports.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clockwatch/detector.hpp"
#include "clockwatch/stability.hpp"

namespace clockwatch {

inline constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a hash of a config's canonical text, recorded for provenance.
std::string config_hash_hex(const std::string& bytes);

struct RunReport {
    std::string scenario_summary;
    std::string config_hash;
    std::uint64_t seed = 0;
    CalibrationResult calibration;
    std::size_t warmup_epochs = 0;
    RunMetrics metrics;
    std::size_t phase_alarm_count = 0;
    std::size_t freq_alarm_count = 0;
    std::vector<std::string> emitted_files;
};

std::string run_report_to_json(const RunReport& report);
void write_run_report(const RunReport& report, const std::filesystem::path& path);

/// Per-epoch estimates, thresholds and verdicts; the plot-ready companion of
/// a run report.
void write_detection_series_csv(const DetectionSeries& series, const CalibrationResult& cal,
                                const std::filesystem::path& path);

void write_calibration(const CalibrationResult& cal, std::size_t clock_count,
                       const std::filesystem::path& path);
/// Returns the calibration and the clock count it was computed with.
std::pair<CalibrationResult, std::size_t> load_calibration(const std::filesystem::path& path);

/// Stability characterization of one trace column.
struct StabilitySection {
    std::string clock_name;
    std::vector<StabilityPoint> hadamard;
    std::vector<StabilityPoint> allan;
    NoiseFit fit;
};

std::string stability_report_to_json(const std::vector<StabilitySection>& sections);
void write_stability_report(const std::vector<StabilitySection>& sections,
                            const std::filesystem::path& json_path,
                            const std::filesystem::path& csv_path);

}  // namespace clockwatch
