#pragma once

// File formats:
//  - trace CSV:        epoch_s,gnss_phase_s,clock<i>_phase_s...,attack_truth_s
//  - measurement CSV:  epoch_s,clock_id,phase_diff_s (long format, real logs)
//  - scenario config:  JSON with the ScenarioConfig fields; unknown keys rejected
// Numeric fields are written with 17 significant digits so a save/load round
// trip reproduces every double exactly. Comment lines start with '#'.

#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "clockwatch/errors.hpp"
#include "clockwatch/scenario.hpp"

namespace clockwatch {

void save_trace_csv(const TraceSet& traces, const std::filesystem::path& path);
TraceSet load_trace_csv(const std::filesystem::path& path);

void save_measurement_csv(const std::vector<double>& epochs,
                          const std::vector<Eigen::VectorXd>& measurements,
                          const std::filesystem::path& path);
std::pair<std::vector<double>, std::vector<Eigen::VectorXd>> load_measurement_csv(
    const std::filesystem::path& path);

ScenarioConfig load_scenario_config(const std::filesystem::path& path);
void save_scenario_config(const ScenarioConfig& config, const std::filesystem::path& path);

/// Canonical JSON text of a config (also what save_scenario_config writes).
std::string scenario_config_to_json(const ScenarioConfig& config);
ScenarioConfig scenario_config_from_json(const std::string& text);

}  // namespace clockwatch
