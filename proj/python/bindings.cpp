// Python bindings for the main operations: clock-model blocks, stability
// statistics, scenario simulation and the ensemble detector. Structured
// inputs and outputs cross the boundary as JSON strings or plain dicts so the
// python side stays free of bespoke wrapper types.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "clockwatch/clock_model.hpp"
#include "clockwatch/detector.hpp"
#include "clockwatch/report.hpp"
#include "clockwatch/scenario.hpp"
#include "clockwatch/stability.hpp"
#include "clockwatch/trace_io.hpp"

namespace py = pybind11;
using namespace clockwatch;

namespace {

py::array_t<double> matrix_to_numpy(const Eigen::Matrix3d& m) {
    py::array_t<double> out({3, 3});
    auto buf = out.mutable_unchecked<2>();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) buf(i, j) = m(i, j);
    }
    return out;
}

py::array_t<double> vector_to_numpy(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

FrequencySeries series_from_numpy(const py::array_t<double>& values, double tau0) {
    FrequencySeries y;
    y.tau0 = tau0;
    const auto buf = values.unchecked<1>();
    y.values.resize(static_cast<std::size_t>(buf.shape(0)));
    for (py::ssize_t i = 0; i < buf.shape(0); ++i) {
        y.values[static_cast<std::size_t>(i)] = buf(i);
    }
    return y;
}

py::dict trace_to_dict(const TraceSet& traces) {
    py::dict out;
    out["epochs"] = vector_to_numpy(traces.epochs);
    out["gnss_phase"] = vector_to_numpy(traces.gnss_phase);
    out["attack_truth"] = vector_to_numpy(traces.attack_truth);
    py::list locals_list;
    for (const auto& col : traces.local_phases) {
        locals_list.append(vector_to_numpy(col));
    }
    out["local_phases"] = locals_list;
    return out;
}

py::dict metrics_to_dict(const RunMetrics& m) {
    py::dict out;
    out["first_alarm_epoch_s"] = m.first_alarm_epoch ? py::object(py::float_(*m.first_alarm_epoch))
                                                     : py::object(py::none());
    out["detection_latency_s"] = m.detection_latency ? py::object(py::float_(*m.detection_latency))
                                                     : py::object(py::none());
    out["offset_at_detection_s"] = m.offset_at_detection
                                       ? py::object(py::float_(*m.offset_at_detection))
                                       : py::object(py::none());
    out["false_positive_count"] = m.false_positive_count;
    return out;
}

py::dict simulate_from_json(const std::string& config_json) {
    const ScenarioConfig cfg = scenario_config_from_json(config_json);
    return trace_to_dict(simulate(cfg));
}

py::dict detection_from_json(const std::string& config_json, const std::string& benign_json,
                             double multiplier) {
    const ScenarioConfig cfg = scenario_config_from_json(config_json);
    const ScenarioConfig benign = scenario_config_from_json(benign_json);

    const FilterModel model = filter_model_for(cfg);
    CalibrationResult cal =
        calibrate_from_trace(simulate(benign), filter_model_for(benign), benign.quantization);
    cal.multiplier = multiplier;

    const TraceSet traces = simulate(cfg);
    const DetectionSeries det = run_detection(traces, model, cfg.quantization, cal);
    const std::optional<double> start = cfg.attack.kind == AttackKind::None
                                            ? std::nullopt
                                            : std::optional<double>(cfg.attack.start);
    const RunMetrics metrics = evaluate_run(det.verdicts, traces.attack_truth, start);

    py::dict out;
    out["epochs"] = vector_to_numpy(det.epochs);
    out["theta_hat"] = vector_to_numpy(det.theta_hat);
    out["gamma_hat"] = vector_to_numpy(det.gamma_hat);
    out["nis"] = vector_to_numpy(det.nis);
    std::vector<bool> phase, freq;
    py::list classes;
    for (const auto& v : det.verdicts) {
        phase.push_back(v.phase_alarm);
        freq.push_back(v.freq_alarm);
        classes.append(to_string(v.classification));
    }
    out["phase_alarm"] = py::cast(phase);
    out["freq_alarm"] = py::cast(freq);
    out["classification"] = classes;
    out["metrics"] = metrics_to_dict(metrics);
    py::dict cal_dict;
    cal_dict["sigma_theta_s"] = cal.sigma_theta;
    cal_dict["sigma_gamma_ss"] = cal.sigma_gamma;
    cal_dict["multiplier"] = cal.multiplier;
    out["calibration"] = cal_dict;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "clock-ensemble simulation and GNSS time-attack detection";
    m.attr("__version__") = kToolVersion;

    m.def("transition_block", [](double tau) { return matrix_to_numpy(transition_block(tau)); },
          py::arg("tau"), "3x3 state-transition block for one clock over tau seconds");

    m.def("process_noise_block",
          [](double q_theta, double q_gamma, double q_drift, double tau) {
              return matrix_to_numpy(process_noise_block({q_theta, q_gamma, q_drift}, tau));
          },
          py::arg("q_theta"), py::arg("q_gamma"), py::arg("q_drift"), py::arg("tau"),
          "integrated process-noise covariance over tau seconds");

    m.def("deterministic_phase", &deterministic_phase, py::arg("theta0"), py::arg("gamma"),
          py::arg("drift"), py::arg("t"), "theta0 + gamma*t + drift*t^2/2");

    m.def("phase_to_frequency",
          [](const py::array_t<double>& phase, double tau0) {
              std::vector<double> p(phase.data(), phase.data() + phase.size());
              return vector_to_numpy(phase_to_frequency(p, tau0).values);
          },
          py::arg("phase"), py::arg("tau0"));

    m.def("hadamard_variance",
          [](const py::array_t<double>& y, double tau0, std::size_t m_factor) {
              const StabilityPoint p = hadamard_variance(series_from_numpy(y, tau0), m_factor);
              return py::make_tuple(p.tau, p.var, p.num_terms);
          },
          py::arg("y"), py::arg("tau0"), py::arg("m"),
          "(tau, variance, num_terms) of the non-overlapping Hadamard variance");

    m.def("allan_variance",
          [](const py::array_t<double>& y, double tau0, std::size_t m_factor) {
              const StabilityPoint p = allan_variance(series_from_numpy(y, tau0), m_factor);
              return py::make_tuple(p.tau, p.var, p.num_terms);
          },
          py::arg("y"), py::arg("tau0"), py::arg("m"));

    m.def("fit_noise_coefficients",
          [](const std::vector<std::pair<double, double>>& points) {
              std::vector<StabilityPoint> pts;
              for (const auto& [tau, var] : points) pts.push_back({tau, var, 1});
              const NoiseFit fit = fit_noise_coefficients(pts);
              py::dict out;
              out["q_theta"] = fit.spec.q_theta;
              out["q_gamma"] = fit.spec.q_gamma;
              out["q_drift"] = fit.spec.q_drift;
              out["residual"] = fit.residual;
              return out;
          },
          py::arg("points"), "fit (tau, hadamard_var) pairs to the three-density model");

    m.def("classify",
          [](bool phase_alarm, bool freq_alarm) {
              return to_string(classify(phase_alarm, freq_alarm));
          },
          py::arg("phase_alarm"), py::arg("freq_alarm"));

    m.def("attack_offset",
          [](const std::string& config_json, double t) {
              return attack_offset(scenario_config_from_json(config_json).attack, t);
          },
          py::arg("config_json"), py::arg("t"),
          "injected GNSS offset at time t for the config's attack profile");

    m.def("preset_names", &scenario_preset_names);
    m.def("preset_json",
          [](const std::string& name) { return scenario_config_to_json(scenario_preset(name)); },
          py::arg("name"), "canonical JSON text of a named scenario preset");

    m.def("simulate", &simulate_from_json, py::arg("config_json"),
          "simulate a scenario config (JSON text); returns dict of numpy arrays");

    m.def("run_detection", &detection_from_json, py::arg("config_json"), py::arg("benign_json"),
          py::arg("multiplier") = 6.0,
          "simulate, calibrate on the benign config, detect; returns series and metrics");
}
