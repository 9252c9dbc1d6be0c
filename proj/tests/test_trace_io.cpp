#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "clockwatch/errors.hpp"
#include "clockwatch/trace_io.hpp"

using namespace clockwatch;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("clockwatch_io_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

TraceSet tiny_trace() {
    TraceSet t;
    t.epochs = {0, 1, 2, 3, 4, 5, 6, 7};
    t.gnss_phase = {0.0, 1.25e-8, -3.7e-9, 2e-6, 1.9999e-6, 2.1e-6, 1.23456789012345e-7, 5e-9};
    t.local_phases = {{0, 1e-10, 2.5e-10, -1e-10, 3e-10, 4e-10, 5e-10, 6e-10},
                      {0, -2e-10, 1e-10, 7e-11, -9e-11, 2e-10, 1e-10, 0}};
    t.attack_truth = {0, 0, 0, 2e-6, 2e-6, 2e-6, 0, 0};
    return t;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("trace csv round trip is exact") {
    TempDir dir;
    const fs::path p = dir.path / "trace.csv";
    const TraceSet t = tiny_trace();
    save_trace_csv(t, p);
    const TraceSet r = load_trace_csv(p);
    REQUIRE(r.epoch_count() == t.epoch_count());
    REQUIRE(r.local_clock_count() == t.local_clock_count());
    for (std::size_t k = 0; k < t.epoch_count(); ++k) {
        CHECK(r.epochs[k] == t.epochs[k]);
        CHECK(r.gnss_phase[k] == t.gnss_phase[k]);
        CHECK(r.attack_truth[k] == t.attack_truth[k]);
        for (std::size_t i = 0; i < t.local_clock_count(); ++i) {
            CHECK(r.local_phases[i][k] == t.local_phases[i][k]);
        }
    }
}

TEST_CASE("trace csv rejects a missing column") {
    TempDir dir;
    const fs::path p = dir.path / "bad.csv";
    write_text(p,
               "epoch_s,gnss_phase_s,clock0_phase_s\n"
               "0,1e-9,2e-9\n");
    CHECK_THROWS_WITH_AS(load_trace_csv(p), doctest::Contains("attack_truth_s"), ParseError);

    write_text(p,
               "epoch_s,clock0_phase_s,attack_truth_s,gnss_phase_s\n"
               "0,1e-9,2e-9,0\n");
    CHECK_THROWS_WITH_AS(load_trace_csv(p), doctest::Contains("gnss_phase_s"), ParseError);
}

TEST_CASE("trace csv reports the line of a backwards epoch") {
    TempDir dir;
    const fs::path p = dir.path / "backwards.csv";
    write_text(p,
               "epoch_s,gnss_phase_s,clock0_phase_s,attack_truth_s\n"
               "0,0,0,0\n"
               "1,0,0,0\n"
               "0.5,0,0,0\n");
    try {
        load_trace_csv(p);
        FAIL("expected InvalidDataError");
    } catch (const InvalidDataError& e) {
        CHECK(e.line() == 4);
        CHECK(std::string(e.what()).find("increasing") != std::string::npos);
    }
}

TEST_CASE("trace csv reports the line of a malformed number") {
    TempDir dir;
    const fs::path p = dir.path / "garbled.csv";
    write_text(p,
               "epoch_s,gnss_phase_s,clock0_phase_s,attack_truth_s\n"
               "0,0,0,0\n"
               "1,not_a_number,0,0\n");
    try {
        load_trace_csv(p);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("trace csv skips comment lines") {
    TempDir dir;
    const fs::path p = dir.path / "comments.csv";
    write_text(p,
               "# produced by a test\n"
               "epoch_s,gnss_phase_s,clock0_phase_s,attack_truth_s\n"
               "# data follows\n"
               "0,1e-9,0,0\n"
               "1,2e-9,0,0\n");
    const TraceSet t = load_trace_csv(p);
    CHECK(t.epoch_count() == 2);
    CHECK(t.gnss_phase[1] == 2e-9);
}

TEST_CASE("measurement csv round trip") {
    TempDir dir;
    const fs::path p = dir.path / "meas.csv";
    std::vector<double> epochs{0.0, 1.0, 2.0};
    std::vector<Eigen::VectorXd> z(3, Eigen::VectorXd(2));
    z[0] << 1e-9, -2e-9;
    z[1] << 1.5e-9, -2.5e-9;
    z[2] << 2e-9, -3e-9;
    save_measurement_csv(epochs, z, p);
    const auto [re, rz] = load_measurement_csv(p);
    REQUIRE(re.size() == 3);
    REQUIRE(rz.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(re[k] == epochs[k]);
        CHECK((rz[k] - z[k]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("scenario config round trips through json") {
    const ScenarioConfig cfg = scenario_preset("texbat3-like");
    const std::string text = scenario_config_to_json(cfg);
    const ScenarioConfig back = scenario_config_from_json(text);
    CHECK(back.duration == cfg.duration);
    CHECK(back.tau == cfg.tau);
    CHECK(back.seed == cfg.seed);
    CHECK(back.quantization == cfg.quantization);
    CHECK(back.local_clocks.size() == cfg.local_clocks.size());
    CHECK(back.attack.kind == cfg.attack.kind);
    CHECK(back.attack.impulse_amplitude == cfg.attack.impulse_amplitude);
    CHECK(back.gnss.random_walk_sigma == cfg.gnss.random_walk_sigma);
    CHECK(back.filter.gnss_clock.q_theta == cfg.filter.gnss_clock.q_theta);
}

TEST_CASE("scenario config rejects unknown keys") {
    const std::string text = R"({
      "duration_s": 100.0,
      "local_clocks": [{"q_theta": 1e-19}],
      "sneaky_extra": 1
    })";
    CHECK_THROWS_WITH_AS(scenario_config_from_json(text), doctest::Contains("sneaky_extra"),
                         ParseError);

    const std::string nested = R"({
      "duration_s": 100.0,
      "local_clocks": [{"q_theta": 1e-19, "q_sigma": 2}]
    })";
    CHECK_THROWS_WITH_AS(scenario_config_from_json(nested), doctest::Contains("q_sigma"),
                         ParseError);
}

TEST_CASE("scenario config enforces invariants on load") {
    const std::string text = R"({
      "duration_s": 5.0,
      "tau_s": 1.0,
      "local_clocks": [{"q_theta": 1e-19}]
    })";
    CHECK_THROWS_WITH_AS(scenario_config_from_json(text), doctest::Contains("10*tau"),
                         std::invalid_argument);
}

TEST_CASE("shipped config files stay in sync with the preset registry") {
    const fs::path configs = fs::path(CLOCKWATCH_SOURCE_DIR) / "configs";
    for (const std::string& name : scenario_preset_names()) {
        const fs::path file = configs / (name + ".json");
        REQUIRE_MESSAGE(fs::exists(file), file.string());
        const ScenarioConfig loaded = load_scenario_config(file);
        CHECK(scenario_config_to_json(loaded) == scenario_config_to_json(scenario_preset(name)));
    }
}
