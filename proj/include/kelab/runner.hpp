#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace kelab {

// Flat schema; see README for the key list. Unset grid keys take per-kind defaults.
struct RunConfig {
    std::string kind = "solve";  // solve | ricci | bergman | family | suite
    double k = 4;
    double a0 = 0, ainf = 0, c0 = 0, cinf = 0;
    int p = 1;
    std::optional<double> T;
    std::optional<int> N;
    double base_min = -3, base_max = 3;
    int base_nodes = 41;
    std::vector<double> delta_schedule, eps_schedule;
    double tol = 1e-10;
    double stop_tol = 1e-10;
    int m_max = 600;
    int levels = 200;
    std::string family = "product";
    std::string profile = "logistic";
    double amplitude = 0.05;
    double beta = 0.5;
    std::string out = "kelab_out";
    std::uint64_t seed = 20261019;
    std::vector<int> criteria;
    bool serial = false;

    double half_width() const;
    int node_count() const;
    nlohmann::json to_json() const;
};

// Throws ConfigurationError naming the field; unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
void validate(const RunConfig& cfg);

struct Verdict {
    std::string check;
    bool passed = false;
    std::string detail;
};

struct RunManifest {
    nlohmann::json config;
    std::string convention_hash;
    std::string version;
    double wall_clock = 0;
    std::vector<Verdict> verdicts;
    std::vector<std::string> artifacts;

    bool all_passed() const;
    nlohmann::json to_json() const;
};

// Executes the configured experiment, writes artifacts and manifest.json under cfg.out.
// Compute failures become failing verdicts; the manifest is always written.
RunManifest run(const RunConfig& cfg, bool echo = false);

// Plot-ready CSVs from ricci_trace.csv / bergman_trace.csv files. Returns the written paths.
std::vector<std::filesystem::path> emit_plotdata(const std::vector<std::filesystem::path>& traces,
                                                 const std::filesystem::path& out_dir);

}  // namespace kelab
