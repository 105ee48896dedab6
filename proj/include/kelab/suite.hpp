#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "kelab/bergman.hpp"
#include "kelab/kernels.hpp"

namespace kelab {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    std::string detail;
    double seconds = 0;
    nlohmann::json metrics;
};

// Bergman experiment at desk scale: Ricci/KE target, two-route check, l = 1..levels.
struct BergmanExperiment {
    std::string name;
    int p = 1;
    double half_width = 0;  // after any widening
    double route_agreement = 0;
    BergmanRun run;
    double seconds = 0;
};

// Widens the grid by 1.5 when the decay guard trips.
BergmanExperiment run_bergman_experiment(const std::string& name, double k, int p, const DivisorData& divisor,
                                         int levels, Backend backend = Backend::openmp, double half_width = 80,
                                         int node_count = 8801);

struct SuiteOptions {
    std::uint64_t seed = 20261019;
    Backend backend = Backend::openmp;
    int bergman_levels = 200;
};

class AcceptanceSuite {
public:
    explicit AcceptanceSuite(SuiteOptions opts = {});
    CriterionResult run(int id);
    std::vector<CriterionResult> run_all(const std::vector<int>& ids = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    const BergmanExperiment& bergman(const std::string& name);

private:
    SuiteOptions opts_;
    std::map<std::string, BergmanExperiment> bergman_;
};

std::string format_result_line(const CriterionResult& r);

}  // namespace kelab
