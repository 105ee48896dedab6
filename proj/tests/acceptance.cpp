// Runs the ten acceptance criteria and prints one line per criterion.
#include <cstdlib>
#include <iostream>
#include <string>

#include "kelab/suite.hpp"

int main(int argc, char** argv)
{
    kelab::SuiteOptions opts;
    if (const char* seed = std::getenv("KELAB_SEED")) opts.seed = std::stoull(seed);
    if (argc > 1 && std::string(argv[1]) == "--serial") opts.backend = kelab::Backend::serial;
    kelab::AcceptanceSuite suite(opts);
    int failed = 0;
    for (const auto& r : suite.run_all()) {
        std::cout << kelab::format_result_line(r) << std::endl;
        if (!r.passed) ++failed;
    }
    std::cout << (failed == 0 ? "acceptance: all 10 criteria passed" : "acceptance: " + std::to_string(failed) + " criteria failed")
              << std::endl;
    return failed == 0 ? 0 : 1;
}
