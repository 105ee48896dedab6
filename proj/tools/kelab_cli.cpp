#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kelab/conventions.hpp"
#include "kelab/errors.hpp"
#include "kelab/runner.hpp"

using json = nlohmann::json;

namespace {

// Values collected from the command line; only options actually given override the config file.
struct Flags {
    std::string config;
    std::map<std::string, double> reals;
    std::map<std::string, int> ints;
    std::map<std::string, std::string> strings;
    std::vector<double> delta_schedule, eps_schedule;
    std::vector<int> criteria;
    std::uint64_t seed = 0;
    bool serial = false;
    std::vector<std::pair<std::string, CLI::Option*>> given;
};

void add_run_options(CLI::App* sub, Flags& f)
{
    sub->add_option("--config", f.config, "JSON config file (flat schema)")->check(CLI::ExistingFile);
    auto reg = [&](const std::string& key, CLI::Option* opt) { f.given.emplace_back(key, opt); };
    reg("out", sub->add_option("--out", f.strings["out"], "output directory"));
    reg("seed", sub->add_option("--seed", f.seed, "seed for randomized checks"));
    for (auto [flag, key] : std::vector<std::pair<std::string, std::string>>{{"--tol", "tol"},
                                                                             {"--stop-tol", "stop_tol"},
                                                                             {"--k", "k"},
                                                                             {"--a0", "a0"},
                                                                             {"--ainf", "ainf"},
                                                                             {"--c0", "c0"},
                                                                             {"--cinf", "cinf"},
                                                                             {"--T", "T"},
                                                                             {"--base-min", "base_min"},
                                                                             {"--base-max", "base_max"},
                                                                             {"--amplitude", "amplitude"},
                                                                             {"--beta", "beta"}})
        reg(key, sub->add_option(flag, f.reals[key]));
    for (auto [flag, key] : std::vector<std::pair<std::string, std::string>>{
             {"--p", "p"}, {"--N", "N"}, {"--base-nodes", "base_nodes"}, {"--m-max", "m_max"}, {"--levels", "levels"}})
        reg(key, sub->add_option(flag, f.ints[key]));
    reg("family", sub->add_option("--family", f.strings["family"], "product | perturbed | conic | control"));
    reg("profile", sub->add_option("--profile", f.strings["profile"], "logistic | inverse_quadratic | log_log"));
    reg("delta_schedule", sub->add_option("--delta-schedule", f.delta_schedule)->delimiter(','));
    reg("eps_schedule", sub->add_option("--eps-schedule", f.eps_schedule)->delimiter(','));
    reg("criteria", sub->add_option("--criteria", f.criteria, "acceptance criteria to run")->delimiter(','));
    reg("serial", sub->add_flag("--serial", f.serial, "use the serial reference kernels"));
}

json merged_config(const std::string& kind, const Flags& f)
{
    json j = json::object();
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw kelab::ConfigurationError("config file " + f.config + ": " + e.what());
        }
        if (!j.is_object()) throw kelab::ConfigurationError("config file " + f.config + " must hold a JSON object");
        if (j.contains("kind") && j["kind"] != kind)
            throw kelab::ConfigurationError("config field 'kind': file says " + j["kind"].dump() +
                                            " but the subcommand is " + kind);
    }
    j["kind"] = kind;
    for (const auto& [key, opt] : f.given) {
        if (opt->count() == 0) continue;
        if (key == "seed") j[key] = f.seed;
        else if (key == "serial") j[key] = f.serial;
        else if (key == "delta_schedule") j[key] = f.delta_schedule;
        else if (key == "eps_schedule") j[key] = f.eps_schedule;
        else if (key == "criteria") j[key] = f.criteria;
        else if (f.reals.count(key)) j[key] = f.reals.at(key);
        else if (f.ints.count(key)) j[key] = f.ints.at(key);
        else j[key] = f.strings.at(key);
    }
    return j;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"kelab: radial Kähler-Einstein and Bergman kernel experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kelab::version()) + " (conventions " + kelab::conventions_hash() + ")");

    Flags flags;
    std::vector<std::pair<std::string, CLI::App*>> runs;
    for (const char* kind : {"solve", "ricci", "bergman", "family", "suite"}) {
        static const std::map<std::string, std::string> help = {
            {"solve", "KE solve, optionally along a (delta, eps) schedule"},
            {"ricci", "Ricci iteration with contraction and limit checks"},
            {"bergman", "Bergman kernel iteration up to a level"},
            {"family", "fibrewise KE over a base, positivity and NS convexity"},
            {"suite", "acceptance criteria 1-10"}};
        auto* sub = app.add_subcommand(kind, help.at(kind));
        add_run_options(sub, flags);
        runs.emplace_back(kind, sub);
    }

    std::vector<std::string> traces;
    std::string plot_out = "plotdata";
    auto* plot = app.add_subcommand("plotdata", "plot-ready CSVs from Ricci/Bergman traces");
    plot->add_option("traces", traces, "ricci_trace.csv / bergman_trace.csv files")->required();
    plot->add_option("--out", plot_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return e.get_exit_code() == 0 ? code : 2;
    }

    try {
        if (plot->parsed()) {
            std::vector<std::filesystem::path> paths(traces.begin(), traces.end());
            for (const auto& p : kelab::emit_plotdata(paths, plot_out)) std::cout << p.string() << "\n";
            return 0;
        }
        for (const auto& [kind, sub] : runs) {
            if (!sub->parsed()) continue;
            kelab::RunConfig cfg = kelab::parse_config(merged_config(kind, flags));
            auto manifest = kelab::run(cfg, true);
            std::cout << (manifest.all_passed() ? "all checks passed" : "some checks FAILED") << " ("
                      << manifest.wall_clock << " s), manifest in " << cfg.out << "/manifest.json\n";
            return manifest.all_passed() ? 0 : 1;
        }
    } catch (const kelab::ConfigurationError& e) {
        std::cerr << "kelab: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "kelab: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
