#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <stdexcept>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kelab/conventions.hpp"
#include "kelab/errors.hpp"
#include "kelab/io.hpp"
#include "kelab/runner.hpp"

using namespace kelab;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("kelab_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    return dir;
}

int cli(const std::string& args)
{
    int status = std::system((std::string(KELAB_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("CSV round trip is exact")
{
    CsvTable t({"a", "b"});
    t.add_row({0.1, -1.0 / 3});
    t.add_row({1e-300, 12345.678901234567});
    auto dir = scratch("csv");
    fs::create_directories(dir);
    atomic_write(dir / "t.csv", t.str());
    auto back = read_csv(dir / "t.csv");
    CHECK(back.columns == std::vector<std::string>{"a", "b"});
    CHECK(back.rows[0][1] == -1.0 / 3);
    CHECK(back.rows[1][0] == 1e-300);
    CHECK(back.column("b") == 1);
    CHECK_THROWS(t.add_row({1.0}));
    for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");
    fs::remove_all(dir);
}

TEST_CASE("SHA-256 test vector and the conventions hash")
{
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    auto doc = slurp(fs::path(KELAB_SOURCE_DIR) / "docs" / "CONVENTIONS.md");
    CHECK(conventions_hash() == sha256_hex(doc));
    CHECK(std::string(conventions_text()) == doc);
}

TEST_CASE("config validation names the offending field")
{
    auto message = [](const json& j) {
        try {
            parse_config(j);
        } catch (const ConfigurationError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message({{"kind", "solve"}, {"N", 2}}).find("'N'") != std::string::npos);
    CHECK(message({{"kind", "solve"}, {"colour", 2}}).find("'colour'") != std::string::npos);
    CHECK(message({{"kind", "solve"}, {"k", "four"}}).find("'k'") != std::string::npos);
    CHECK(message({{"kind", "paint"}}).find("'kind'") != std::string::npos);
    CHECK(message({{"kind", "ricci"}, {"a0", 1.0}}).find("'a0'") != std::string::npos);
    CHECK(message({{"kind", "solve"}, {"delta_schedule", {0.1, 0.05}}, {"eps_schedule", {0.1}}}).find("eps_schedule") !=
          std::string::npos);
    CHECK(message({{"kind", "suite"}, {"criteria", {0}}}).find("'criteria'") != std::string::npos);
    auto ok = parse_config({{"kind", "bergman"}, {"p", 2}, {"a0", 0.5}});
    CHECK(ok.half_width() == 80);
    CHECK(ok.node_count() == 8801);
}

TEST_CASE("solve run writes artifacts and a manifest, deterministically")
{
    auto dir = scratch("solve");
    RunConfig c = parse_config({{"kind", "solve"}, {"out", dir.string()}});
    auto m = run(c);
    CHECK(m.all_passed());
    CHECK(m.convention_hash == conventions_hash());
    for (const char* f : {"solution.csv", "current.csv", "report.json", "manifest.json"}) CHECK(fs::exists(dir / f));
    auto manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["config"]["N"] == 4096);
    CHECK(manifest["verdicts"][1]["check"] == "fs_oracle");
    auto first = slurp(dir / "solution.csv");
    run(c);
    CHECK(slurp(dir / "solution.csv") == first);
    fs::remove_all(dir);
}

TEST_CASE("manifest is written when a check fails")
{
    auto dir = scratch("control");
    auto m = run(parse_config({{"kind", "family"}, {"family", "control"}, {"out", dir.string()}}));
    CHECK_FALSE(m.all_passed());
    auto manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["all_passed"] == false);
    fs::remove_all(dir);
}

TEST_CASE("Ricci trace feeds plot data; a missing trace is an error")
{
    auto dir = scratch("ricci");
    auto m = run(parse_config({{"kind", "ricci"}, {"p", 2}, {"N", 1024}, {"out", dir.string()}}));
    CHECK(m.all_passed());
    auto written = emit_plotdata({dir / "ricci_trace.csv"}, dir / "plots");
    REQUIRE(written.size() == 1);
    auto plot = read_csv(written[0]);
    CHECK(plot.columns == std::vector<std::string>{"m", "gap", "ratio", "bound"});
    CHECK(plot.rows.size() == read_csv(dir / "ricci_trace.csv").rows.size());
    CHECK_THROWS_AS(emit_plotdata({dir / "bergman_trace.csv"}, dir / "plots"), ConfigurationError);
    fs::remove_all(dir);
}

TEST_CASE("suite run over a subset of criteria writes a summary table")
{
    auto dir = scratch("suite");
    auto m = run(parse_config({{"kind", "suite"}, {"criteria", {1, 4}}, {"out", dir.string()}}));
    CHECK(m.verdicts.size() == 2);
    CHECK(m.all_passed());
    CHECK(slurp(dir / "suite_summary.txt").find("criterion  4 [PASS]") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("command line exit codes")
{
    auto dir = scratch("cli");
    CHECK(cli("solve --out " + dir.string()) == 0);
    CHECK(cli("solve --N 2 --out " + dir.string()) == 2);
    CHECK(cli("family --family control --out " + dir.string()) == 1);
    CHECK(cli("frobnicate") == 2);
    CHECK(cli("plotdata --out " + dir.string() + " " + (dir / "nothing.csv").string()) == 2);
    fs::remove_all(dir);
}
