#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "conelab/cli.hpp"
#include "conelab/error.hpp"
#include "conelab/maximal.hpp"
#include "conelab/square.hpp"
#include "conelab/verify.hpp"

using namespace conelab;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "conelab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "conelab_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_CASE("config parser: sections, comments and quotes") {
    std::istringstream in("# leading comment\nN = 256\n\n[domain]\nmode=torus\n; another comment\n[square]\n"
                          "variant = \"smoothed\"\n  alpha =2  \n");
    const auto entries = cli::parse_config(in);
    REQUIRE(entries.size() == 4);
    CHECK(entries[0].section.empty());
    CHECK(entries[0].key == "N");
    CHECK(entries[0].value == "256");
    CHECK(entries[1].section == "domain");
    CHECK(entries[1].value == "torus");
    CHECK(entries[2].section == "square");
    CHECK(entries[2].value == "smoothed");
    CHECK(entries[3].key == "alpha");
    CHECK(entries[3].value == "2");
    CHECK(entries[3].line == 9);

    for (const char* bad : {"novalue\n", "[unterminated\n", " = 3\n", "[]\n"}) {
        std::istringstream b(bad);
        CHECK_THROWS_AS(cli::parse_config(b), PreconditionError);
    }
}

TEST_CASE("config hash is FNV-1a of the sorted listing") {
    CHECK(cli::config_hash({}) == "cbf29ce484222325");
    CHECK(cli::config_hash({{"subcommand", "x"}}) == "250c935c630146bf");
    CHECK(cli::config_hash({{"a", "1"}, {"b", "2"}}) != cli::config_hash({{"a", "2"}, {"b", "1"}}));
}

TEST_CASE("exit codes for bad invocations") {
    CHECK(invoke({"frobnicate"}).code == cli::kConfigError);
    CHECK(invoke({"square", "--no-such-flag"}).code == cli::kConfigError);
    CHECK(invoke({"square", "--N", "100"}).code == cli::kConfigError);
    CHECK(invoke({"square", "--config", "/nonexistent/conelab.cfg"}).code == cli::kConfigError);
    const auto tiny = invoke({"verify", "--suite", "all", "--N", "8"});
    CHECK(tiny.code == cli::kConfigError);
    CHECK(tiny.err.find("cone finer than grid") != std::string::npos);
    CHECK(invoke({"verify", "--suite", "nope", "--N", "256"}).code == cli::kConfigError);
    CHECK(invoke({"--help"}).code == cli::kOk);
    CHECK(invoke({"--version"}).out.find(cli::kVersion) != std::string::npos);
}

TEST_CASE("list-suites enumerates the eight suites") {
    for (const auto& args : {std::vector<std::string>{"--list-suites"}, std::vector<std::string>{"verify", "--list-suites"}}) {
        const auto r = invoke(args);
        CHECK(r.code == cli::kOk);
        std::istringstream lines(r.out);
        std::vector<std::string> ids;
        for (std::string line; std::getline(lines, line);) ids.push_back(line.substr(0, line.find(' ')));
        CHECK(ids == suite_names());
    }
}

TEST_CASE("square subcommand matches the library and carries a header") {
    const auto out = scratch("sf.csv");
    const auto r = invoke({"square", "--N", "128", "--function", "step-0", "--alpha", "2", "--output", out.string()});
    REQUIRE(r.code == cli::kOk);
    std::ifstream in(out);
    std::stringstream text;
    text << in.rdbuf();
    CHECK(first_line(text.str()).rfind(std::string("# conelab ") + cli::kVersion + " config=", 0) == 0);
    std::istringstream again(text.str());
    const GridFunction got = read_csv(again);

    const Domain d = Domain::line(-4.0, 4.0, 128);
    const GridFunction f = sample_corpus(d, function_corpus(20, 42)[1]);
    const KernelField field(d, OperatorSpec::laplacian(), Fluctuation::Plain, TimeGrid::make(2 * d.h(), 8.0));
    const auto want = conical_square(f, field, ConeConfig{2.0});
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == want[i]);  // 17 digits round-trip exactly
}

TEST_CASE("config file values apply and flags override them") {
    const auto cfg = scratch("run.cfg");
    write_file(cfg, "[domain]\nN = 64\n[square]\nalpha = 2\nvariant = smoothed\n[verify]\nsuite = bump\n");
    const auto from_file = invoke({"square", "--config", cfg.string()});
    const auto explicit_flags = invoke({"square", "--N", "64", "--alpha", "2", "--variant", "smoothed"});
    REQUIRE(from_file.code == cli::kOk);
    CHECK(from_file.out == explicit_flags.out);
    const auto overridden = invoke({"square", "--config", cfg.string(), "--alpha", "1"});
    CHECK(overridden.out != from_file.out);
    CHECK(first_line(overridden.out) != first_line(from_file.out));  // different config hash

    write_file(cfg, "[square]\nalpah = 2\n");
    const auto typo = invoke({"square", "--config", cfg.string()});
    CHECK(typo.code == cli::kConfigError);
    CHECK(typo.err.find("alpah") != std::string::npos);
    write_file(cfg, "[bogus]\nN = 64\n");
    CHECK(invoke({"square", "--config", cfg.string()}).code == cli::kConfigError);
}

TEST_CASE("maximal, weights, kernel and sparse subcommands") {
    const auto m = invoke({"maximal", "--N", "64", "--function", "gauss-1"});
    REQUIRE(m.code == cli::kOk);
    std::istringstream min(m.out);
    const auto got = read_csv(min);
    const Domain d = Domain::line(-4.0, 4.0, 64);
    const auto want = hl_maximal(sample_corpus(d, function_corpus(20, 42)[4]));
    for (std::size_t i = 0; i < d.n; ++i) CHECK(got[i] == want[i]);

    const auto w = invoke({"weights", "--N", "64", "--weight", "two-level", "--family", "dyadic"});
    REQUIRE(w.code == cli::kOk);
    const auto wj = nlohmann::json::parse(w.out);
    CHECK(wj.at("ap").get<double>() == 9.0 / 8.0);
    CHECK(wj.at("artifact").at("version") == cli::kVersion);
    CHECK(invoke({"weights", "--N", "64"}).code == cli::kConfigError);

    const auto k = invoke({"kernel", "--N", "16", "--per-octave", "2", "--stride", "4"});
    REQUIRE(k.code == cli::kOk);
    CHECK(k.out.find("t,x,y,value") != std::string::npos);

    const auto s = invoke({"sparse", "--N", "64", "--function", "step-0", "--t-min", "0.25"});
    REQUIRE(s.code == cli::kOk);
    const auto sj = nlohmann::json::parse(s.out);
    CHECK(sj.at("families").size() == 3);
    CHECK(sj.at("c_dom").get<double>() > 0.0);
}

TEST_CASE("verify and report subcommands") {
    const auto path = scratch("report.json");
    const std::vector<std::string> args = {"verify", "--suite", "fefferman-stein,mixed-weak", "--N", "128",
                                           "--t-min", "0.25", "--functions", "3", "--output", path.string()};
    const auto r = invoke(args);
    CHECK((r.code == cli::kOk || r.code == cli::kSuiteFailure));
    std::ifstream in(path);
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("suites").size() == 2);
    CHECK(j.at("passed").get<bool>() == (r.code == cli::kOk));
    CHECK_FALSE(j.at("suites")[0].contains("runtime_seconds"));

    std::stringstream first;
    first << std::ifstream(path).rdbuf();
    invoke(args);
    std::stringstream second;
    second << std::ifstream(path).rdbuf();
    CHECK(first.str() == second.str());

    const auto timed = invoke({"verify", "--suite", "fefferman-stein", "--N", "128", "--t-min", "0.25", "--functions", "2", "--timing",
                               "--format", "text"});
    CHECK(timed.err.find("suite fefferman-stein: ") != std::string::npos);
    CHECK(timed.out.find("suite fefferman-stein: ") != std::string::npos);

    const auto rep = invoke({"report", "--input", path.string()});
    CHECK(rep.code == r.code);
    CHECK(rep.out.find("suite mixed-weak") != std::string::npos);
    write_file(scratch("broken.json"), "{not json");
    CHECK(invoke({"report", "--input", scratch("broken.json").string()}).code == cli::kConfigError);
}
