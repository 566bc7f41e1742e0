#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <omarray/cli.hpp>

using namespace omarray;
namespace fs = std::filesystem;

namespace
{
struct Run
{
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string summary_value(const std::string &text, const std::string &key)
{
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind(key + "=", 0) == 0)
            return line.substr(key.size() + 1);
    return "";
}

fs::path scratch(const std::string &name)
{
    const auto dir = fs::temp_directory_path() / ("omarray_cli_test_" + name);
    fs::remove_all(dir);
    return dir;
}
} // namespace

TEST_CASE("exit codes", "[cli]")
{
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    const auto bad_flag = run({"spectrum", "--preset", "FIG1", "--bogus"});
    CHECK(bad_flag.code == 1);
    CHECK(bad_flag.err.find("--bogus") != std::string::npos);
    CHECK(run({"spectrum"}).code == 1);
    CHECK(run({"spectrum", "--preset", "NOPE"}).code == 1);
    CHECK(run({"spectrum", "--preset", "FIG1", "--config", "/nonexistent.toml"}).code == 1);
    CHECK(run({"spectrum", "--preset", "FIG1", "--format", "pdf"}).code == 1);
    CHECK(run({"spectrum", "--preset", "FIG1", "--n", "-3"}).code == 2);
    CHECK(run({"store", "--preset", "FIG1", "--n", "4", "--dt-s", "1e-9"}).code == 2);
    CHECK(run({"validate", "--preset", "OPTIMUM"}).code == 0);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("spectrum of one element", "[cli]")
{
    const auto r = run({"spectrum", "--preset", "FIG1", "--n", "1", "--min-hz", "-1e8", "--max-hz", "1e8",
                        "--points", "11"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("detuning_hz,", 0) == 0);
    bool found = false;
    while (std::getline(in, line)) {
        if (line.rfind("0,", 0) != 0)
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');)
            cells.push_back(c);
        CHECK(std::abs(std::stod(cells[6]) - 1.0) < 1e-9);
        found = true;
    }
    CHECK(found);
    CHECK(r.out.find('\r') == std::string::npos);
}

TEST_CASE("bands output is byte-identical across runs", "[cli]")
{
    const auto a = scratch("bands_a"), b = scratch("bands_b");
    const std::vector<std::string> base{"bands", "--preset", "FIG1", "--points", "301", "--format", "csv,svg"};
    auto args_a = base, args_b = base;
    args_a.insert(args_a.end(), {"--out", a.string()});
    args_b.insert(args_b.end(), {"--out", b.string()});
    REQUIRE(run(args_a).code == 0);
    REQUIRE(run(args_b).code == 0);
    CHECK(slurp(a / "bands.csv") == slurp(b / "bands.csv"));
    CHECK(slurp(a / "bands.svg") == slurp(b / "bands.svg"));
    CHECK(slurp(a / "bands.svg").find("rgb(") != std::string::npos);
    CHECK(slurp(a / "bands.csv").find("created") == std::string::npos);
    const auto meta = slurp(a / "bands.meta.json");
    CHECK(meta.find("created_utc") != std::string::npos);
    CHECK(meta.find("\"FIG1\"") != std::string::npos);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("config files drive the run", "[cli]")
{
    const auto dir = scratch("config");
    fs::create_directories(dir);
    const auto cfg = dir / "run.toml";
    std::ofstream(cfg) << "preset = \"PAPER_DEVICE\"\n[grid]\npoints = 21\n";
    const auto r = run({"spectrum", "--config", cfg.string(), "--n", "3"});
    CHECK(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 22);

    std::ofstream(cfg) << "preset = \"PAPER_DEVICE\"\n[params]\nn = 3\n";
    CHECK(run({"validate", "--config", cfg.string()}).code == 1);
    CHECK(run({"validate", "--preset", "FIG1", "--config", cfg.string()}).code == 1);
    fs::remove_all(dir);
}

TEST_CASE("every subcommand runs on a preset", "[cli]")
{
    CHECK(run({"noise", "--preset", "PAPER_DEVICE_RT"}).code == 0);
    CHECK(run({"pump", "--preset", "PAPER_DEVICE", "--points", "50"}).code == 0);
    CHECK(run({"bands", "--preset", "OPTIMUM", "--points", "101"}).code == 0);
    const auto s = run({"store", "--preset", "FIG1", "--n", "8", "--omega0-hz", "3e8"});
    CHECK(s.code == 0);
    CHECK(!summary_value(s.out, "efficiency").empty());
}

TEST_CASE("reference optimization", "[cli]")
{
    const auto dir = scratch("optimize");
    const auto r = run({"optimize", "--paper-333", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const double product = std::stod(summary_value(r.out, "product"));
    CHECK(std::abs(product - 110.0) <= 0.25 * 110.0);
    CHECK(summary_value(r.out, "feasible") == "true");
    CHECK(fs::exists(dir / "optimize.csv"));
    CHECK(fs::exists(dir / "optimize_summary.txt"));
    CHECK(fs::exists(dir / "optimize.meta.json"));
    CHECK(run({"optimize", "--reference"}).out == r.out);
    fs::remove_all(dir);
}
