#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include <omarray/io/config.hpp>
#include <omarray/io/csv.hpp>
#include <omarray/io/svg.hpp>

using namespace omarray;
using Catch::Matchers::WithinRel;

namespace
{
std::size_t count(const std::string &s, const std::string &what)
{
    std::size_t n = 0;
    for (auto pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + 1))
        ++n;
    return n;
}

io::PlotSpec occupation_plot()
{
    io::PlotSpec spec;
    spec.title = "bands & occupations";
    spec.x_label = "detuning / 2pi (Hz)";
    spec.y_label = "Re Kd";
    io::PlotSeries s;
    s.name = "Re Kd";
    s.x = {-1.0, -0.5, 0.0, 0.5, 1.0};
    s.y = {1.2, 1.4, 1.5707963267948966, 1.7, 1.9};
    s.colors = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.5, 0.25, 0.25}, {0.2, 0.3, 0.5}};
    spec.series.push_back(s);
    return spec;
}
} // namespace

TEST_CASE("config parsing", "[io]")
{
    const auto t = io::ConfigTable::parse(R"(# comment
preset = "FIG1"   # trailing
[spectrum]
n = 4
min_hz = -1e9
label = "a # b"
flag = true
)");
    CHECK(*t.string("preset") == "FIG1");
    CHECK(*t.number("spectrum.n") == 4.0);
    CHECK(*t.number("spectrum.min_hz") == -1e9);
    CHECK(*t.string("spectrum.label") == "a # b");
    CHECK(*t.boolean("spectrum.flag"));
    CHECK_FALSE(t.number("spectrum.absent"));
    CHECK(t.has_section("spectrum"));
    CHECK_FALSE(t.has_section("bands"));

    CHECK_THROWS_AS(io::ConfigTable::parse("[broken\n"), io::ConfigError);
    CHECK_THROWS_AS(io::ConfigTable::parse("novalue\n"), io::ConfigError);
    CHECK_THROWS_AS(io::ConfigTable::parse("a = 1\na = 2\n"), io::ConfigError);
    CHECK_THROWS_AS(io::ConfigTable::parse("a = \"open\n"), io::ConfigError);
    CHECK_THROWS_AS(io::ConfigTable::parse("a = x1\n").number("a"), io::ConfigError);
    CHECK_THROWS_AS(io::ConfigTable::load("/nonexistent/file.toml"), io::ConfigError);
}

TEST_CASE("parameter source resolution", "[io]")
{
    const auto preset = io::ConfigTable::parse("preset = \"OPTIMUM\"\n");
    std::string name;
    const auto p = io::resolve_params(preset, &name);
    CHECK(name == "OPTIMUM");
    CHECK(p.n_elements == 275);

    const auto table = io::ConfigTable::parse(R"([params]
omega1_hz = 200e12
omega_m_hz = 10e9
kappa_ex_hz = 1e9
q_1 = 3e6
q_m = 1e5
omega_drive_hz = 100e6
h_hz = 0.35e6
n = 12
)");
    const auto q = io::resolve_params(table);
    CHECK(q.n_elements == 12);
    CHECK_THAT(q.kappa_ex, WithinRel(2.0 * kPi * 1e9, 1e-15));
    CHECK_THAT(q.kappa_in, WithinRel(2.0 * kPi * 200e12 / 3e6, 1e-15));
    CHECK_THAT(q.gamma_m, WithinRel(2.0 * kPi * 10e9 / 1e5, 1e-15));

    CHECK_THROWS_AS(io::resolve_params(io::ConfigTable::parse("")), io::ConfigError);
    CHECK_THROWS_AS(io::resolve_params(io::ConfigTable::parse("preset = \"FIG1\"\n[params]\nn = 1\n")),
                    io::ConfigError);
    CHECK_THROWS_AS(io::resolve_params(io::ConfigTable::parse("preset = \"NOPE\"\n")), io::ConfigError);
    CHECK_THROWS_AS(io::resolve_params(io::ConfigTable::parse("[params]\nomega1_hz = 1\n")), io::ConfigError);
    CHECK_THROWS_AS(io::resolve_params(io::ConfigTable::parse(
                        "[params]\nomega1_hz = 1\nomega_m_hz = 1\nkappa_ex_hz = 1\nh_hz = 1\nq_1 = 1\nkappa_in_hz = 1\n")),
                    io::ConfigError);
}

TEST_CASE("csv dialect", "[io]")
{
    CHECK(io::format_double(0.1) == "0.10000000000000001");
    CHECK(io::format_double(1.0) == "1");
    CHECK(io::format_double(-2.5e-300) == "-2.5e-300");
    CHECK(io::format_double(NAN) == "nan");
    CHECK(io::format_double(-INFINITY) == "-inf");
    for (double v : {kPi, 1.0 / 3.0, 6.02214076e23, -1e-17})
        CHECK(std::stod(io::format_double(v)) == v);

    io::CsvTable t({"a", "b", "c"});
    t.add_row({1.5, 7LL, std::string("x")});
    t.add_row({-0.0, -3LL, std::string("")});
    CHECK(t.str() == "a,b,c\n1.5,7,x\n-0,-3,\n");
    CHECK(t.str().find('\r') == std::string::npos);
    CHECK_THROWS(t.add_row({1.0}));
}

TEST_CASE("svg plots", "[io]")
{
    io::PlotSpec two;
    two.series.push_back({"line", {0.0, 1.0}, {0.0, 2.0}, {}});
    const auto svg = io::emit_plot(two);
    CHECK(count(svg, "<polyline") == 1);
    const auto pts = svg.substr(svg.find("points=\""));
    CHECK(count(pts.substr(0, pts.find("\"/>")), ",") == 2);
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("</svg>\n") == svg.size() - 7);

    io::PlotSpec gap;
    gap.series.push_back({"gap", {0, 1, 2, 3, 4}, {0, 1, NAN, 3, 4}, {}});
    CHECK(count(io::emit_plot(gap), "<polyline") == 2);

    io::PlotSpec empty;
    CHECK_THROWS_AS(io::emit_plot(empty), ValidationError);
    empty.series.push_back({"nan", {NAN}, {1.0}, {}});
    CHECK_THROWS_AS(io::emit_plot(empty), ValidationError);
    io::PlotSpec bad;
    bad.series.push_back({"bad", {1.0, 2.0}, {1.0}, {}});
    CHECK_THROWS_AS(io::emit_plot(bad), ValidationError);
}

TEST_CASE("occupation colouring", "[io]")
{
    const auto svg = io::emit_plot(occupation_plot());
    CHECK(svg == io::emit_plot(occupation_plot()));
    CHECK(count(svg, "<circle") == 5);
    CHECK(svg.find("fill=\"rgb(255,0,0)\"") != std::string::npos);
    CHECK(svg.find("fill=\"rgb(0,255,0)\"") != std::string::npos);
    CHECK(svg.find("fill=\"rgb(0,0,255)\"") != std::string::npos);
    CHECK(svg.find("fill=\"rgb(128,64,64)\"") != std::string::npos);
    CHECK(svg.find("bands &amp; occupations") != std::string::npos);

    std::ifstream f(std::string(OMARRAY_TEST_DATA) + "/occupation_plot.svg", std::ios::binary);
    REQUIRE(f);
    std::stringstream golden;
    golden << f.rdbuf();
    CHECK(svg == golden.str());
}
