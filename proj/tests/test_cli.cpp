/**
 * @file test_cli.cpp
 * @brief CSV/VTK/verdict output, configuration parsing and command orchestration.
 */
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "poroplate/app.hpp"

using namespace poroplate;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory named after the running test.
fs::path scratch() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    const fs::path dir = fs::temp_directory_path() / "poroplate_tests" / (std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunConfig small_config(Command c) {
    RunConfig cfg = parse_config("[grid]\nn = 8\nnz = 4\n[time]\nnsteps = 4\n[sweep]\neps = 0.4, 0.2, 0.1\n");
    cfg.command = c;
    return cfg;
}

std::size_t count_rows(const std::string& csv) {
    std::size_t rows = 0;
    std::istringstream is(csv);
    for (std::string line; std::getline(is, line);)
        if (!line.empty() && line[0] != '#') ++rows;
    return rows;
}

}  // namespace

TEST(Csv, NumbersRoundTripExactly) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) EXPECT_EQ(std::stod(format_number(v)), v);
    EXPECT_EQ(format_number(0.5), "0.5");
    EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(Csv, QuotesFieldsWithSeparators) {
    EXPECT_EQ(csv_escape("plain"), "plain");
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_escape("say \"x\""), "\"say \"\"x\"\"\"");
}

TEST(Csv, HeaderLinesPrecedeTheColumnRow) {
    CsvTable t({"a", "b"});
    t.row(std::vector<double>{1.0, 2.0});
    EXPECT_EQ(t.str("first\nsecond"), "# first\r\n# second\r\na,b\r\n1,2\r\n");
    EXPECT_THROW(t.row(std::vector<double>{1.0}), ShapeError);
}

TEST(Csv, FieldTableListsEveryNodeAndComponent) {
    const Grid3D g(Grid2D(4), 2);
    Field3 w(g, 3), p(g);
    w(g.index(1, 2, 1), 2) = 7.0;
    const CsvTable t = field_table({{"w", &w}, {"pi", &p}});
    EXPECT_EQ(t.size(), g.size());
    const std::string s = t.str();
    EXPECT_NE(s.find("y1,y2,y3,w1,w2,w3,pi\r\n"), std::string::npos);
    EXPECT_NE(s.find("0.25,0.5,0,0,0,7,0\r\n"), std::string::npos);
}

TEST(Vtk, StructuredPointsLayout) {
    const Grid3D g(Grid2D(4), 2);
    Field3 w(g, 3), p(g);
    const std::string doc = vtk_structured_points({{"w", &w}, {"pi", &p}}, "title\nwith break");
    EXPECT_EQ(doc.rfind("# vtk DataFile Version 3.0\ntitle with break\nASCII\nDATASET STRUCTURED_POINTS\n", 0), 0u);
    EXPECT_NE(doc.find("DIMENSIONS 5 5 3\n"), std::string::npos);
    EXPECT_NE(doc.find("ORIGIN 0 0 -1\n"), std::string::npos);
    EXPECT_NE(doc.find("POINT_DATA 75\n"), std::string::npos);
    EXPECT_NE(doc.find("VECTORS w double\n"), std::string::npos);
    EXPECT_NE(doc.find("SCALARS pi double 1\nLOOKUP_TABLE default\n"), std::string::npos);
    // Header lines, 75 vector rows, 2 scalar header lines and 75 scalar rows.
    EXPECT_EQ(std::count(doc.begin(), doc.end(), '\n'), 8 + 1 + 75 + 2 + 75);
}

TEST(Verdicts, LineFormatRoundTrips) {
    const Verdict v{"eps-convergence", true, 0.25, 0.5};
    EXPECT_EQ(v.line(), "eps-convergence PASS 0.25 0.5");
    const auto back = parse_verdicts("# comment\n" + verdict_text({v, {"x", false, 4.0, 3.0}}));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].id, "eps-convergence");
    EXPECT_TRUE(back[0].pass);
    EXPECT_FALSE(back[1].pass);
    EXPECT_EQ(back[1].value, 4.0);
    EXPECT_THROW(parse_verdicts("x MAYBE 1 2\n"), ConfigError);
}

TEST(Config, DefaultsWhenEmpty) {
    const RunConfig c = parse_config("");
    EXPECT_EQ(c.scenario, "mixed");
    EXPECT_EQ(c.n, 16);
    EXPECT_EQ(c.nz, 8);
    EXPECT_EQ(c.nsteps, 50);
    EXPECT_EQ(c.sweep_eps, (std::vector<double>{0.4, 0.2, 0.1, 0.05}));
    EXPECT_DOUBLE_EQ(c.params.lambda, 1.0);
}

TEST(Config, IncompressiblePoissonRatioRejectedWithKeyAndLine) {
    try {
        parse_config("[dimensionless]\nalpha = 0.9\nnu = 0.5\n");
        FAIL() << "expected a configuration error";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3);
        EXPECT_NE(std::string(e.what()).find("dimensionless.nu"), std::string::npos);
    }
    try {
        parse_config("[physical]\nG = 2\nnu = 0.5\n");
        FAIL() << "expected a configuration error";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3);
        EXPECT_NE(std::string(e.what()).find("physical.nu"), std::string::npos);
    }
}

TEST(Config, ErrorsCarryLineContext) {
    auto line_of = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return e.line();
        }
        return -1;
    };
    EXPECT_EQ(line_of("[grid]\nn = 8\nbogus = 1\n"), 3);
    EXPECT_EQ(line_of("[grid]\nn = eight\n"), 2);
    EXPECT_EQ(line_of("[grid\nn = 8\n"), 1);
    EXPECT_EQ(line_of("[run]\nscenario = twist\n"), 2);
    EXPECT_EQ(line_of("\n[sweep]\neps = 0.2, 0.4\n"), 3);
    EXPECT_EQ(line_of("[grid]\nnz = 3\n"), 2);
    EXPECT_EQ(line_of("[unknown]\nx = 1\n"), 1);
}

TEST(Config, PhysicalSectionDerivesScaledConstants) {
    const RunConfig c = parse_config("[physical]\nG = 2\ngammaG = 0.5\nnu = 0.25\nell = 0.02\nL = 1\n");
    EXPECT_TRUE(c.from_physical);
    EXPECT_DOUBLE_EQ(c.params.gamma, 1.0);
    EXPECT_DOUBLE_EQ(c.params.eps, 0.01);
    EXPECT_THROW(parse_config("[physical]\nG = 1\n[dimensionless]\nnu = 0.2\n"), ConfigError);
}

TEST(Config, EchoParsesBackToTheSameConfiguration) {
    const RunConfig c = parse_config(
        "[run]\ncommand = mms\nscenario = bend\n[dimensionless]\nnu = 0.3\neps = 0.05\n[grid]\nn = 12\n"
        "[output]\nformats = vtk\nevery = 3\n");
    const std::string echo = to_ini(c);
    EXPECT_EQ(to_ini(parse_config(echo)), echo);
    EXPECT_NE(echo.find("lambda = " + format_number(c.params.lambda)), std::string::npos);
}

TEST(Config, OutputRootFromEnvironment) {
    RunConfig c;
    c.output_dir = "results";
    ::setenv(kOutputRootVar, "/tmp/root", 1);
    EXPECT_EQ(resolve_output_dir(c), fs::path("/tmp/root/results"));
    c.output_dir = "/abs/dir";
    EXPECT_EQ(resolve_output_dir(c), fs::path("/abs/dir"));
    ::unsetenv(kOutputRootVar);
    c.output_dir = "results";
    EXPECT_EQ(resolve_output_dir(c), fs::path("results"));
}

TEST(App, SweepWritesOneDirectoryPerEpsRatesAndVerdicts) {
    const fs::path root = scratch();
    std::ostringstream log;
    const RunResult res = run(small_config(Command::SweepEpsilon), root, log);
    int dirs = 0, files = 0;
    for (const auto& e : fs::directory_iterator(root / "sweep")) (e.is_directory() ? dirs : files)++;
    EXPECT_EQ(dirs, 3);
    EXPECT_EQ(files, 2);
    EXPECT_TRUE(fs::exists(root / "sweep" / "rates.csv"));
    EXPECT_TRUE(fs::exists(root / "sweep" / "verdicts.txt"));
    for (const char* d : {"eps_0.4", "eps_0.2", "eps_0.1"}) EXPECT_TRUE(fs::is_directory(root / "sweep" / d)) << d;
    ASSERT_EQ(res.verdicts.size(), 3u);
    EXPECT_EQ(parse_verdicts(read_text(root / "sweep" / "verdicts.txt")).size(), 3u);
    // (12 norm + 9 stress + 4 bound) quantities times 3 eps, plus the column row.
    EXPECT_EQ(count_rows(read_text(root / "sweep" / "rates.csv")), 25u * 3u + 1u);
}

TEST(App, EveryOutputFileEchoesTheResolvedConfiguration) {
    const fs::path root = scratch();
    std::ostringstream log;
    const RunConfig cfg = small_config(Command::SweepEpsilon);
    const RunResult res = run(cfg, root, log);
    const std::string echo = to_ini(cfg);
    for (const auto& f : res.files) {
        const std::string text = read_text(f);
        std::string stripped;
        std::istringstream is(text);
        for (std::string line; std::getline(is, line);)
            if (line.rfind("# ", 0) == 0) stripped += line.substr(2, line.find_last_not_of('\r') - 1) + "\n";
        EXPECT_NE(stripped.find(echo), std::string::npos) << f;
    }
}

TEST(App, RepeatedSweepsAreBitwiseIdentical) {
    const fs::path root = scratch();
    std::ostringstream log;
    const RunConfig cfg = small_config(Command::SweepEpsilon);
    const RunResult a = run(cfg, root / "a", log);
    const RunResult b = run(cfg, root / "b", log);
    ASSERT_EQ(a.files.size(), b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) {
        EXPECT_EQ(fs::relative(a.files[i], root / "a"), fs::relative(b.files[i], root / "b"));
        EXPECT_EQ(read_text(a.files[i]), read_text(b.files[i])) << a.files[i];
    }
}

TEST(App, MmsOrderTableHasTwoRateRowsPerQuantity) {
    const fs::path root = scratch();
    std::ostringstream log;
    RunConfig cfg = small_config(Command::Mms);
    cfg.mms_study = "membrane";
    cfg.mms_membrane_cells = {16, 32, 64};
    const RunResult res = run(cfg, root, log);
    const std::string orders = read_text(root / "mms" / "orders.csv");
    EXPECT_EQ(count_rows(orders), 1u + 2u * 2u);
    std::istringstream is(orders);
    int inplane = 0, pressure = 0;
    for (std::string line; std::getline(is, line);) {
        inplane += line.rfind("membrane,inplane,", 0) == 0;
        pressure += line.rfind("membrane,mean_pressure,", 0) == 0;
    }
    EXPECT_EQ(inplane, 2);
    EXPECT_EQ(pressure, 2);
    EXPECT_TRUE(res.all_pass());
}

TEST(App, LimitAndSlabRunsWriteStatesEnergyAndVerdicts) {
    const fs::path root = scratch();
    std::ostringstream log;
    RunConfig cfg = small_config(Command::SolveLimit);
    cfg.output_every = 2;
    cfg.write_vtk = true;
    const RunResult lim = run(cfg, root, log);
    for (const char* f : {"state_0000.csv", "state_0002.csv", "state_0004.csv", "state_0004.vtk", "energy.csv", "verdicts.txt"})
        EXPECT_TRUE(fs::exists(root / "limit" / f)) << f;
    EXPECT_TRUE(lim.all_pass());
    EXPECT_EQ(count_rows(read_text(root / "limit" / "energy.csv")), 1u + 4u);

    cfg.command = Command::Solve3D;
    const RunResult slab = run(cfg, root, log);
    EXPECT_TRUE(fs::exists(root / "slab" / "eps_0.1" / "state_0004.csv"));
    EXPECT_TRUE(slab.all_pass());
}

TEST(App, ReportAggregatesVerdictFilesAndFlagsFailures) {
    const fs::path root = scratch();
    write_text(root / "a" / "verdicts.txt", "# header\nx PASS 1 2\n");
    write_text(root / "b" / "c" / "verdicts.txt", "y FAIL 5 3\n");
    std::ostringstream log;
    const RunResult res = run(small_config(Command::Report), root, log);
    ASSERT_EQ(res.verdicts.size(), 2u);
    EXPECT_EQ(res.verdicts[0].id, "a/x");
    EXPECT_EQ(res.verdicts[1].id, "b/c/y");
    EXPECT_FALSE(res.all_pass());
    const std::string report = read_text(root / "report.txt");
    EXPECT_NE(report.find("b/c/y FAIL 5 3\n"), std::string::npos);
    EXPECT_THROW(run(small_config(Command::Report), root / "missing", log), Error);
}
