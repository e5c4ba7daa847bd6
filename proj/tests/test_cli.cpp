#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wsob/cli.hpp"

using namespace wsob;
using namespace wsob::cli;
namespace fs = std::filesystem;

namespace
{

Config config(const std::string& text, fs::path dir = {})
{
    std::istringstream is(text);
    return parse_config(is, std::move(dir));
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("wsob_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

int run_binary(const std::string& args)
{
    const std::string cmd = std::string(WSOB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream os(p);
    os << text;
}

const char* kExponents = "[exponents]\nn = 2\np = 2\nalpha = 0\ngamma = 3\n";

TEST(Config, SectionsAndKeys)
{
    const auto cfg = config("; comment\n[exponents]\nn = 2\np = 3/2\n\n[probe]\ns = 5, 7\n");
    ASSERT_EQ(cfg.sections.size(), 2u);
    EXPECT_EQ(cfg.sections.at("exponents").at("p"), "3/2");
    EXPECT_EQ(cfg.sections.at("probe").at("s"), "5, 7");
}

TEST(Config, MalformedRejected)
{
    EXPECT_THROW(config("n = 2\n"), ConfigError);
    EXPECT_THROW(config("[nonsense]\nn = 2\n"), ConfigError);
    EXPECT_THROW(config("[report]\nn = 2\n"), ConfigError);
    EXPECT_THROW(config("[exponents\nn = 2\n"), ConfigError);
    EXPECT_THROW(config("[exponents]\nn = 2\nn = 3\n"), ConfigError);
    EXPECT_THROW(config(""), ConfigError);
}

TEST(Config, TypedAccess)
{
    const Section s("probe", {{"a", "1.5"}, {"b", "x"}, {"c", "1, 2,3"}, {"d", "7"}, {"e", "nan"}});
    EXPECT_EQ(s.real("a"), 1.5);
    EXPECT_THROW(s.real("b"), ConfigError);
    EXPECT_EQ(s.reals("c"), (std::vector<double>{1.0, 2.0, 3.0}));
    EXPECT_EQ(s.integer("d"), 7);
    EXPECT_THROW(s.integer("a"), ConfigError);
    EXPECT_THROW(s.real("e"), ConfigError);
    EXPECT_THROW(s.real("missing"), ConfigError);
    EXPECT_EQ(s.real("missing", 2.0), 2.0);
}

TEST(Config, UnknownAndMissingKeysRejected)
{
    EXPECT_THROW(evaluate(Command::Exponents, config("[exponents]\nn = 2\np = 2\ngamma = 3\nbogus = 1\n"), {}),
                 ConfigError);
    EXPECT_THROW(evaluate(Command::Exponents, config("[exponents]\nn = 2\ngamma = 3\n"), {}), ConfigError);
    EXPECT_THROW(evaluate(Command::Probe, config(kExponents), {}), ConfigError);
    EXPECT_THROW(evaluate(Command::Exponents, config("[exponents]\nn = 2\np = 2\ngamma = 3\nsigma = 2\n"), {}),
                 ConfigError);
}

TEST(Run, ExponentsThresholdSix)
{
    const auto rr = evaluate(Command::Exponents, config(kExponents), {});
    EXPECT_EQ(rr.exit_code, kOk);
    const auto& th = rr.report["result"]["thresholds"][0];
    EXPECT_EQ(th["formula"], "Thm6");
    EXPECT_EQ(th["s_max"]["exact"], "6");
}

TEST(Run, ApCheckViolationIsSuccess)
{
    const auto rr = evaluate(Command::ApCheck, config("[ap-check]\nn = 2\np = 2\nalpha = 3\n"), {});
    EXPECT_EQ(rr.exit_code, kOk);
    EXPECT_EQ(rr.report["result"]["verdict"], "Violated");
    EXPECT_TRUE(rr.files.count("balls.csv"));
}

TEST(Run, ValidityViolationExitsThree)
{
    const auto rr = evaluate(Command::Exponents, config("[exponents]\nn = 2\np = 2\nalpha = 0\ngamma = 3/2\n"), {});
    EXPECT_EQ(rr.exit_code, kValidityError);
    EXPECT_EQ(rr.report["status"], "validity");
    const auto mol = evaluate(Command::Mollify, config("[mollify]\nalpha = 3\nfunction = kink\n"), {});
    EXPECT_EQ(mol.exit_code, kValidityError);
}

TEST(Run, ParameterErrorsAreConfigErrors)
{
    EXPECT_THROW(evaluate(Command::Distortion,
                          config("[distortion]\np = 2\nq = 3\nr = 3\ns = 2\na = 0.5\ngamma = 3\n"), {}),
                 ConfigError);
    EXPECT_THROW(evaluate(Command::Mollify, config("[mollify]\nradii = 0.2\n"), {}), ConfigError);
    EXPECT_THROW(evaluate(Command::Solve, config("[solve]\ndomain = cusp\nrhs = manufactured\n"), {}), ConfigError);
    EXPECT_THROW(evaluate(Command::Probe, config("[probe]\np = 2\ngamma = 3\ns = 5\neps_min = 1e-3\n"), {}),
                 ConfigError);
}

TEST(Report, SchemaSeedAndEmbeddedConfig)
{
    const auto cfg = config(kExponents);
    const auto rr = evaluate(Command::Exponents, cfg, {"unused", 42});
    EXPECT_EQ(rr.report["schema"], 1);
    EXPECT_EQ(rr.report["seed"], 42);
    EXPECT_EQ(rr.report["command"], "exponents");
    EXPECT_FALSE(rr.report.contains("threads"));
    const auto& embedded = rr.report["config"]["exponents"];
    for (const auto& [k, v] : cfg.sections.at("exponents"))
        EXPECT_EQ(embedded[k], v) << k;
    EXPECT_EQ(embedded.size(), cfg.sections.at("exponents").size());
}

TEST(Report, InfinityWrittenAsString)
{
    const auto rr = evaluate(Command::Exponents,
                             config("[exponents]\nn = 2\np = 2\nalpha = 0\ngamma = 3\np0 = 3/2\nq0 = 6\n"), {});
    EXPECT_EQ(rr.report["result"]["transfer"]["bound"]["s_max"]["value"], "inf");
}

TEST(Report, DeterministicAcrossRunsAndThreads)
{
    const auto cfg = config("[ap-check]\nn = 2\np = 2\nalpha = 1\nrandom_count = 6\nradius_count = 3\n"
                            "[probe]\np = 2\ngamma = 3\ns = 5\n"
                            "[solve]\nh = 0.1\nrhs = manufactured\nalpha = 1\n");
    const auto a = evaluate(Command::Report, cfg, {"unused", 7});
    const auto b = evaluate(Command::Report, cfg, {"unused", 7});
    EXPECT_EQ(a.files, b.files);
    set_thread_count(4);
    const auto c = evaluate(Command::Report, cfg, {"unused", 7});
    set_thread_count(1);
    EXPECT_EQ(a.files, c.files);
    const auto d = evaluate(Command::Report, cfg, {"unused", 8});
    EXPECT_NE(a.files.at("report.json"), d.files.at("report.json"));
}

TEST(Report, ReportCommandRunsEverySection)
{
    const auto rr = evaluate(Command::Report, config(std::string(kExponents) + "[probe]\np = 2\ngamma = 3\ns = 5\n"), {});
    EXPECT_EQ(rr.exit_code, kOk);
    EXPECT_EQ(rr.report["result"]["exponents"]["status"], "ok");
    EXPECT_EQ(rr.report["result"]["probe"]["result"]["probes"][0]["verdict"], "Bounded");
    EXPECT_TRUE(rr.files.count("probe_probe.csv"));
}

TEST(Batch, CsvRowsPerQueryAndFormula)
{
    const fs::path dir = scratch("batch");
    fs::create_directories(dir);
    write_file(dir / "q.csv", "n,p,alpha,gamma\n2,2,0,3\n3,2,1,4\n2,2,0,2\n");
    const auto rr = evaluate(Command::Exponents, config("[exponents]\nformulas = thm6, thm8\nbatch = q.csv\n", dir), {});
    EXPECT_EQ(rr.exit_code, kOk);
    EXPECT_EQ(rr.report["result"]["rows"], 6);
    EXPECT_EQ(rr.report["result"]["invalid_rows"], 2);
    const std::string csv = rr.files.at("exponents.csv");
    EXPECT_NE(csv.find("2,2,0,3,1,Thm6,true,6,6,"), std::string::npos);
    EXPECT_NE(csv.find("3,2,1,4,1,Thm6,true,10/3,"), std::string::npos);
    write_file(dir / "bad.csv", "n,p,alpha\n2,2,0\n");
    EXPECT_THROW(evaluate(Command::Exponents, config("[exponents]\nbatch = bad.csv\n", dir), {}), ConfigError);
    fs::remove_all(dir);
}

TEST(Binary, ExitCodesAndFiles)
{
    const fs::path dir = scratch("bin");
    fs::create_directories(dir);
    write_file(dir / "ok.ini", kExponents);
    write_file(dir / "bad.ini", "[exponents]\nn = two\n");
    write_file(dir / "invalid.ini", "[exponents]\nn = 2\np = 2\nalpha = 0\ngamma = 1\n");

    EXPECT_EQ(run_binary("exponents --config " + (dir / "ok.ini").string() + " --out " + (dir / "ok").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "ok" / "report.json"));

    EXPECT_EQ(run_binary("exponents --config " + (dir / "bad.ini").string() + " --out " + (dir / "bad").string()), 2);
    EXPECT_FALSE(fs::exists(dir / "bad"));
    EXPECT_EQ(run_binary("exponents --config " + (dir / "missing.ini").string() + " --out " + (dir / "m").string()), 2);
    EXPECT_FALSE(fs::exists(dir / "m"));
    EXPECT_EQ(run_binary("exponents --out " + (dir / "x").string()), 2);
    EXPECT_EQ(run_binary("frobnicate --config " + (dir / "ok.ini").string()), 2);

    EXPECT_EQ(run_binary("exponents --config " + (dir / "invalid.ini").string() + " --out " + (dir / "inv").string()),
              3);
    EXPECT_TRUE(fs::exists(dir / "inv" / "report.json"));
    fs::remove_all(dir);
}

TEST(Binary, SameBytesTwice)
{
    const fs::path dir = scratch("twice");
    fs::create_directories(dir);
    write_file(dir / "c.ini", "[ap-check]\nn = 2\np = 2\nalpha = 1\nrandom_count = 4\nradius_count = 2\n");
    for (const char* out : {"a", "b"})
        ASSERT_EQ(run_binary("ap-check --config " + (dir / "c.ini").string() + " --out " + (dir / out).string() +
                             " --seed 3 --threads 2"),
                  0);
    auto slurp = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(is), {});
    };
    for (const char* f : {"report.json", "balls.csv"})
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    fs::remove_all(dir);
}

}// namespace
