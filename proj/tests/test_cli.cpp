// End-to-end tests of the mixpot command line tool. Each test runs the built
// binary in a scratch directory and checks exit status, stdout and artifacts.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mixpot/io.hpp"

namespace fs = std::filesystem;
using namespace mixpot;
using io::json;

namespace {

struct CliRun {
    int status = -1;
    std::string out;
    std::string err;
};

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("mixpot_cli_" + std::string(info->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_config(const std::string& name, const json& j) {
        const fs::path f = dir_ / name;
        std::ofstream(f) << j.dump(2);
        return f;
    }

    CliRun run(const std::string& args) {
        const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd =
            std::string("\"") + MIXPOT_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
        CliRun r;
        const int raw = std::system(cmd.c_str());
        r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        r.out = io::read_file(out);
        r.err = io::read_file(err);
        return r;
    }

    fs::path dir_;
};

// Small 2D scene shared by the solve and cache tests.
json small_solve() {
    return json{{"command", "solve"},
                {"params", {{"s", 0.5}, {"p", 2.0}}},
                {"grid", {{"h", 1.0 / 16.0}, {"omega_radius", 0.4}}},
                {"scene", {{"exterior", "const(1.5)"}}}};
}

}  // namespace

TEST_F(CliTest, NoSubcommandIsAnError) {
    const CliRun r = run("");
    EXPECT_EQ(r.status, 1);
}

TEST_F(CliTest, HelpExitsZero) {
    const CliRun r = run("--help");
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("experiment"), std::string::npos);
}

TEST_F(CliTest, InvalidSExitsOneWithRangeMessage) {
    const auto cfg = write_config("bad.json", json{{"command", "experiment"}, {"params", {{"s", 1.2}}}});
    const CliRun r = run("experiment --config \"" + cfg.string() + "\"");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("requires s in (0,1)"), std::string::npos) << r.err;
}

TEST_F(CliTest, EveryViolationIsListed) {
    const auto cfg = write_config("bad.json", json{{"command", "potential"}, {"params", {{"s", 1.2}, {"p", 1.2}}}});
    const CliRun r = run("potential --config \"" + cfg.string() + "\"");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("requires s in (0,1)"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("requires p > 2 - 1/n"), std::string::npos) << r.err;
}

TEST_F(CliTest, UnknownKeysAndExperimentsRejected) {
    const auto cfg = write_config("bad.json", json{{"command", "experiment"},
                                                   {"params", {{"q", 3}}},
                                                   {"experiments", {"no_such_thing"}}});
    const CliRun r = run("experiment --config \"" + cfg.string() + "\"");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("unknown key 'q'"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("unknown experiment"), std::string::npos) << r.err;

    const CliRun r2 = run("experiment no_such_thing");
    EXPECT_EQ(r2.status, 1);
}

TEST_F(CliTest, CommandMismatchRejected) {
    const auto cfg = write_config("c.json", json{{"command", "solve"}});
    const CliRun r = run("potential --config \"" + cfg.string() + "\"");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("config is for 'solve'"), std::string::npos) << r.err;
}

TEST_F(CliTest, MissingMeasureFileRejected) {
    const auto cfg = write_config("c.json", json{{"command", "potential"}, {"scene", {{"measure", "nowhere.json"}}}});
    const CliRun r = run("potential --config \"" + cfg.string() + "\"");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("does not exist"), std::string::npos) << r.err;
}

TEST_F(CliTest, EmptyExperimentListExitsZeroWithoutArtifacts) {
    const auto cfg = write_config("e.json", json{{"command", "experiment"}, {"experiments", json::array()}});
    const fs::path out = dir_ / "out";
    const CliRun r = run("experiment --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"");
    EXPECT_EQ(r.status, 0) << r.err;
    EXPECT_FALSE(fs::exists(out));
}

TEST_F(CliTest, AuditWithNoExperimentsIsTrivialPass) {
    const auto cfg = write_config("a.json", json{{"command", "audit"}});
    const CliRun r = run("audit --config \"" + cfg.string() + "\"");
    EXPECT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("max discrepancy 0"), std::string::npos) << r.out;
}

// Dirac at distance d = 0.1 from the centre, n = 2, p = 2, beta = 1:
// Riesz I_1(R) = 1/d - 1/R and Wolff W(R) = log(R/d) for R > d, zero below.
TEST_F(CliTest, PotentialOfDiracMatchesAntiderivative) {
    fs::path mfile = dir_ / "dirac.json";
    std::ofstream(mfile) << json{{"dim", 2}, {"atoms", {{{"x", {0.1, 0.0}}, {"w", 1.0}}}}}.dump();
    const std::vector<double> radii{0.05, 0.2, 0.5, 1.0};
    const auto cfg = write_config("p.json", json{{"command", "potential"},
                                                 {"params", {{"p", 2.0}}},
                                                 {"scene", {{"measure", "dirac.json"}}},
                                                 {"potential", {{"center", {0.0, 0.0}}, {"radii", radii}, {"beta", 1.0}}}});
    const fs::path out = dir_ / "out";
    const CliRun r = run("potential --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"");
    ASSERT_EQ(r.status, 0) << r.err;

    std::istringstream csv(io::read_file(out / "potential.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "rho,riesz,wolff");
    std::size_t k = 0;
    while (std::getline(csv, line)) {
        ASSERT_LT(k, radii.size());
        double rho, riesz, wolff;
        char c1, c2;
        std::istringstream ls(line);
        ls >> rho >> c1 >> riesz >> c2 >> wolff;
        const double R = radii[k];
        EXPECT_DOUBLE_EQ(rho, R);
        const double I = R > 0.1 ? 1.0 / 0.1 - 1.0 / R : 0.0;
        const double W = R > 0.1 ? std::log(R / 0.1) : 0.0;
        EXPECT_NEAR(riesz, I, 1e-10 * std::max(1.0, I));
        EXPECT_NEAR(wolff, W, 1e-10 * std::max(1.0, W));
        ++k;
    }
    EXPECT_EQ(k, radii.size());
    // R = 1 row is the headline value 9
    EXPECT_NE(r.out.find("riesz=9"), std::string::npos) << r.out;
}

TEST_F(CliTest, ArtifactsCarryHashAndChecksums) {
    const auto cfg = write_config("s.json", small_solve());
    const fs::path out = dir_ / "out";
    const CliRun r = run("solve --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"");
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("verdict=pass"), std::string::npos);

    const io::RunConfig c = io::RunConfig::load(cfg);
    const json manifest = json::parse(io::read_file(out / "manifest.json"));
    EXPECT_EQ(manifest["config_hash"], c.hash());
    for (const char* f : {"config.json", "u.csv", "u.json", "solve.json"}) EXPECT_TRUE(manifest["files"].contains(f)) << f;
    EXPECT_EQ(json::parse(io::read_file(out / "solve.json"))["config_hash"], c.hash());

    // constant exterior data is reproduced by the solve
    const GridFunction u = io::read_grid_function(out / "u.json", c.hash());
    double err = 0.0;
    for (std::size_t i = 0; i < u.grid->size(); ++i) {
        err = std::max(err, std::abs(u.values[i] - 1.5));
    }
    EXPECT_LT(err, 1e-8);

    io::ArtifactDir d(out, c.hash());
    EXPECT_NO_THROW(d.read("u.csv"));
    std::ofstream(out / "u.csv", std::ios::app) << "tampered\n";
    EXPECT_THROW(d.read("u.csv"), Error);
}

TEST_F(CliTest, MixingArtifactsFromDifferentHashesRefused) {
    const auto cfg1 = write_config("s1.json", small_solve());
    json other = small_solve();
    other["scene"]["exterior"] = "const(2)";
    const auto cfg2 = write_config("s2.json", other);
    const fs::path out = dir_ / "out";
    ASSERT_EQ(run("solve --config \"" + cfg1.string() + "\" --out \"" + out.string() + "\"").status, 0);
    const std::string before = io::read_file(out / "u.csv");
    const CliRun r = run("solve --config \"" + cfg2.string() + "\" --out \"" + out.string() + "\"");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("refusing to mix artifacts"), std::string::npos) << r.err;
    EXPECT_EQ(io::read_file(out / "u.csv"), before);
    // the same config may write again
    EXPECT_EQ(run("solve --config \"" + cfg1.string() + "\" --out \"" + out.string() + "\"").status, 0);
}

TEST_F(CliTest, CorruptedKernelCacheDetected) {
    const auto cfg = write_config("s.json", small_solve());
    const fs::path cache = dir_ / "cache";
    const std::string args = "solve --config \"" + cfg.string() + "\" --cache \"" + cache.string() + "\"";
    const CliRun first = run(args);
    ASSERT_EQ(first.status, 0) << first.err;
    fs::path entry;
    for (const auto& e : fs::directory_iterator(cache))
        if (e.path().extension() == ".kw") entry = e.path();
    ASSERT_FALSE(entry.empty());
    EXPECT_EQ(run(args).status, 0);  // warm cache

    std::fstream f(entry, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-3, std::ios::end);
    f.put('\x5a');
    f.close();
    const CliRun r = run(args);
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("checksum mismatch"), std::string::npos) << r.err;
}

TEST_F(CliTest, ConfigRoundTripIsIdentity) {
    const json j{{"command", "experiment"},
                 {"experiments", {"comparison_measure", "energy_inequalities"}},
                 {"params", {{"s", 0.25}, {"p", 2.5}, {"nu_A", 0.5}}},
                 {"grid", {{"h", 0.03125}, {"lo", {-0.5, -0.5}}, {"hi", {0.5, 0.5}}}},
                 {"scene", {{"exterior", "affine(0,1,0)+bump(0.3,0.1,0.2,0.05)"}, {"far_field", nullptr}}},
                 {"kernel", {{"variant", "scaled"}, {"kappa", 0.5}}},
                 {"thresholds", {{"ratio_spread", 7.5}}},
                 {"seed", 42}};
    const io::RunConfig a = io::RunConfig::from_json(j);
    const io::RunConfig b = io::RunConfig::parse(a.to_string());
    EXPECT_EQ(a.to_string(), b.to_string());
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(b.command, "experiment");
    EXPECT_EQ(b.experiments, a.experiments);
    const ExperimentSetup S = b.setup_for("energy_inequalities");
    EXPECT_DOUBLE_EQ(S.params.s, 0.25);
    EXPECT_DOUBLE_EQ(S.params.p, 2.5);
    EXPECT_DOUBLE_EQ(S.thr.ratio_spread, 7.5);
    EXPECT_EQ(S.seed, 42u);
    EXPECT_EQ(S.config_hash, a.hash());
    // a changed value changes the hash
    json k = j;
    k["seed"] = 43;
    EXPECT_NE(io::RunConfig::from_json(k).hash(), a.hash());
}

TEST_F(CliTest, ShippedConfigsParse) {
    const fs::path cfgdir = fs::path(MIXPOT_SOURCE_DIR) / "configs";
    ASSERT_TRUE(fs::exists(cfgdir));
    int n = 0;
    for (const auto& e : fs::directory_iterator(cfgdir)) {
        if (e.path().extension() != ".json" || e.path().filename().string().rfind("measure_", 0) == 0) continue;
        EXPECT_NO_THROW(io::RunConfig::load(e.path())) << e.path();
        ++n;
    }
    EXPECT_GT(n, 0);
}

TEST_F(CliTest, ExperimentWritesJsonAndCsv) {
    const auto cfg = write_config("x.json", json{{"command", "experiment"},
                                                 {"experiments", {"comparison_measure"}},
                                                 {"grid", {{"h", 1.0 / 24.0}}}});
    const fs::path out = dir_ / "out";
    const CliRun r = run("experiment --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"");
    ASSERT_EQ(r.status, 0) << r.err << r.out;
    EXPECT_NE(r.out.find("comparison_measure exponent="), std::string::npos);
    EXPECT_NE(r.out.find("verdict=pass"), std::string::npos);
    const json rep = json::parse(io::read_file(out / "comparison_measure.json"));
    EXPECT_EQ(rep["name"], "comparison_measure");
    EXPECT_TRUE(rep["verdict"].get<bool>());
    EXPECT_EQ(io::read_file(out / "comparison_measure.csv").substr(0, 2), "t,");

    const CliRun a = run("audit comparison_measure --config \"" + cfg.string() + "\"");
    EXPECT_EQ(a.status, 1) << "config command is experiment, audit must refuse it";
}
