#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spheremax/fit.hpp"
#include "spheremax/harness/config.hpp"
#include "spheremax/harness/report.hpp"
#include "spheremax/harness/run.hpp"
#include "spheremax/random.hpp"

using namespace spheremax;
using namespace spheremax::harness;

namespace {

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("spheremax_harness_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST(FitLogLog, ExactPowerLaw)
{
    std::vector<std::pair<double, double>> pts;
    for (double x : {1.0, 2.0, 3.0, 5.0, 8.0}) {
        pts.emplace_back(x, 8.0 * x * x);
    }
    const auto f = fit_loglog(pts);
    EXPECT_NEAR(f.slope, 2.0, 1e-13);
    EXPECT_NEAR(f.intercept, 3.0, 1e-13);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-13);
    ASSERT_EQ(f.points.size(), 5u);
    EXPECT_NEAR(f.points[1].first, 1.0, 1e-15);
    EXPECT_NEAR(f.points[1].second, 5.0, 1e-15);

    pts[2].second *= 10.0;
    EXPECT_LT(fit_loglog(pts).r_squared, 0.99);
}

TEST(FitLogLog, SeededNoise)
{
    RandomStream rng(81, 0);
    std::vector<std::pair<double, double>> pts;
    for (double x = 1.0; x <= 1024.0; x *= 1.5) {
        pts.emplace_back(x, std::pow(x, -1.5) * (1.0 + 0.01 * (2.0 * rng.uniform() - 1.0)));
    }
    EXPECT_NEAR(fit_loglog(pts).slope, -1.5, 0.05);
}

TEST(FitLogLog, Errors)
{
    EXPECT_THROW(fit_loglog(std::vector<std::pair<double, double>>{{1.0, 1.0}, {2.0, 2.0}}), std::invalid_argument);
    EXPECT_THROW(fit_loglog(std::vector<std::pair<double, double>>{{2.0, 1.0}, {2.0, 2.0}, {2.0, 3.0}}), std::invalid_argument);
    EXPECT_THROW(fit_loglog(std::vector<std::pair<double, double>>{{1.0, 1.0}, {2.0, -2.0}, {3.0, 3.0}}), std::invalid_argument);
}

TEST(Config, ResolveDefaultsAndValidation)
{
    ExperimentConfig c;
    c.experiment = "cex-divergence";
    const auto r = resolve(c);
    EXPECT_EQ(r.dims, std::vector<int>{1});
    EXPECT_EQ(r.j_min, 4);
    EXPECT_EQ(r.j_max, 20);
    EXPECT_EQ(r.r_min, 1024.0);
    EXPECT_EQ(r.epsilon, 0.1);
    EXPECT_NEAR(r.t_ratio, std::exp2(1.0 / 16.0), 1e-16);

    c.experiment = "squarefn-bound";
    c.n = 1;
    c.j_max = 4;
    const auto s = resolve(c);
    EXPECT_EQ(s.j_min, 3);
    EXPECT_EQ(s.j_max, 4);
    EXPECT_EQ(grid_size_for(s, 1), 256u);
    EXPECT_EQ(grid_size_for(s, 2), 32u);

    for (const auto& name : experiment_names()) {
        ExperimentConfig e;
        e.experiment = name;
        EXPECT_NO_THROW(resolve(e)) << name;
    }
    EXPECT_EQ(experiment_names().size(), 13u);

    ExperimentConfig bad;
    bad.experiment = "no-such-thing";
    EXPECT_THROW(resolve(bad), std::invalid_argument);
    bad.experiment = "partition-check";
    bad.epsilon = 0.5;
    EXPECT_THROW(resolve(bad), std::invalid_argument);
    bad.epsilon = 0.1;
    bad.j_min = 5;
    bad.j_max = 2;
    EXPECT_THROW(resolve(bad), std::invalid_argument);
    bad.j_max = 6;
    bad.t_ratio = 1.0;
    EXPECT_THROW(resolve(bad), std::invalid_argument);
    bad.t_ratio = 1.1;
    bad.n = 0;
    EXPECT_THROW(resolve(bad), std::invalid_argument);
}

TEST(Config, HashIsStableAndIgnoresPlumbing)
{
    ExperimentConfig a;
    a.experiment = "monotone-lemma";
    a.seed = 7;
    ExperimentConfig b = a;
    b.out = "/elsewhere";
    b.svg = true;
    b.workers = 3;
    EXPECT_EQ(config_hash(resolve(a)), config_hash(resolve(b)));
    ExperimentConfig c = a;
    c.seed = 8;
    EXPECT_NE(config_hash(resolve(a)), config_hash(resolve(c)));
    // canonical form: sorted keys, seed as a decimal string
    const std::string dump = to_json(resolve(a)).dump();
    EXPECT_LT(dump.find("\"dims\""), dump.find("\"epsilon\""));
    EXPECT_NE(dump.find("\"seed\":\"7\""), std::string::npos);
    EXPECT_EQ(config_hash(resolve(a)), fnv1a(dump));
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}

TEST(Report, NumRoundTrips)
{
    RandomStream rng(82, 0);
    for (int i = 0; i < 10000; ++i) {
        const double v = std::ldexp(rng.uniform() - 0.5, static_cast<int>(200.0 * rng.uniform()) - 100);
        EXPECT_EQ(std::strtod(num(v).c_str(), nullptr), v);
    }
    EXPECT_EQ(num(0.1), "0.1");
    EXPECT_EQ(num(1.0 / 3.0), "0.3333333333333333");
    EXPECT_EQ(num(INFINITY), "inf");
    EXPECT_EQ(num(NAN), "nan");
    EXPECT_EQ(num(42), "42");
    EXPECT_TRUE(jnum(INFINITY).is_string());
    EXPECT_TRUE(jnum(2.5).is_number());
}

TEST(Report, Checks)
{
    EXPECT_TRUE(check("a", 1.0, "<=", 1.0).pass);
    EXPECT_FALSE(check("a", 1.0, "<", 1.0).pass);
    EXPECT_TRUE(check("a", 2.0, ">", 1.0).pass);
    EXPECT_FALSE(check("a", NAN, ">=", 1.0).pass);
    EXPECT_TRUE(check("a", 0.0, "==", 0.0).pass);
    EXPECT_THROW(check("a", 0.0, "~", 0.0), std::invalid_argument);
    ExperimentResult r;
    r.experiment = "x";
    r.columns = {{"a", "1"}, {"b", "1"}};
    EXPECT_THROW(r.add_row({"1"}), std::logic_error);
    r.add_check("ok", 1.0, "<=", 2.0);
    EXPECT_TRUE(r.passed());
    r.add_check("bad", 3.0, "<=", 2.0);
    EXPECT_FALSE(r.passed());
}

TEST(Run, RegionTableReportsVertices)
{
    ExperimentConfig c;
    c.experiment = "region-table";
    c.n = 8;
    c.out = scratch("region").string();
    const auto out = run(c);
    EXPECT_TRUE(out.result.passed());
    const auto j = nlohmann::json::parse(slurp(out.json));
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["passed"], true);
    EXPECT_EQ(j["summary"]["P3_n8"], nlohmann::json({"6/11", "6/11", "12/11"}));
    EXPECT_EQ(j["summary"]["delta_8"], "1/10");
    EXPECT_EQ(j["config_hash"], hex64(config_hash(out.config)));
    const std::string csv = slurp(out.csv);
    EXPECT_EQ(csv.rfind("# spheremax-csv v1 experiment=region-table config_hash=" + hex64(config_hash(out.config)), 0), 0u);
    EXPECT_FALSE(std::filesystem::exists(std::filesystem::path(c.out) / "region-table.svg"));
    std::filesystem::remove_all(c.out);
}

TEST(Run, ByteIdenticalReruns)
{
    for (const std::string name : {"monotone-lemma", "region-table", "dsigma-decay"}) {
        ExperimentConfig c;
        c.experiment = name;
        c.n = name == "region-table" ? 2 : 1;
        c.seed = 11;
        c.svg = true;
        c.out = scratch("a").string();
        const auto first = run(c);
        c.out = scratch("b").string();
        c.workers = 1;
        const auto second = run(c);
        EXPECT_EQ(slurp(first.csv), slurp(second.csv)) << name;
        EXPECT_EQ(slurp(first.json), slurp(second.json)) << name;
        EXPECT_EQ(slurp(first.svg), slurp(second.svg)) << name;
        EXPECT_NE(slurp(first.svg).find("<svg"), std::string::npos);
        std::filesystem::remove_all(first.csv.parent_path());
        std::filesystem::remove_all(second.csv.parent_path());
    }
}

TEST(Run, DsigmaDecayN2Slope)
{
    ExperimentConfig c;
    c.experiment = "dsigma-decay";
    c.n = 2;
    c.out = scratch("dsigma").string();
    const auto out = run(c);
    EXPECT_TRUE(out.result.passed());
    ASSERT_FALSE(out.result.series.empty());
    EXPECT_NEAR(out.result.series.front().fit.slope, -1.5, 0.1);
    std::filesystem::remove_all(c.out);
}

TEST(Run, UnknownExperimentThrows)
{
    ExperimentConfig c;
    c.experiment = "region-tabel";
    EXPECT_THROW(run(c), std::invalid_argument);
    ResolvedConfig r;
    r.experiment = "nope";
    EXPECT_THROW(run_experiment(r), std::invalid_argument);
}
