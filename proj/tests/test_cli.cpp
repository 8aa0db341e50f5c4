#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string bin() {
    const char* b = std::getenv("L1LAB_BIN");
    return b ? b : "l1lab";
}
fs::path configs() {
    const char* c = std::getenv("L1LAB_CONFIGS");
    return c ? c : "configs";
}
fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("l1lab_test_" + name);
    fs::remove_all(p);
    return p;
}

int run(const std::string& args) {
    const int rc = std::system((bin() + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path write_config(const std::string& name, const nlohmann::json& j) {
    fs::path p = fs::temp_directory_path() / (name + ".json");
    std::ofstream(p) << j.dump();
    return p;
}

}  // namespace

TEST(Cli, RegistryAndUsage) {
    EXPECT_EQ(run("registry"), 0);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
}

TEST(Cli, ValidateShippedConfigs) {
    for (const auto& e : fs::directory_iterator(configs())) {
        const std::string name = e.path().filename().string();
        const int want = name.rfind("bad_", 0) == 0 ? 2 : 0;
        EXPECT_EQ(run("validate " + e.path().string()), want) << name;
    }
}

TEST(Cli, ConfigErrorsExitTwo) {
    EXPECT_EQ(run("run /nonexistent/config.json"), 2);
    EXPECT_EQ(run("run " + write_config("noseed", {{"kind", "growth"}, {"model", {{"group", {{"kind", "free"}, {"rank", 2}}}}}}).string()),
              2);
    EXPECT_EQ(run("run " + write_config("badcocycle", {{"kind", "eta"},
                                                       {"seed", 1},
                                                       {"model", {{"group", {{"kind", "cyclic"}, {"order", 5}}}}},
                                                       {"cocycle", "delta_typo"}})
                               .string()),
              2);
}

TEST(Cli, GrowthRunWritesDeterministicReport) {
    const fs::path a = scratch("growth_a"), b = scratch("growth_b");
    const std::string cfg = (configs() / "growth_F2.json").string();
    ASSERT_EQ(run("run " + cfg + " -o " + a.string()), 0);
    ASSERT_EQ(run("run " + cfg + " -o " + b.string()), 0);
    EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
    EXPECT_EQ(slurp(a / "ball_counts.csv"), slurp(b / "ball_counts.csv"));
    const auto rep = nlohmann::json::parse(slurp(a / "report.json"));
    EXPECT_TRUE(rep["pass"].get<bool>());
    EXPECT_EQ(rep["config_hash"].get<std::string>().size(), 64u);
    for (const auto& f : rep["files"]) EXPECT_TRUE(fs::exists(a / f.get<std::string>())) << f;
    EXPECT_TRUE(fs::exists(a / "timing.json"));
}

TEST(Cli, RefusalExitsOneWithReason) {
    const fs::path o = scratch("refused");
    EXPECT_EQ(run("run " + (configs() / "vanishing_refused.json").string() + " -o " + o.string()), 1);
    const auto rep = nlohmann::json::parse(slurp(o / "report.json"));
    EXPECT_FALSE(rep["pass"].get<bool>());
    EXPECT_TRUE(rep.contains("refusal"));
}

TEST(Cli, ProductAndCocycleChecksPass) {
    EXPECT_EQ(run("run " + (configs() / "product_check.json").string() + " -o " + scratch("prod").string()), 0);
    EXPECT_EQ(run("run " + (configs() / "cocycle_check_area.json").string() + " -o " + scratch("coc").string()), 0);
}

TEST(Cli, EtaOnCyclicGroup) {
    const fs::path o = scratch("eta");
    ASSERT_EQ(run("run " + (configs() / "eta_Z5.json").string() + " -o " + o.string()), 0);
    const auto rep = nlohmann::json::parse(slurp(o / "report.json"));
    EXPECT_NEAR(rep["results"]["eta_u"][0].get<double>(), -0.6472135954999579, 1e-6);
}
