#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(GRAPHSHIFT_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("graphshift_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& p, const nlohmann::json& j) { std::ofstream(p) << j.dump(); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Cli, HypothesesFullShift) {
    const auto dir = scratch("hyp");
    EXPECT_EQ(run("hypotheses --out " + dir.string() + " --strict"), 0);
    const auto j = nlohmann::json::parse(slurp(dir / "hypotheses.json"));
    EXPECT_TRUE(j["pass"].get<bool>());
}

TEST(Cli, HypothesesFailureIsExitTwoUnderStrict) {
    const auto dir = scratch("hyp_fail");
    write(dir / "spec.json", {{"alphabet_size", 2}, {"forbidden", {{1, 1}, {2, 2}}}});
    EXPECT_EQ(run("hypotheses --spec " + (dir / "spec.json").string() + " --out " + dir.string() + " --strict"), 2);
    EXPECT_EQ(run("hypotheses --spec " + (dir / "spec.json").string() + " --out " + dir.string()), 0);
}

TEST(Cli, ScanWritesAllOutputs) {
    const auto dir = scratch("scan");
    write(dir / "cfg.json", {{"energies", {{"points", 4}}}, {"n", 200}, {"samples", 5}, {"seed", 3}});
    ASSERT_EQ(run("lyapunov-scan --config " + (dir / "cfg.json").string() + " --out " + dir.string()), 0);
    for (const char* f : {"lyapunov-scan.csv", "lyapunov-scan.json", "lyapunov-scan.manifest.json"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto csv = slurp(dir / "lyapunov-scan.csv");
    EXPECT_EQ(csv.rfind("E,k,e_tilde,L,stderr,n,samples\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    const auto manifest = nlohmann::json::parse(slurp(dir / "lyapunov-scan.manifest.json"));
    EXPECT_EQ(manifest["seed"], 3);
}

TEST(Cli, SeedFlagOverridesAndReruns) {
    const auto dir = scratch("seed");
    write(dir / "cfg.json", {{"energies", {{"points", 2}}}, {"n", 100}, {"samples", 3}, {"seed", 3}});
    const auto cfg = (dir / "cfg.json").string();
    ASSERT_EQ(run("lyapunov-scan --config " + cfg + " --out " + (dir / "a").string() + " --seed 11"), 0);
    ASSERT_EQ(run("lyapunov-scan --config " + cfg + " --out " + (dir / "b").string() + " --seed 11 --threads 2"), 0);
    ASSERT_EQ(run("lyapunov-scan --config " + cfg + " --out " + (dir / "c").string()), 0);
    EXPECT_EQ(slurp(dir / "a" / "lyapunov-scan.csv"), slurp(dir / "b" / "lyapunov-scan.csv"));
    EXPECT_NE(slurp(dir / "a" / "lyapunov-scan.csv"), slurp(dir / "c" / "lyapunov-scan.csv"));
}

TEST(Cli, CorruptedGreenCheckFailsStrict) {
    const auto dir = scratch("green");
    write(dir / "good.json", {{"N", 20}, {"instances", 5}, {"energies", {{"points", 3}}}});
    write(dir / "bad.json", {{"N", 20}, {"instances", 5}, {"energies", {{"points", 3}}}, {"corrupt_alpha", 0.01}});
    EXPECT_EQ(run("green-check --strict --config " + (dir / "good.json").string() + " --out " + dir.string()), 0);
    EXPECT_EQ(run("green-check --strict --config " + (dir / "bad.json").string() + " --out " + dir.string()), 2);
}

TEST(Cli, BadInputsExitOne) {
    const auto dir = scratch("bad");
    write(dir / "typo.json", {{"sampels", 10}});
    EXPECT_EQ(run("lyapunov-scan --config " + (dir / "typo.json").string() + " --out " + dir.string()), 1);
    EXPECT_EQ(run("no-such-command"), 1);
    write(dir / "singular.json", {{"energies", {{"k", {0.0}}}}});
    EXPECT_EQ(run("lyapunov-scan --config " + (dir / "singular.json").string() + " --out " + dir.string()), 1);
}
