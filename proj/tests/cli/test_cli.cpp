#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(MFGELIM_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path(::testing::TempDir()) / ("mfgelim_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Cli, GenEnvIsByteIdenticalAcrossRuns) {
  const fs::path a = fresh_dir("gen_a");
  const fs::path b = fresh_dir("gen_b");
  ASSERT_EQ(run("gen-env --preset toy --seed 4 --out " + a.string()), 0);
  ASSERT_EQ(run("gen-env --preset toy --seed 4 --out " + b.string()), 0);
  EXPECT_EQ(slurp(a / "class.mfgclass.json"), slurp(b / "class.mfgclass.json"));
  const json manifest = json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(manifest.at("exit_code"), 0);
  EXPECT_EQ(manifest.at("subcommand"), "gen-env");
  EXPECT_EQ(manifest.at("config").at("seed"), 4);
}

TEST(Cli, MebpRunIsReproducibleFromManifest) {
  const fs::path a = fresh_dir("mebp_a");
  const fs::path b = fresh_dir("mebp_b");
  ASSERT_EQ(run("run-mebp --preset toy --seed 2 --out " + a.string()), 0);
  // Re-run from the recorded configuration alone.
  const json manifest = json::parse(slurp(a / "manifest.json"));
  const fs::path cfg = a / "replay.json";
  std::ofstream(cfg) << manifest.at("config").dump();
  ASSERT_EQ(run("run-mebp --config " + cfg.string() + " --out " + b.string()), 0);
  EXPECT_EQ(slurp(a / "trace.csv"), slurp(b / "trace.csv"));
  EXPECT_EQ(json::parse(slurp(a / "result.json")), json::parse(slurp(b / "result.json")));
}

TEST(Cli, ExitCodes) {
  const fs::path dir = fresh_dir("codes");
  EXPECT_EQ(run("gen-env --preset nope --out " + dir.string()), 2);
  EXPECT_EQ(run("gen-env --K 0 --out " + dir.string()), 2);
  EXPECT_EQ(json::parse(slurp(dir / "manifest.json")).at("exit_code"), 2);
  EXPECT_EQ(run("no-such-command"), 2);
  const fs::path cfg = dir / "bad.json";
  std::ofstream(cfg) << R"({"not_a_key": 1})";
  EXPECT_EQ(run("gen-env --config " + cfg.string() + " --out " + dir.string()), 2);
}
