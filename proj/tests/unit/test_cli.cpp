#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Cmd {
  int code;
  std::string out;
};

Cmd cli(const std::string& args) {
  const std::string cmd = std::string(MIBCI_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

class Cli : public ::testing::Test {
 protected:
  static fs::path dir;

  static void SetUpTestSuite() {
    dir = fs::temp_directory_path() / ("mibci_cli_" + std::to_string(getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto r = cli("synth --subjects 2 --trials-per-class 8 --seed 3 --out " + (dir / "data").string());
    ASSERT_EQ(r.code, 0) << r.out;
    std::ofstream(dir / "quick.json") << R"({"override_ranges": true, "pso": {"particles": 8, "iterations": 3},
                                            "preprocess": {"ica": {"enabled": false}}})";
  }
  static void TearDownTestSuite() { fs::remove_all(dir); }
};

fs::path Cli::dir;

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("synth").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("run --data " + (dir / "missing").string() + " --out " + (dir / "o").string()).code, 2);
  const auto r = cli("run --data " + (dir / "data").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("output directory is required"), std::string::npos) << r.out;
  std::ofstream(dir / "bad.json") << R"({"pso": {"particles": 10}})";
  const auto b = cli("run --config " + (dir / "bad.json").string() + " --data " + (dir / "data").string() + " --out " +
                     (dir / "o").string());
  EXPECT_EQ(b.code, 2);
  EXPECT_NE(b.out.find("pso.particles = 10 outside supported range"), std::string::npos) << b.out;
  EXPECT_EQ(cli("--version").code, 0);
}

TEST_F(Cli, IngestAndCorruption) {
  const auto r = cli("ingest " + (dir / "data").string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("64 trials"), std::string::npos) << r.out;
  fs::copy(dir / "data", dir / "broken", fs::copy_options::recursive);
  for (const auto& e : fs::directory_iterator(dir / "broken"))
    if (e.path().extension() == ".miec") fs::resize_file(e.path(), fs::file_size(e.path()) - 10);
  EXPECT_EQ(cli("ingest " + (dir / "broken").string()).code, 1);
}

TEST_F(Cli, SplitsJson) {
  const auto r = cli("splits --data " + (dir / "data").string() + " --protocol loso");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["folds"].size(), 2u);
  EXPECT_EQ(j["folds"][0]["test"].size(), 32u);
  const auto w = nlohmann::json::parse(cli("splits --data " + (dir / "data").string()).out);
  EXPECT_EQ(w["folds"][1]["train"].size(), 4u * 6);
}

TEST_F(Cli, RunCompareRules) {
  const auto out = dir / "run";
  const auto r = cli("run --quiet --config " + (dir / "quick.json").string() + " --data " + (dir / "data").string() +
                     " --out " + out.string() + " --seed 5");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("Mean"), std::string::npos);
  for (const char* f : {"report.json", "report.txt", "config.json", "models/S1.json", "models/S2.json", "pso/S1.jsonl"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  std::ifstream in(out / "report.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["rows"].size(), 2u);
  EXPECT_EQ(j["config"]["pso"]["particles"], 8);

  const auto c = cli("compare " + (out / "report.json").string() + " " + (out / "report.json").string());
  EXPECT_EQ(c.code, 0) << c.out;
  EXPECT_NE(c.out.find("anfis-fbcsp-pso"), std::string::npos);
  const auto u = cli("rules " + (out / "models/S1.json").string());
  EXPECT_EQ(u.code, 0) << u.out;
  EXPECT_FALSE(u.out.empty());

  const auto loso = dir / "loso";
  ASSERT_EQ(cli("run --quiet --protocol loso --config " + (dir / "quick.json").string() + " --data " +
                (dir / "data").string() + " --out " + loso.string())
                .code,
            0);
  const auto m = cli("compare " + (out / "report.json").string() + " " + (loso / "report.json").string());
  EXPECT_EQ(m.code, 2) << m.out;
}
