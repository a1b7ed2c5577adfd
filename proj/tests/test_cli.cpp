#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

using namespace ovnet;
using namespace ovnet::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kConfigs = fs::path(OVNET_SOURCE_DIR) / "configs";

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ovnet_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int invoke(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "ovnet");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int rc = run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json load(const std::string& name) { return json::parse(slurp(kConfigs / name)); }

fs::path write_json(const fs::path& dir, const std::string& name, const json& j) {
  const auto p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

Command command_for(const std::string& file) {
  if (file.starts_with("table")) return Command::metrics;
  if (file.starts_with("games")) return Command::game;
  if (file.starts_with("fl")) return Command::fl;
  return Command::scenario;
}

}  // namespace

TEST(Config, ShippedConfigsValidate) {
  int seen = 0;
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    if (e.path().extension() != ".json") continue;
    ++seen;
    const auto chk = validate_config(e.path().string(), command_for(e.path().filename().string()));
    EXPECT_TRUE(chk.ok()) << e.path() << ": " << (chk.ok() ? "" : chk.violations.front());
  }
  EXPECT_GE(seen, 4);
}

TEST(Config, MissingFieldIsNamed) {
  auto j = load("fl_desk.json");
  j.erase("seed");
  const auto v = validate_config_json(j, Command::fl);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("seed"), std::string::npos);
}

TEST(Config, EveryViolationIsListed) {
  auto j = load("table_desk.json");
  j["cap_limit"] = -3;
  j["colour"] = "blue";
  const auto v = validate_config_json(j, Command::metrics);
  ASSERT_EQ(v.size(), 2u);
  const auto all = v[0] + "|" + v[1];
  EXPECT_NE(all.find("cap_limit"), std::string::npos);
  EXPECT_NE(all.find("colour"), std::string::npos);
}

TEST(Config, UnreadableFileThrows) {
  EXPECT_THROW(validate_config("/nonexistent/cfg.json", Command::fl), IoError);
  const auto d = scratch_dir("parse");
  std::ofstream(d / "bad.json") << "{ nope";
  EXPECT_FALSE(validate_config((d / "bad.json").string(), Command::fl).ok());
}

TEST(Commands, NamesRoundTrip) {
  for (auto c : {Command::scenario, Command::game, Command::fl, Command::metrics, Command::selftest})
    EXPECT_EQ(command_from_string(to_string(c)), c);
  EXPECT_FALSE(command_from_string("train").has_value());
}

TEST(Exit, SuccessAssertionAndUsage) {
  const auto d = scratch_dir("exit");
  EXPECT_EQ(invoke({"selftest", "--out", (d / "st").string()}), 0);
  EXPECT_EQ(slurp(d / "st" / "MANIFEST").rfind("status ok\n", 0), 0u);

  auto j = load("spoil_fig1.json");
  j["steps"].back()["expect"] = false;
  const auto broken = write_json(d, "broken.json", j);
  EXPECT_EQ(invoke({"scenario", "--config", broken.string(), "--out", (d / "fail").string()}), 1);
  EXPECT_EQ(slurp(d / "fail" / "MANIFEST").rfind("status failed\n", 0), 0u);

  std::string err;
  j = load("spoil_fig1.json");
  j.erase("actors");
  const auto invalid = write_json(d, "invalid.json", j);
  EXPECT_EQ(invoke({"scenario", "--config", invalid.string(), "--out", (d / "bad").string()}, &err), 2);
  EXPECT_NE(err.find("actors"), std::string::npos);
  EXPECT_EQ(invoke({"frobnicate"}), 2);
  EXPECT_EQ(invoke({"fl"}), 2);
  EXPECT_EQ(invoke({"fl", "--config", (d / "missing.json").string()}), 2);
}

TEST(Manifest, DigestIgnoresTimingLines) {
  const std::vector<Artifact> a{{"x.csv", "1,2\n", false}, {"t.csv", "3 ms\n", true}};
  const std::vector<Artifact> b{{"x.csv", "1,2\n", false}, {"t.csv", "4 ms\n", true}};
  const std::vector<Artifact> c{{"x.csv", "1,3\n", false}, {"t.csv", "3 ms\n", true}};
  EXPECT_EQ(replay_digest(manifest_text(a, true)), replay_digest(manifest_text(b, true)));
  EXPECT_NE(replay_digest(manifest_text(a, true)), replay_digest(manifest_text(c, true)));
  EXPECT_NE(replay_digest(manifest_text(a, true)), replay_digest(manifest_text(a, false)));
  const auto failed = manifest_text({}, false, "boom\nline two");
  EXPECT_EQ(failed, "status failed\nerror boom line two\n");
}

TEST(Manifest, ReplayIntoTwoDirectoriesMatches) {
  const auto d = scratch_dir("replay");
  const auto cfg = (kConfigs / "spoil_fig1.json").string();
  ASSERT_EQ(invoke({"scenario", "--config", cfg, "--out", (d / "a").string()}), 0);
  ASSERT_EQ(invoke({"scenario", "--config", cfg, "--out", (d / "b").string()}), 0);
  const auto ma = slurp(d / "a" / "MANIFEST");
  EXPECT_EQ(replay_digest(ma), replay_digest(slurp(d / "b" / "MANIFEST")));
  EXPECT_EQ(slurp(d / "a" / "transcript.json"), slurp(d / "b" / "transcript.json"));
  for (const auto& e : fs::directory_iterator(d / "a")) EXPECT_NE(e.path().extension(), ".part");
}
