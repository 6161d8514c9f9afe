#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

#include "reactest/scenario_file.hpp"

using namespace reactest;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kScenarios = fs::path(REACTEST_SOURCE_DIR) / "scenarios";

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "reactest_cli_test";
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args) {
  const std::string cmd = std::string("REACTEST_LOG=error ") + REACTEST_CLI + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string corridor_file(const std::string& name, int n, int start, const json& goals, const json& keys) {
  json doc = {{"name", name},
              {"world", {{"type", "corridor"}, {"length", n}, {"start", start}, {"goals", goals}, {"keys", keys}}}};
  const auto path = scratch() / (name + ".json");
  write_text_file(path.string(), doc.dump());
  return path.string();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth, verify, run and render") {
  const auto dir = scratch();
  const auto scenario = (kScenarios / "corridor-5.json").string();
  const auto cuts = (dir / "c5.cuts.json").string();
  const auto trace = (dir / "c5.trace.jsonl").string();
  REQUIRE(cli("synth " + scenario + " --out " + cuts) == 0);
  CHECK(parse_cut_file(read_text_file(cuts)).cuts == std::vector<int>{0, 5});
  CHECK(cli("verify " + scenario + " " + cuts) == 0);
  CHECK(cli("run " + scenario + " " + cuts + " --out " + trace) == 0);
  CHECK(cli("render " + trace) == 0);
  CHECK(cli("run " + scenario + " " + cuts + " --agent random --seed 9") == 0);
}

TEST_CASE("exit code 1: usage and invalid input") {
  CHECK(cli("") == 1);
  CHECK(cli("frobnicate") == 1);
  CHECK(cli("synth") == 1);
  CHECK(cli("synth " + (kScenarios / "missing.json").string()) == 1);
  CHECK(cli("synth " + (kScenarios / "corridor-5.json").string() + " --threshold 2") == 1);
  CHECK(cli("synth " + (kScenarios / "corridor-5.json").string() + " --lambda-grid 1,x") == 1);
  CHECK(cli("run " + (kScenarios / "corridor-5.json").string() + " x --agent psychic") == 1);
  const auto bad = (scratch() / "bad.json").string();
  write_text_file(bad, "{\"name\": 3}");
  CHECK(cli("synth " + bad) == 1);
}

TEST_CASE("exit code 2: infeasible, mismatched or violated") {
  CHECK(cli("synth " + corridor_file("one-sided", 3, 2, {1}, {3})) == 2);
  CHECK(cli("synth " + corridor_file("key-behind-goal", 4, 2, {3}, {4})) == 2);
  CHECK(cli("synth " + (kScenarios / "corridor-5-relaxed.json").string() + " --lambda-grid 0") == 2);

  const auto dir = scratch();
  const auto c5 = (kScenarios / "corridor-5.json").string();
  const auto cuts = (dir / "c5.cuts.json").string();
  REQUIRE(cli("synth " + c5 + " --out " + cuts) == 0);
  CHECK(cli("verify " + (kScenarios / "corridor-7.json").string() + " " + cuts) == 2);

  auto uncut = json::parse(read_text_file(cuts));
  uncut["cuts"] = json::array();
  const auto none = (dir / "none.cuts.json").string();
  write_text_file(none, uncut.dump());
  CHECK(cli("verify " + c5 + " " + none) == 2);
  CHECK(cli("run " + c5 + " " + none) == 2);
}

}  // TEST_SUITE
