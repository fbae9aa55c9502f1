// Copyright 2026 The Trainwreck Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "json.hpp"
#include "run_config.hpp"
#include "test_support.hpp"
#include "trainwreck/common/error.hpp"
#include "trainwreck/common/io.hpp"
#include "trainwreck/data/loaders.hpp"
#include "trainwreck/data/recipe.hpp"
#include "trainwreck/divergence/divergence.hpp"

namespace trainwreck::cli {
namespace {

namespace fs = std::filesystem;

const std::string kToy = "synthetic:classes=4,train=20,test=5,size=8,seed=3";

std::string toy_config(const std::string& attack = "trainwreck", const std::string& extra = "") {
  return R"({"dataset": ")" + kToy + R"(", "output_dir": "out", "seed": 7,
    "attack": {"name": ")" + attack + R"(", "poison_rate": 0.5, "extractor": "pixels", "surrogate": "mlp",
               "surrogate_epochs": 3, "n_iter_pgd": 3},
    "target": {"architecture": "mlp", "epochs": 2})" + extra + "}";
}

struct Result {
  int code;
  std::string output;
};

// Runs the tool with the given arguments, capturing stdout and stderr.
Result run_tool(const fs::path& dir, const std::string& args) {
  const fs::path log = dir / "tool.log";
  const std::string command = std::string(TRAINWRECK_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(command.c_str());
  Result result{WIFEXITED(status) ? WEXITSTATUS(status) : -1, ""};
  if (fs::exists(log)) result.output = read_file(log);
  return result;
}

struct Workspace {
  testing::TempDir dir;
  fs::path config;

  explicit Workspace(const std::string& text) : config(dir.path() / "run.json") {
    write_file_atomic(config, text);
  }
  fs::path out(const std::string& name = "") const { return dir.path() / "out" / name; }
  Result run(const std::string& args) const { return run_tool(dir.path(), args + " --config '" + config.string() + "'"); }
};

TEST(RunConfigTest, ParsesAndResolvesPaths) {
  testing::TempDir dir;
  write_file_atomic(dir.path() / "r.twrecipe", "x");
  const auto config = parse_run_config(
      R"({"dataset": {"train": "data/train.twds", "test": "cifar10"}, "seed": 9, "profile": "full",
          "attack": {"name": "jsd_swap", "poison_rate": [0.1, 0.2], "epsilon": "4/255", "n_bins": 16},
          "target": {"architecture": "cnn-small", "head_only": true},
          "inputs": {"recipe": "r.twrecipe"}, "defense": {"algorithm": "sha512"}, "jobs": 2})",
      dir.path());
  EXPECT_EQ(config.train_source, (dir.path() / "data/train.twds").string());
  EXPECT_EQ(config.test_source, "cifar10");
  EXPECT_EQ(config.seed, 9u);
  EXPECT_EQ(config.profile, "full");
  EXPECT_EQ(config.attack.attack, attacks::AttackName::kJsdSwap);
  EXPECT_EQ(config.poison_rates, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(config.attack.epsilon, Rational(4, 255));
  EXPECT_EQ(config.attack.n_bins, 16u);
  EXPECT_TRUE(config.target.training.head_only);
  EXPECT_EQ(*config.recipe, dir.path() / "r.twrecipe");
  EXPECT_EQ(config.digest, "sha512");
  EXPECT_EQ(config.jobs, 2u);
  EXPECT_EQ(config.output_dir, dir.path() / "trainwreck-out");
}

TEST(RunConfigTest, RejectsUnknownKeysAtEveryLevel) {
  const fs::path base = ".";
  EXPECT_THROW(parse_run_config(R"({"dataset": "x", "colour": 1})", base), ConfigurationError);
  EXPECT_THROW(parse_run_config(R"({"dataset": "x", "attack": {"rate": 1}})", base), ConfigurationError);
  EXPECT_THROW(parse_run_config(R"({"dataset": "x", "target": {"arch": "mlp"}})", base), ConfigurationError);
  EXPECT_THROW(parse_run_config(R"({"dataset": "x", "inputs": {"recipes": "a"}})", base), ConfigurationError);
  EXPECT_THROW(parse_run_config(R"({"dataset": "x", "defense": {"hash": "md5"}})", base), ConfigurationError);
  EXPECT_THROW(parse_run_config(R"({"dataset": {"train": "a", "val": "b"}})", base), ConfigurationError);
  EXPECT_THROW(parse_run_config(R"({"seed": 1})", base), ConfigurationError);
  EXPECT_THROW(parse_run_config(R"({"dataset": "x", "seed": "one"})", base), ConfigurationError);
  EXPECT_THROW(parse_run_config("{not json", base), ConfigurationError);
  EXPECT_THROW(parse_run_config(R"({"dataset": "x", "attack": {"name": "flip"}})", base), ConfigurationError);
}

TEST(RunConfigTest, OverridesAndFinalize) {
  RunConfig config = parse_run_config(toy_config(), ".");
  Overrides overrides;
  overrides.seed = 11;
  overrides.poison_rates = "0.25, 1";
  overrides.epsilon = "16/255";
  overrides.profile = "full";
  overrides.dry_run = true;
  apply_overrides(config, overrides);
  finalize(config);
  EXPECT_EQ(config.seed, 11u);
  EXPECT_EQ(config.attack.seed, 11u);
  EXPECT_EQ(config.poison_rates, (std::vector<double>{0.25, 1.0}));
  EXPECT_EQ(config.attack.epsilon, Rational(16, 255));
  EXPECT_TRUE(config.dry_run);
  EXPECT_EQ(config.attack.surrogate_training.epochs, 3u);
  EXPECT_EQ(config.target.training.epochs, 2u);
  EXPECT_NE(config.target.training.seed, config.seed);
  EXPECT_FALSE(describe(config).empty());

  RunConfig defaults = parse_run_config(R"({"dataset": ")" + kToy + R"("})", ".");
  finalize(defaults);
  EXPECT_EQ(defaults.target.training.epochs, 15u);
  EXPECT_EQ(defaults.target.architecture_id, "cnn-deep");

  EXPECT_EQ(parse_rate_list("0,0.5,1"), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_THROW(parse_rate_list("0.1,,0.2"), ConfigurationError);
  EXPECT_THROW(parse_rate_list("half"), ConfigurationError);

  RunConfig swap = parse_run_config(toy_config("random_swap"), ".");
  EXPECT_THROW(finalize(swap), ConfigurationError);
  Overrides unsafe;
  unsafe.unsafe_pi = true;
  apply_overrides(swap, unsafe);
  EXPECT_NO_THROW(finalize(swap));

  RunConfig missing = parse_run_config(R"({"dataset": "/nonexistent/train.twds"})", ".");
  EXPECT_THROW(finalize(missing), ConfigurationError);
  RunConfig bad_arch = parse_run_config(toy_config("trainwreck", R"(, "jobs": 0)"), ".");
  EXPECT_THROW(finalize(bad_arch), ConfigurationError);
}

TEST(RunConfigTest, RefusesOutputsInsideTheDatasetDirectory) {
  testing::TempDir dir;
  const auto ds = testing::toy_split(kToy, data::Split::kTrain);
  fs::create_directories(dir.path() / "data");
  data::save_dataset(ds, dir.path() / "data" / "train.twds");
  RunConfig config = parse_run_config(R"({"dataset": "data/train.twds", "output_dir": "data/out"})", dir.path());
  EXPECT_THROW(check_output_path(config, config.output_dir / "recipe.twrecipe"), ConfigurationError);
  EXPECT_NO_THROW(check_output_path(config, dir.path() / "elsewhere" / "recipe.twrecipe"));
}

TEST(ToolTest, DivergenceIsDeterministic) {
  const Workspace ws(toy_config());
  const auto first = ws.run("divergence");
  ASSERT_EQ(first.code, 0) << first.output;
  const std::string bytes = read_file(ws.out("divergence.txt"));
  const auto matrix = divergence::DivergenceMatrix::parse(bytes);
  EXPECT_EQ(matrix.n_classes(), 4);
  ASSERT_EQ(ws.run("divergence").code, 0);
  EXPECT_EQ(read_file(ws.out("divergence.txt")), bytes);
}

TEST(ToolTest, UsageAndConfigErrorsExitOne) {
  const Workspace ws(R"({"dataset": "/nonexistent/cifar.twds"})");
  const auto missing = ws.run("divergence");
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.output.find("/nonexistent/cifar.twds"), std::string::npos);
  EXPECT_EQ(ws.run("craft --bogus-flag").code, 1);
  EXPECT_EQ(run_tool(ws.dir.path(), "craft").code, 1);
  const Workspace unknown(R"({"dataset": ")" + kToy + R"(", "tuning": 1})");
  EXPECT_EQ(unknown.run("craft").code, 1);
  const Workspace ok(toy_config());
  EXPECT_EQ(ok.run("craft --pi 0.1").code, 1);
  EXPECT_EQ(ok.run("craft --pi 0.25,0.5").code, 1);
  EXPECT_EQ(ok.run("craft --epsilon zero").code, 1);
  EXPECT_EQ(ok.run("poison").code, 2);
}

TEST(ToolTest, DryRunHasNoSideEffects) {
  const Workspace ws(toy_config());
  for (const char* stage : {"divergence", "craft", "poison", "train-eval", "sweep", "defend build", "defend verify"}) {
    const auto result = ws.run(std::string(stage) + " --dry-run");
    EXPECT_EQ(result.code, 0) << stage << ": " << result.output;
    EXPECT_NE(result.output.find("stage:"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(ws.out()));
}

TEST(ToolTest, CraftAtZeroRateWritesAnEmptyRecipe) {
  const Workspace ws(toy_config());
  const auto result = ws.run("craft --pi 0");
  ASSERT_EQ(result.code, 0) << result.output;
  const auto recipe = data::read_recipe(ws.out("recipe.twrecipe"));
  EXPECT_TRUE(recipe.edits.empty());
  EXPECT_EQ(recipe.poison_rate, 0.0);
}

TEST(ToolTest, CraftPoisonAndDetectTampering) {
  const Workspace ws(toy_config());
  ASSERT_EQ(ws.run("defend build").code, 0);
  const std::string manifest = read_file(ws.out("manifest.txt"));
  ASSERT_EQ(ws.run("defend build").code, 0);
  EXPECT_EQ(read_file(ws.out("manifest.txt")), manifest);

  const Workspace clean_check(toy_config());
  fs::create_directories(clean_check.out());
  write_file_atomic(clean_check.out("manifest.txt"), manifest);
  EXPECT_EQ(clean_check.run("defend verify").code, 0);

  ASSERT_EQ(ws.run("craft").code, 0);
  const std::string recipe_bytes = read_file(ws.out("recipe.twrecipe"));
  fs::remove_all(ws.out("cache"));
  ASSERT_EQ(ws.run("craft").code, 0);
  EXPECT_EQ(read_file(ws.out("recipe.twrecipe")), recipe_bytes);
  const auto recipe = data::parse_recipe(recipe_bytes);
  EXPECT_EQ(recipe.perturb_edit_count(), 40u);

  ASSERT_EQ(ws.run("poison").code, 0);
  const Workspace verify(toy_config("trainwreck", R"(, "inputs": {"poisoned": "out/poisoned.twds",
                                                                   "manifest": "out/manifest.txt"})"));
  fs::copy(ws.out(), verify.out(), fs::copy_options::recursive);
  const auto tampered = verify.run("defend verify");
  EXPECT_EQ(tampered.code, 3) << tampered.output;
  EXPECT_NE(tampered.output.find("TAMPERED"), std::string::npos);
  // Edits whose perturbation is zero leave the record bytes intact.
  const auto clean = testing::toy_split(kToy, data::Split::kTrain);
  const auto poisoned = data::load_dataset(ws.out("poisoned.twds").string(), data::Split::kTrain);
  std::size_t changed = 0;
  for (const std::size_t i : recipe.touched_indices()) {
    const auto a = clean.image(i);
    const auto b = poisoned.image(i);
    changed += !std::equal(a.begin(), a.end(), b.begin());
  }
  EXPECT_GT(changed, 0u);
  EXPECT_NE(tampered.output.find("mismatched=" + std::to_string(changed) + " "), std::string::npos);
  EXPECT_TRUE(fs::exists(verify.out("verification.txt")));
}

TEST(ToolTest, TrainEvalAndSweepOutputs) {
  const Workspace ws(toy_config("random_swap", R"(, "jobs": 2)"));
  const auto eval = ws.run("train-eval --pi 0.1");
  ASSERT_EQ(eval.code, 0) << eval.output;
  EXPECT_EQ(nlohmann::json::parse(read_file(ws.out("report.jsonl")))["attack_name"], "clean");

  const auto sweep = ws.run("sweep --pi 0,0.1,0.2");
  ASSERT_EQ(sweep.code, 0) << sweep.output;
  const std::string table = read_file(ws.out("sweep.jsonl"));
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
  EXPECT_EQ(nlohmann::json::parse(read_file(ws.out("sweep-baseline.jsonl")))["attack_name"], "clean");
  EXPECT_EQ(read_file(ws.out("sweep.svg")).rfind("<svg", 0), 0u);
}

TEST(ToolTest, NeverWritesIntoTheDatasetDirectory) {
  testing::TempDir dir;
  fs::create_directories(dir.path() / "data");
  data::save_dataset(testing::toy_split(kToy, data::Split::kTrain), dir.path() / "data" / "train.twds");
  data::save_dataset(testing::toy_split(kToy, data::Split::kTest), dir.path() / "data" / "test.twds");
  write_file_atomic(dir.path() / "run.json",
                    R"({"dataset": {"train": "data/train.twds", "test": "data/test.twds"}, "output_dir": "data",
                        "attack": {"name": "random_swap", "poison_rate": 0.1}})");
  const auto result = run_tool(dir.path(), "craft --config '" + (dir.path() / "run.json").string() + "'");
  EXPECT_EQ(result.code, 1) << result.output;
  EXPECT_FALSE(fs::exists(dir.path() / "data" / "recipe.twrecipe"));
  EXPECT_FALSE(fs::exists(dir.path() / "data" / "cache"));
}

}  // namespace
}  // namespace trainwreck::cli
