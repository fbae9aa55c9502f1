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

#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "run_config.hpp"
#include "trainwreck/attacks/attacks.hpp"
#include "trainwreck/common/error.hpp"
#include "trainwreck/common/io.hpp"
#include "trainwreck/data/loaders.hpp"
#include "trainwreck/data/poisoning.hpp"
#include "trainwreck/data/recipe.hpp"
#include "trainwreck/defense/manifest.hpp"
#include "trainwreck/evaluation/evaluation.hpp"

namespace fs = std::filesystem;
using namespace trainwreck;
using namespace trainwreck::cli;

namespace {

struct Splits {
  data::ImageDataset train;
  data::ImageDataset test;
};

Splits load_splits(const RunConfig& config) {
  const auto profile = evaluation::profile_by_name(config.profile);
  auto [train, test] = evaluation::apply_profile(profile, data::load_dataset(config.train_source, data::Split::kTrain),
                                                 data::load_dataset(config.test_source, data::Split::kTest));
  return Splits{std::move(train), std::move(test)};
}

attacks::AttackContext make_context(const RunConfig& config) {
  if (const char* env = std::getenv(attacks::kCacheDirEnv); env != nullptr && *env != '\0') {
    return attacks::AttackContext(fs::path(env));
  }
  return attacks::AttackContext(config.output_dir / "cache");
}

fs::path output(const RunConfig& config, const std::string& name) {
  const fs::path path = config.output_dir / name;
  check_output_path(config, path);
  return path;
}

void prepare_outputs(const RunConfig& config) {
  check_output_path(config, config.output_dir);
  fs::create_directories(config.output_dir);
}

// Prints the plan; returns true when the command should stop there.
bool plan(const RunConfig& config, const std::string& stage, std::initializer_list<fs::path> outputs) {
  if (!config.dry_run) return false;
  std::printf("stage: %s\nconfig: %s\noutputs:\n", stage.c_str(), describe(config).c_str());
  for (const auto& path : outputs) std::printf("  %s\n", path.string().c_str());
  return true;
}

attacks::AttackConfig single_rate_attack(const RunConfig& config) {
  if (config.poison_rates.size() != 1) {
    throw ConfigurationError("this stage takes a single poison rate, got " + std::to_string(config.poison_rates.size()));
  }
  attacks::AttackConfig attack = config.attack;
  attack.poison_rate = config.poison_rates.front();
  return attack;
}

fs::path recipe_input(const RunConfig& config) {
  const fs::path path = config.recipe.value_or(config.output_dir / "recipe.twrecipe");
  if (!fs::exists(path)) throw NotFoundError("recipe '" + path.string() + "' not found");
  return path;
}

// The training split a stage should look at: an explicit poisoned container,
// a recipe applied to the clean split, or the clean split itself.
data::ImageDataset training_split(const RunConfig& config, const Splits& splits, std::string* attack, double* rate) {
  if (config.poisoned) return data::load_dataset(config.poisoned->string(), data::Split::kTrain);
  if (config.recipe) {
    const auto recipe = data::read_recipe(*config.recipe);
    if (attack) *attack = recipe.attack_name;
    if (rate) *rate = recipe.poison_rate;
    return data::materialize_poisoned(splits.train, recipe);
  }
  return splits.train;
}

int run_divergence(const RunConfig& config) {
  const fs::path out = output(config, "divergence.txt");
  if (plan(config, "divergence", {out})) return kExitOk;
  const Splits splits = load_splits(config);
  prepare_outputs(config);
  auto context = make_context(config);
  context.divergence(splits.train, config.attack)->save(out);
  std::printf("wrote %s\n", out.string().c_str());
  return kExitOk;
}

int run_craft(const RunConfig& config) {
  const fs::path out = output(config, "recipe.twrecipe");
  const auto attack = single_rate_attack(config);
  if (plan(config, "craft", {out})) return kExitOk;
  const Splits splits = load_splits(config);
  prepare_outputs(config);
  auto context = make_context(config);
  const auto recipe = attacks::run_attack(splits.train, splits.test, attack, context);
  const auto stealth = attacks::verify_stealth(splits.train, recipe, config.attack.epsilon);
  data::write_recipe(recipe, out);
  std::printf("wrote %s: %zu perturb edits, %zu swap edits\n", out.string().c_str(), recipe.perturb_edit_count(),
              recipe.swap_edit_count());
  std::printf("stealth: counts %s, per-class counts %s, l-inf %s (max %.6g = %.4g/255)\n",
              stealth.count_preserved ? "ok" : "VIOLATED", stealth.per_class_counts_preserved ? "ok" : "VIOLATED",
              stealth.linf_exempt ? "exempt for swaps" : (stealth.linf_pass ? "ok" : "VIOLATED"), stealth.max_linf,
              stealth.max_linf * 255.0);
  return kExitOk;
}

int run_poison(const RunConfig& config) {
  const fs::path out = output(config, "poisoned.twds");
  if (plan(config, "poison", {out})) return kExitOk;
  const fs::path recipe_path = recipe_input(config);
  const Splits splits = load_splits(config);
  prepare_outputs(config);
  const auto poisoned = data::materialize_poisoned(splits.train, data::read_recipe(recipe_path));
  data::save_dataset(poisoned, out);
  std::printf("wrote %s (%zu records)\n", out.string().c_str(), poisoned.size());
  return kExitOk;
}

int run_train_eval(const RunConfig& config) {
  const fs::path out = output(config, "report.jsonl");
  if (plan(config, "train-eval", {out})) return kExitOk;
  const Splits splits = load_splits(config);
  prepare_outputs(config);
  std::string attack = config.poisoned ? "poisoned" : "clean";
  double rate = 0.0;
  const auto train = training_split(config, splits, &attack, &rate);
  const auto report = evaluation::evaluate_target(train, splits.test, config.target, splits.train.id(), attack, rate);
  write_file_atomic(out, evaluation::report_to_json_line(report));
  std::printf("%s", evaluation::report_to_json_line(report).c_str());
  return report.failed ? kExitPipeline : kExitOk;
}

int run_sweep(const RunConfig& config) {
  const fs::path table = output(config, "sweep.jsonl");
  const fs::path baseline = output(config, "sweep-baseline.jsonl");
  const fs::path plot = output(config, "sweep.svg");
  if (plan(config, "sweep", {table, baseline, plot})) return kExitOk;
  const Splits splits = load_splits(config);
  prepare_outputs(config);
  auto context = make_context(config);
  evaluation::SweepConfig sweep{config.attack, config.poison_rates, config.target, config.jobs};
  const auto result = evaluation::poison_rate_sweep(splits.train, splits.test, sweep, context);
  write_file_atomic(table, evaluation::results_table(result.runs));
  write_file_atomic(baseline, evaluation::report_to_json_line(result.clean));
  write_file_atomic(plot, evaluation::sweep_plot_svg(result));
  std::printf("clean: %.4f\n", result.clean.reported_accuracy);
  for (const auto& run : result.runs) {
    if (run.failed) {
      std::printf("pi=%g: failed (%s)\n", run.poison_rate, run.failure.c_str());
    } else {
      std::printf("pi=%g: %.4f (random guess %.4f)\n", run.poison_rate, run.reported_accuracy, run.random_guess());
    }
  }
  std::printf("wrote %s, %s, %s\n", table.string().c_str(), baseline.string().c_str(), plot.string().c_str());
  return kExitOk;
}

int run_defend_build(const RunConfig& config) {
  const fs::path out = output(config, "manifest.txt");
  if (plan(config, "defend build", {out})) return kExitOk;
  defense::HashManifest manifest;
  if (config.tree) {
    defense::check_algorithm(config.digest, config.allow_insecure_digest);
    prepare_outputs(config);
    manifest = defense::build_tree_manifest(*config.tree, config.tree->filename().string(), config.digest,
                                            config.allow_insecure_digest);
  } else {
    defense::check_algorithm(config.digest, config.allow_insecure_digest);
    const Splits splits = load_splits(config);
    prepare_outputs(config);
    manifest = defense::build_manifest(splits.train, config.digest, config.allow_insecure_digest);
  }
  manifest.save(out);
  std::printf("wrote %s (%zu entries)\n", out.string().c_str(), manifest.entries.size());
  return kExitOk;
}

int run_defend_verify(const RunConfig& config) {
  const fs::path out = output(config, "verification.txt");
  if (plan(config, "defend verify", {out})) return kExitOk;
  const fs::path manifest_path = config.manifest.value_or(config.output_dir / "manifest.txt");
  if (!fs::exists(manifest_path)) throw NotFoundError("manifest '" + manifest_path.string() + "' not found");
  const auto manifest = defense::HashManifest::load(manifest_path);
  defense::VerificationReport report;
  if (config.tree) {
    report = defense::verify_tree(*config.tree, manifest, config.allow_insecure_digest);
  } else {
    const Splits splits = load_splits(config);
    report = defense::verify_manifest(training_split(config, splits, nullptr, nullptr), manifest,
                                      config.allow_insecure_digest);
  }
  std::string listing = std::string(report.pass() ? "PASS" : "TAMPERED") + " checked=" +
                        std::to_string(report.checked) + " mismatched=" + std::to_string(report.mismatched.size()) +
                        " missing=" + std::to_string(report.missing.size()) +
                        " unexpected=" + std::to_string(report.unexpected.size()) + "\n";
  for (const auto& key : report.mismatched) listing += "mismatch " + key + "\n";
  for (const auto& key : report.missing) listing += "missing " + key + "\n";
  for (const auto& key : report.unexpected) listing += "unexpected " + key + "\n";
  prepare_outputs(config);
  write_file_atomic(out, listing);
  std::fputs(listing.c_str(), stdout);
  return report.pass() ? kExitOk : kExitTampered;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train-time damaging attacks on image classifiers and a hashing defense"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides overrides;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", overrides.seed, "Seed for every random stage");
  app.add_option("--pi", overrides.poison_rates, "Poison rate or comma-separated list");
  app.add_option("--epsilon", overrides.epsilon, "Perturbation budget as a fraction, e.g. 8/255");
  app.add_option("--profile", overrides.profile, "Evaluation profile")->check(CLI::IsMember({"desk", "full"}));
  app.add_option("--jobs", overrides.jobs, "Concurrent training runs in a sweep");
  app.add_flag("--dry-run", overrides.dry_run, "Print the resolved plan and exit");
  app.add_flag("--unsafe-pi", overrides.unsafe_pi, "Allow poison rates outside the attack's usual range");
  app.fallthrough();

  int (*stage)(const RunConfig&) = nullptr;
  app.add_subcommand("divergence", "Class divergence matrix")->callback([&] { stage = run_divergence; });
  app.add_subcommand("craft", "Craft a poison recipe")->callback([&] { stage = run_craft; });
  app.add_subcommand("poison", "Materialize a recipe into a poisoned dataset")->callback([&] { stage = run_poison; });
  app.add_subcommand("train-eval", "Train and evaluate a target model")->callback([&] { stage = run_train_eval; });
  app.add_subcommand("sweep", "Poison-rate sweep with results table and plot")->callback([&] { stage = run_sweep; });
  auto* defend = app.add_subcommand("defend", "Hash manifest defense");
  defend->require_subcommand(1);
  defend->add_subcommand("build", "Build a manifest of the clean data")->callback([&] { stage = run_defend_build; });
  defend->add_subcommand("verify", "Verify data against a manifest")->callback([&] { stage = run_defend_verify; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  try {
    RunConfig config = load_run_config(config_path);
    apply_overrides(config, overrides);
    finalize(config);
    return stage(config);
  } catch (const ConfigurationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitPipeline;
  }
}
