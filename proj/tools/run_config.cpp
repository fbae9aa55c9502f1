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

#include "run_config.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "trainwreck/common/error.hpp"
#include "trainwreck/common/io.hpp"
#include "trainwreck/common/random.hpp"
#include "trainwreck/data/loaders.hpp"

namespace trainwreck::cli {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

constexpr std::uint64_t kTargetStream = 21;

void check_keys(const Json& object, const std::set<std::string>& allowed, const std::string& where) {
  if (!object.is_object()) throw ConfigurationError(where + " must be an object");
  for (const auto& item : object.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigurationError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <typename T>
void read(const Json& object, const char* key, T& out, const std::string& where) {
  if (!object.contains(key)) return;
  try {
    out = object.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigurationError("bad value for '" + std::string(key) + "' in " + where);
  }
}

template <typename T>
void read(const Json& object, const char* key, std::optional<T>& out, const std::string& where) {
  if (!object.contains(key)) return;
  T value{};
  read(object, key, value, where);
  out = value;
}

void read_path(const Json& object, const char* key, std::optional<fs::path>& out, const fs::path& base,
               const std::string& where) {
  std::optional<std::string> text;
  read(object, key, text, where);
  if (text) out = base / *text;
}

// Registry names and generated sources pass through; anything else is a
// path relative to the config file.
std::string resolve_source(const std::string& source, const fs::path& base) {
  if (source == "cifar10" || source == "cifar100" || source.rfind("synthetic:", 0) == 0) return source;
  return (base / source).lexically_normal().string();
}

bool is_inside(const fs::path& child, const fs::path& parent) {
  const fs::path c = fs::weakly_canonical(child);
  const fs::path p = fs::weakly_canonical(parent);
  auto ci = c.begin();
  for (auto pi = p.begin(); pi != p.end(); ++pi, ++ci) {
    if (pi->empty()) continue;
    if (ci == c.end() || *ci != *pi) return false;
  }
  return true;
}

}  // namespace

std::vector<double> parse_rate_list(std::string_view text) {
  std::vector<double> rates;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string item(text.substr(start, comma - start));
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) throw ConfigurationError("bad poison rate '" + item + "'");
    rates.push_back(value);
    start = comma + 1;
  }
  return rates;
}

RunConfig parse_run_config(std::string_view json_text, const fs::path& base_dir) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw ConfigurationError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, {"dataset", "output_dir", "seed", "profile", "attack", "target", "inputs", "defense", "jobs"},
             "config");
  RunConfig config;
  if (!root.contains("dataset")) throw ConfigurationError("config lacks 'dataset'");
  const Json& dataset = root.at("dataset");
  if (dataset.is_string()) {
    config.train_source = config.test_source = resolve_source(dataset.get<std::string>(), base_dir);
  } else {
    check_keys(dataset, {"train", "test"}, "dataset");
    std::string train, test;
    read(dataset, "train", train, "dataset");
    read(dataset, "test", test, "dataset");
    if (train.empty() || test.empty()) throw ConfigurationError("dataset needs both 'train' and 'test'");
    config.train_source = resolve_source(train, base_dir);
    config.test_source = resolve_source(test, base_dir);
  }
  std::optional<std::string> output_dir;
  read(root, "output_dir", output_dir, "config");
  config.output_dir = base_dir / output_dir.value_or("trainwreck-out");
  read(root, "seed", config.seed, "config");
  read(root, "profile", config.profile, "config");
  read(root, "jobs", config.jobs, "config");

  if (root.contains("attack")) {
    const Json& a = root.at("attack");
    const std::string where = "attack";
    check_keys(a, {"name", "poison_rate", "epsilon", "n_iter_cpup", "n_iter_pgd", "extractor", "surrogate",
                   "n_bins", "surrogate_epochs", "surrogate_batch_size", "surrogate_learning_rate",
                   "min_surrogate_accuracy_factor", "unsafe_pi"},
               where);
    std::optional<std::string> name, epsilon;
    read(a, "name", name, where);
    if (name) config.attack.attack = attacks::parse_attack_name(*name);
    if (a.contains("poison_rate")) {
      const Json& rate = a.at("poison_rate");
      if (rate.is_number()) {
        config.poison_rates = {rate.get<double>()};
      } else {
        read(a, "poison_rate", config.poison_rates, where);
      }
    }
    read(a, "epsilon", epsilon, where);
    if (epsilon) {
      try {
        config.attack.epsilon = Rational::parse(*epsilon);
      } catch (const Error& e) {
        throw ConfigurationError(std::string("attack.epsilon: ") + e.what());
      }
    }
    read(a, "n_iter_cpup", config.attack.n_iter_cpup, where);
    read(a, "n_iter_pgd", config.attack.n_iter_pgd, where);
    read(a, "extractor", config.attack.extractor_id, where);
    read(a, "surrogate", config.attack.surrogate_architecture, where);
    read(a, "n_bins", config.attack.n_bins, where);
    read(a, "surrogate_epochs", config.surrogate_epochs, where);
    read(a, "surrogate_batch_size", config.attack.surrogate_training.batch_size, where);
    read(a, "surrogate_learning_rate", config.attack.surrogate_training.learning_rate, where);
    read(a, "min_surrogate_accuracy_factor", config.attack.min_surrogate_accuracy_factor, where);
    read(a, "unsafe_pi", config.attack.unsafe_pi, where);
  }
  if (root.contains("target")) {
    const Json& t = root.at("target");
    const std::string where = "target";
    check_keys(t, {"architecture", "epochs", "batch_size", "learning_rate", "momentum", "weight_decay",
                   "head_only", "backbone"},
               where);
    read(t, "architecture", config.target.architecture_id, where);
    read(t, "epochs", config.target_epochs, where);
    read(t, "batch_size", config.target.training.batch_size, where);
    read(t, "learning_rate", config.target.training.learning_rate, where);
    read(t, "momentum", config.target.training.momentum, where);
    read(t, "weight_decay", config.target.training.weight_decay, where);
    read(t, "head_only", config.target.training.head_only, where);
    read_path(t, "backbone", config.target.backbone, base_dir, where);
  }
  if (root.contains("inputs")) {
    const Json& in = root.at("inputs");
    check_keys(in, {"recipe", "poisoned", "manifest", "tree"}, "inputs");
    read_path(in, "recipe", config.recipe, base_dir, "inputs");
    read_path(in, "poisoned", config.poisoned, base_dir, "inputs");
    read_path(in, "manifest", config.manifest, base_dir, "inputs");
    read_path(in, "tree", config.tree, base_dir, "inputs");
  }
  if (root.contains("defense")) {
    const Json& d = root.at("defense");
    check_keys(d, {"algorithm", "allow_insecure"}, "defense");
    read(d, "algorithm", config.digest, "defense");
    read(d, "allow_insecure", config.allow_insecure_digest, "defense");
  }
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigurationError("config file '" + path.string() + "' not found");
  return parse_run_config(read_file(path), path.parent_path());
}

void apply_overrides(RunConfig& config, const Overrides& overrides) {
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.poison_rates) config.poison_rates = parse_rate_list(*overrides.poison_rates);
  if (overrides.epsilon) {
    try {
      config.attack.epsilon = Rational::parse(*overrides.epsilon);
    } catch (const Error& e) {
      throw ConfigurationError(std::string("--epsilon: ") + e.what());
    }
  }
  if (overrides.profile) config.profile = *overrides.profile;
  if (overrides.jobs) config.jobs = *overrides.jobs;
  config.dry_run = config.dry_run || overrides.dry_run;
  config.attack.unsafe_pi = config.attack.unsafe_pi || overrides.unsafe_pi;
}

void finalize(RunConfig& config) {
  const evaluation::EvaluationProfile profile = evaluation::profile_by_name(config.profile);
  config.attack.seed = config.seed;
  config.attack.surrogate_training.epochs = config.surrogate_epochs.value_or(profile.epochs);
  config.target.training.epochs = config.target_epochs.value_or(profile.epochs);
  config.target.training.seed = derive_seed(config.seed, kTargetStream);
  if (config.jobs == 0) throw ConfigurationError("jobs must be at least 1");
  if (config.poison_rates.empty()) throw ConfigurationError("no poison rate given");
  for (const double rate : config.poison_rates) {
    attacks::AttackConfig check = config.attack;
    check.poison_rate = rate;
    try {
      check.validate();
    } catch (const DomainError& e) {
      throw ConfigurationError(e.what());
    }
  }
  if (!nn::is_known_architecture(config.target.architecture_id)) {
    throw ConfigurationError("unknown target architecture '" + config.target.architecture_id + "'");
  }
  for (const auto& source : {config.train_source, config.test_source}) {
    if (source.rfind("synthetic:", 0) == 0) {
      try {
        data::SyntheticSpec::parse(source);
      } catch (const FormatError& e) {
        throw ConfigurationError(e.what());
      }
    }
    const auto path = data::source_path(source);
    if (path && !fs::exists(*path)) throw ConfigurationError("dataset source '" + path->string() + "' does not exist");
  }
  for (const auto* input : {&config.recipe, &config.poisoned, &config.manifest, &config.tree, &config.target.backbone}) {
    if (*input && !fs::exists(**input)) throw ConfigurationError("input '" + (*input)->string() + "' does not exist");
  }
}

std::optional<fs::path> source_directory(const std::string& source) {
  const auto path = data::source_path(source);
  if (!path) return std::nullopt;
  if (fs::is_directory(*path)) return *path;
  return path->parent_path().empty() ? fs::path(".") : path->parent_path();
}

void check_output_path(const RunConfig& config, const fs::path& output) {
  for (const auto& source : {config.train_source, config.test_source}) {
    const auto dir = source_directory(source);
    if (dir && is_inside(output, *dir)) {
      throw ConfigurationError("refusing to write '" + output.string() + "' inside the dataset directory '" +
                               dir->string() + "'");
    }
  }
}

std::string describe(const RunConfig& config) {
  nlohmann::ordered_json j;
  j["train_source"] = config.train_source;
  j["test_source"] = config.test_source;
  j["output_dir"] = config.output_dir.string();
  j["seed"] = config.seed;
  j["profile"] = config.profile;
  j["attack"] = {{"name", attacks::to_string(config.attack.attack)},
                 {"poison_rates", config.poison_rates},
                 {"epsilon", config.attack.epsilon.to_string()},
                 {"n_iter_cpup", config.attack.n_iter_cpup},
                 {"n_iter_pgd", config.attack.n_iter_pgd},
                 {"extractor", config.attack.extractor_id},
                 {"surrogate", config.attack.surrogate_architecture},
                 {"surrogate_epochs", config.attack.surrogate_training.epochs},
                 {"n_bins", config.attack.n_bins},
                 {"unsafe_pi", config.attack.unsafe_pi}};
  j["target"] = {{"architecture", config.target.architecture_id},
                 {"epochs", config.target.training.epochs},
                 {"batch_size", config.target.training.batch_size},
                 {"learning_rate", config.target.training.learning_rate},
                 {"head_only", config.target.training.head_only || config.target.backbone.has_value()}};
  const auto opt = [](const std::optional<fs::path>& p) {
    return p ? nlohmann::ordered_json(p->string()) : nlohmann::ordered_json(nullptr);
  };
  j["inputs"] = {{"recipe", opt(config.recipe)},
                 {"poisoned", opt(config.poisoned)},
                 {"manifest", opt(config.manifest)},
                 {"tree", opt(config.tree)}};
  j["defense"] = {{"algorithm", config.digest}, {"allow_insecure", config.allow_insecure_digest}};
  j["jobs"] = config.jobs;
  return j.dump(2);
}

}  // namespace trainwreck::cli
