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

#include "trainwreck/evaluation/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "json.hpp"
#include "trainwreck/common/error.hpp"
#include "trainwreck/data/poisoning.hpp"
#include "trainwreck/defense/manifest.hpp"
#include "trainwreck/nn/network.hpp"

namespace trainwreck::evaluation {

namespace {

using Json = nlohmann::ordered_json;

nn::Network build_target(const data::ImageDataset& train, const TargetSpec& target) {
  nn::Network network = nn::make_network(target.architecture_id, train.shape(), train.n_classes());
  network.initialize(target.training.seed);
  if (target.backbone) {
    const adversarial::Classifier backbone = adversarial::Classifier::load(*target.backbone);
    if (backbone.metadata().architecture_id != target.architecture_id ||
        backbone.network().parameter_count() != network.parameter_count()) {
      throw ConfigurationError("backbone '" + target.backbone->string() + "' is a " +
                               backbone.metadata().architecture_id + ", target is " + target.architecture_id);
    }
    // The head keeps its fresh initialization.
    const std::size_t head = network.head_layer();
    for (std::size_t i = 0; i < network.layer_count(); ++i) {
      if (i == head) continue;
      const auto source = backbone.network().layer_parameters(i);
      std::copy(source.begin(), source.end(), network.layer_parameters(i).begin());
    }
  }
  return network;
}

}  // namespace

double windowed_best(std::span<const double> curve, std::size_t window) {
  if (curve.empty()) throw DomainError("accuracy curve is empty");
  if (window == 0) throw DomainError("report window must be positive");
  const std::size_t start = curve.size() > window ? curve.size() - window : 0;
  return *std::max_element(curve.begin() + static_cast<std::ptrdiff_t>(start), curve.end());
}

EvaluationReport evaluate_target(const data::ImageDataset& train, const data::ImageDataset& test,
                                 const TargetSpec& target, std::string_view clean_dataset_id,
                                 std::string_view attack_name, double poison_rate) {
  if (train.n_classes() != test.n_classes() || !(train.shape() == test.shape())) {
    throw ConfigurationError("train and test splits disagree on classes or image shape");
  }
  EvaluationReport report;
  report.dataset_id = clean_dataset_id.empty() ? train.id() : std::string(clean_dataset_id);
  report.attack_name = std::string(attack_name);
  report.poison_rate = poison_rate;
  report.architecture_id = target.architecture_id;
  report.seed = target.training.seed;
  report.epochs = target.training.epochs;
  nn::TrainingConfig training = target.training;
  if (target.backbone) training.head_only = true;
  report.head_only = training.head_only;
  report.n_classes = train.n_classes();
  const auto started = std::chrono::steady_clock::now();
  nn::Network network = build_target(train, target);
  try {
    nn::train(network, train, training, [&](std::size_t, const nn::Network& current) {
      report.accuracy_curve.push_back(nn::accuracy(current, test));
    });
  } catch (const TrainingDivergedError& e) {
    report.failed = true;
    report.failure = e.what();
    report.failed_epoch = e.epoch();
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!report.accuracy_curve.empty()) report.reported_accuracy = windowed_best(report.accuracy_curve);
  return report;
}

void attach_reference(EvaluationReport& report, const EvaluationReport& clean) {
  report.clean_reference_accuracy = clean.reported_accuracy;
  report.delta_perf = delta_perf(clean, report);
}

double delta_perf(const EvaluationReport& clean, const EvaluationReport& attacked) {
  if (clean.dataset_id != attacked.dataset_id || clean.architecture_id != attacked.architecture_id ||
      clean.epochs != attacked.epochs) {
    throw ComparisonError("cannot compare run on " + attacked.dataset_id + "/" + attacked.architecture_id + "/" +
                          std::to_string(attacked.epochs) + " epochs with baseline on " + clean.dataset_id + "/" +
                          clean.architecture_id + "/" + std::to_string(clean.epochs) + " epochs");
  }
  return clean.reported_accuracy - attacked.reported_accuracy;
}

double surrogate_total_cost(double delta_perf, double duration) {
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw DomainError("attack duration must be finite and >= 0");
  return delta_perf * duration;
}

double total_cost(std::span<const CostSample> samples, double duration) {
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw DomainError("attack duration must be finite and >= 0");
  if (duration == 0.0) return 0.0;
  if (samples.empty()) throw DomainError("no cost samples");
  for (std::size_t k = 1; k < samples.size(); ++k) {
    if (!(samples[k].time >= samples[k - 1].time)) throw DomainError("cost samples are not sorted by time");
  }
  if (!(samples.front().time <= 0.0) || !(samples.back().time >= duration)) {
    throw DomainError("cost samples do not cover [0, duration]");
  }
  const auto value_at = [&](std::size_t k, double t) {
    const CostSample& a = samples[k];
    const CostSample& b = samples[k + 1];
    if (b.time == a.time || a.cost == b.cost) return a.cost;
    return a.cost + (b.cost - a.cost) * ((t - a.time) / (b.time - a.time));
  };
  // Neumaier-compensated sum of the clipped trapezoids.
  double sum = 0.0, compensation = 0.0;
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    const double lo = std::max(samples[k].time, 0.0);
    const double hi = std::min(samples[k + 1].time, duration);
    if (!(hi > lo)) continue;
    const double term = 0.5 * (value_at(k, lo) + value_at(k, hi)) * (hi - lo);
    const double t = sum + term;
    compensation += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + compensation;
}

EvaluationProfile desk_profile() { return {"desk", 500, 100, 15, "cnn-deep"}; }

EvaluationProfile full_profile() { return {"full", 0, 0, 30, "cnn-deep"}; }

EvaluationProfile profile_by_name(std::string_view name) {
  if (name == "desk") return desk_profile();
  if (name == "full") return full_profile();
  throw ConfigurationError("unknown profile '" + std::string(name) + "' (expected desk or full)");
}

std::pair<data::ImageDataset, data::ImageDataset> apply_profile(const EvaluationProfile& profile,
                                                                const data::ImageDataset& train,
                                                                const data::ImageDataset& test) {
  const auto cut = [](const data::ImageDataset& ds, std::size_t k, const char* tag) {
    const auto counts = ds.class_counts();
    if (k == 0 || std::all_of(counts.begin(), counts.end(), [k](std::size_t n) { return n <= k; })) return ds;
    return data::take_per_class(ds, k, ds.id() + "@" + tag + std::to_string(k));
  };
  return {cut(train, profile.train_per_class, "first"), cut(test, profile.test_per_class, "first")};
}

SweepResult poison_rate_sweep(const data::ImageDataset& train, const data::ImageDataset& test,
                              const SweepConfig& config, attacks::AttackContext& context) {
  const defense::HashManifest test_manifest = defense::build_manifest(test);
  const auto check_test = [&] {
    if (!defense::verify_manifest(test, test_manifest).pass()) {
      throw IdentityError("test split changed during the sweep");
    }
  };

  struct Job {
    std::optional<data::ImageDataset> poisoned;
    EvaluationReport report;
  };
  std::vector<Job> jobs(config.poison_rates.size() + 1);
  jobs[0].poisoned = train;
  for (std::size_t k = 0; k < config.poison_rates.size(); ++k) {
    attacks::AttackConfig attack = config.attack;
    attack.poison_rate = config.poison_rates[k];
    Job& job = jobs[k + 1];
    job.report.dataset_id = train.id();
    job.report.attack_name = attacks::to_string(attack.attack);
    job.report.poison_rate = attack.poison_rate;
    job.report.architecture_id = config.target.architecture_id;
    job.report.seed = config.target.training.seed;
    job.report.epochs = config.target.training.epochs;
    job.report.n_classes = train.n_classes();
    try {
      job.poisoned = data::materialize_poisoned(train, attacks::run_attack(train, test, attack, context));
    } catch (const Error& e) {
      job.report.failed = true;
      job.report.failure = std::string("attack failed: ") + e.what();
    }
  }
  check_test();

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      Job& job = jobs[k];
      if (!job.poisoned) continue;
      const std::string attack_name = k == 0 ? "clean" : job.report.attack_name;
      const double rate = k == 0 ? 0.0 : job.report.poison_rate;
      try {
        job.report = evaluate_target(*job.poisoned, test, config.target, train.id(), attack_name, rate);
      } catch (const Error& e) {
        job.report.failed = true;
        job.report.failure = e.what();
      }
      job.poisoned.reset();
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(config.jobs, 1, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& thread : pool) thread.join();
  check_test();

  SweepResult result;
  result.clean = jobs[0].report;
  for (std::size_t k = 1; k < jobs.size(); ++k) {
    EvaluationReport report = jobs[k].report;
    if (!report.failed && !result.clean.failed) attach_reference(report, result.clean);
    result.runs.push_back(std::move(report));
  }
  return result;
}

std::string report_to_json_line(const EvaluationReport& r) {
  const auto number = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  Json j;
  j["dataset_id"] = r.dataset_id;
  j["attack_name"] = r.attack_name;
  j["poison_rate"] = r.poison_rate;
  j["architecture_id"] = r.architecture_id;
  j["seed"] = r.seed;
  j["epochs"] = r.epochs;
  j["head_only"] = r.head_only;
  j["n_classes"] = r.n_classes;
  j["accuracy_curve"] = r.accuracy_curve;
  j["reported_accuracy"] = r.reported_accuracy;
  j["clean_reference_accuracy"] = number(r.clean_reference_accuracy);
  j["delta_perf"] = number(r.delta_perf);
  j["random_guess_accuracy"] = r.random_guess();
  j["above_random_guess"] = r.reported_accuracy > r.random_guess();
  j["wall_clock_seconds"] = r.wall_clock_seconds;
  j["failed"] = r.failed;
  if (r.failed) {
    j["failure"] = r.failure;
    j["failed_epoch"] = r.failed_epoch;
  }
  return j.dump() + "\n";
}

std::string results_table(std::span<const EvaluationReport> reports) {
  std::string out;
  for (const auto& report : reports) out += report_to_json_line(report);
  return out;
}

std::string sweep_plot_svg(const SweepResult& result) {
  constexpr double kW = 480, kH = 320, kLeft = 56, kRight = 16, kTop = 24, kBottom = 44;
  const auto x = [&](double rate) { return kLeft + rate * (kW - kLeft - kRight); };
  const auto y = [&](double acc) { return kH - kBottom - acc * (kH - kTop - kBottom); };
  char buf[256];
  std::string svg;
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\">\n", kW,
                kH, kW, kH);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<path d=\"M%g %gL%g %gL%g %g\" fill=\"none\" stroke=\"black\"/>\n", x(0), y(1), x(0), y(0), x(1),
                y(0));
  svg += buf;
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = tick / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">%.2f</text>\n"
                  "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%.2f</text>\n",
                  x(v), y(0) + 16, v, x(0) - 6, y(v) + 4, v);
    svg += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%g\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\">poison rate</text>\n"
                "<text x=\"14\" y=\"%g\" font-size=\"12\" transform=\"rotate(-90 14 %g)\" "
                "text-anchor=\"middle\">test top-1 accuracy</text>\n",
                x(0.5), kH - 8, y(0.5), y(0.5));
  svg += buf;
  const auto level = [&](double acc, const char* colour, const char* dash, const char* label) {
    char line[256];
    std::snprintf(line, sizeof(line),
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-dasharray=\"%s\"/>\n"
                  "<text x=\"%g\" y=\"%g\" font-size=\"10\" fill=\"%s\" text-anchor=\"end\">%s</text>\n",
                  x(0), y(acc), x(1), y(acc), colour, dash, x(1), y(acc) - 3, colour, label);
    svg += line;
  };
  if (!result.clean.failed) level(result.clean.reported_accuracy, "#2a7", "6 3", "clean");
  level(result.clean.random_guess(), "#888", "2 3", "random guess");
  std::vector<const EvaluationReport*> points;
  for (const auto& run : result.runs) {
    if (!run.failed) points.push_back(&run);
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const auto* a, const auto* b) { return a->poison_rate < b->poison_rate; });
  if (!points.empty()) {
    svg += "<polyline fill=\"none\" stroke=\"#c33\" stroke-width=\"2\" points=\"";
    for (const auto* p : points) {
      std::snprintf(buf, sizeof(buf), "%g,%g ", x(p->poison_rate), y(p->reported_accuracy));
      svg += buf;
    }
    svg += "\"/>\n";
    for (const auto* p : points) {
      std::snprintf(buf, sizeof(buf), "<circle cx=\"%g\" cy=\"%g\" r=\"3.5\" fill=\"#c33\"/>\n", x(p->poison_rate),
                    y(p->reported_accuracy));
      svg += buf;
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace trainwreck::evaluation
