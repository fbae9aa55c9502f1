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

#include "trainwreck/adversarial/classifier.hpp"

#include <bit>
#include <cstring>

#include "json.hpp"
#include "trainwreck/common/error.hpp"
#include "trainwreck/common/io.hpp"

namespace trainwreck::adversarial {

namespace {

constexpr std::string_view kCheckpointMagic = "TWCKPT 1";

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto sidecar = path;
  sidecar += ".meta.json";
  return sidecar;
}

}  // namespace

Classifier::Classifier(nn::Network network, int n_classes, ClassifierMetadata metadata)
    : network_(std::move(network)), n_classes_(n_classes), metadata_(std::move(metadata)) {
  if (n_classes_ < 2 || static_cast<std::size_t>(n_classes_) != network_.output_size()) {
    throw ConfigurationError("classifier has " + std::to_string(network_.output_size()) +
                             " outputs for " + std::to_string(n_classes_) + " classes");
  }
}

int Classifier::predict(std::span<const float> image) const {
  nn::Batch batch(1, input_shape());
  if (image.size() != batch.values.size()) {
    throw ConfigurationError("image has " + std::to_string(image.size()) + " values, model expects " +
                             std::to_string(batch.values.size()));
  }
  std::copy(image.begin(), image.end(), batch.values.begin());
  return nn::argmax_rows(network_.forward(batch)).front();
}

std::vector<int> Classifier::predict(const data::ImageDataset& dataset) const {
  return nn::predict(network_, dataset);
}

Classifier::LossGradient Classifier::loss_gradient(const nn::Batch& inputs,
                                                   std::span<const int> classes) const {
  const auto tape = network_.forward_tape(inputs);
  nn::Batch grad_logits;
  LossGradient result;
  result.losses = nn::softmax_cross_entropy(tape.logits(), classes, &grad_logits, 1.0f);
  result.input_gradient = network_.backward(tape, grad_logits, nullptr, true);
  return result;
}

void Classifier::save(const std::filesystem::path& path) const {
  static_assert(std::endian::native == std::endian::little);
  nlohmann::ordered_json header;
  header["architecture_id"] = metadata_.architecture_id;
  header["height"] = input_shape().height;
  header["width"] = input_shape().width;
  header["channels"] = input_shape().channels;
  header["n_classes"] = n_classes_;
  const auto params = network_.flat_parameters();
  header["parameter_count"] = params.size();
  const std::string text = header.dump();
  std::string out(kCheckpointMagic);
  out += "\nheader-bytes " + std::to_string(text.size()) + "\n" + text + "\n";
  out.append(reinterpret_cast<const char*>(params.data()), params.size() * sizeof(float));
  write_file_atomic(path, out);

  nlohmann::ordered_json meta;
  meta["architecture_id"] = metadata_.architecture_id;
  meta["dataset_id"] = metadata_.dataset_id;
  meta["seed"] = metadata_.seed;
  meta["epochs"] = metadata_.epochs;
  meta["test_accuracy"] = metadata_.test_accuracy;
  meta["head_only"] = metadata_.head_only;
  write_file_atomic(sidecar_path(path), meta.dump(2) + "\n");
}

Classifier Classifier::load(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::string_view view(bytes);
  const auto line = [&]() {
    const auto end = view.find('\n');
    if (end == std::string_view::npos) throw FormatError("checkpoint '" + path.string() + "' is truncated");
    const auto result = view.substr(0, end);
    view.remove_prefix(end + 1);
    return std::string(result);
  };
  if (line() != kCheckpointMagic) throw FormatError("'" + path.string() + "' is not a checkpoint");
  const std::string size_line = line();
  if (size_line.rfind("header-bytes ", 0) != 0) throw FormatError("checkpoint lacks header-bytes");
  const std::size_t header_bytes = std::stoull(size_line.substr(13));
  if (header_bytes + 1 > view.size()) throw FormatError("checkpoint truncated in header");
  try {
    const auto header = nlohmann::json::parse(view.substr(0, header_bytes));
    view.remove_prefix(header_bytes + 1);
    const data::ImageShape shape{header.at("height").get<int>(), header.at("width").get<int>(),
                                 header.at("channels").get<int>()};
    const int n_classes = header.at("n_classes").get<int>();
    const auto arch = header.at("architecture_id").get<std::string>();
    nn::Network network = nn::make_network(arch, shape, n_classes);
    const auto count = header.at("parameter_count").get<std::size_t>();
    if (count != network.parameter_count() || view.size() != count * sizeof(float)) {
      throw FormatError("checkpoint '" + path.string() + "' parameter payload does not match " + arch);
    }
    std::vector<float> params(count);
    std::memcpy(params.data(), view.data(), view.size());
    network.load_parameters(params);

    ClassifierMetadata metadata;
    metadata.architecture_id = arch;
    if (std::filesystem::exists(sidecar_path(path))) {
      const auto meta = nlohmann::json::parse(read_file(sidecar_path(path)));
      metadata.dataset_id = meta.value("dataset_id", "");
      metadata.seed = meta.value("seed", std::uint64_t{0});
      metadata.epochs = meta.value("epochs", std::size_t{0});
      metadata.test_accuracy = meta.value("test_accuracy", 0.0);
      metadata.head_only = meta.value("head_only", false);
    }
    return Classifier(std::move(network), n_classes, std::move(metadata));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint '" + path.string() + "': " + e.what());
  }
}

TrainedClassifier train_surrogate(const data::ImageDataset& train, const data::ImageDataset& test,
                                  const std::string& architecture_id,
                                  const nn::TrainingConfig& config) {
  if (train.n_classes() != test.n_classes()) {
    throw ConfigurationError("train has " + std::to_string(train.n_classes()) + " classes, test has " +
                             std::to_string(test.n_classes()));
  }
  if (!(train.shape() == test.shape())) {
    throw ConfigurationError("train images are " + data::to_string(train.shape()) + ", test images are " +
                             data::to_string(test.shape()));
  }
  if (config.epochs == 0) throw ConfigurationError("surrogate training needs at least one epoch");
  nn::Network network = nn::make_network(architecture_id, train.shape(), train.n_classes());
  network.initialize(config.seed);
  nn::train(network, train, config);
  const double test_accuracy = nn::accuracy(network, test);
  ClassifierMetadata metadata{architecture_id, train.id(), config.seed, config.epochs, test_accuracy,
                              config.head_only};
  return TrainedClassifier{Classifier(std::move(network), train.n_classes(), std::move(metadata)),
                           test_accuracy};
}

}  // namespace trainwreck::adversarial
