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

#include "trainwreck/data/loaders.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>

#include "json.hpp"
#include "trainwreck/common/error.hpp"
#include "trainwreck/common/io.hpp"
#include "trainwreck/common/random.hpp"

namespace trainwreck::data {

static_assert(std::endian::native == std::endian::little,
              "dataset containers are stored little-endian");

namespace fs = std::filesystem;

namespace {

constexpr int kCifarSide = 32;
constexpr std::size_t kCifarPixels = 32 * 32 * 3;

float level_to_float(std::uint8_t level) { return static_cast<float>(level) / 255.0f; }

// Appends the records of one CIFAR binary batch. `label_offset` selects the
// label byte (0 for CIFAR-10, 1 for the fine label of CIFAR-100).
void read_cifar_batch(const fs::path& file, std::size_t label_bytes, std::size_t label_offset,
                      int n_classes, std::vector<float>& pixels, std::vector<int>& labels) {
  const std::string bytes = read_file(file);
  const std::size_t record = label_bytes + kCifarPixels;
  const std::size_t complete = bytes.size() / record;
  if (bytes.size() % record != 0) {
    throw FormatError("'" + file.string() + "': record " + std::to_string(complete) +
                      " is truncated (" + std::to_string(bytes.size() % record) + " of " +
                      std::to_string(record) + " bytes)");
  }
  constexpr std::size_t kPlane = kCifarSide * kCifarSide;
  for (std::size_t r = 0; r < complete; ++r) {
    const auto* base = reinterpret_cast<const std::uint8_t*>(bytes.data()) + r * record;
    const int label = base[label_offset];
    if (label >= n_classes) {
      throw FormatError("'" + file.string() + "': record " + std::to_string(r) + " has label " +
                        std::to_string(label) + " (expected < " + std::to_string(n_classes) + ")");
    }
    labels.push_back(label);
    const std::uint8_t* planes = base + label_bytes;
    // Planar RGB on disk, channel-last in memory.
    for (std::size_t p = 0; p < kPlane; ++p) {
      for (std::size_t ch = 0; ch < 3; ++ch) pixels.push_back(level_to_float(planes[ch * kPlane + p]));
    }
  }
}

ImageDataset load_cifar_directory(const fs::path& dir, Split split) {
  const bool is_cifar10 = fs::exists(dir / "data_batch_1.bin") || fs::exists(dir / "test_batch.bin");
  const bool is_cifar100 = fs::exists(dir / "train.bin") || fs::exists(dir / "test.bin");
  std::vector<fs::path> files;
  std::size_t label_bytes = 1, label_offset = 0;
  int n_classes = 10;
  std::string id;
  if (is_cifar10) {
    id = "cifar10";
    if (split == Split::kTrain) {
      for (int b = 1; b <= 5; ++b) files.push_back(dir / ("data_batch_" + std::to_string(b) + ".bin"));
    } else {
      files.push_back(dir / "test_batch.bin");
    }
  } else if (is_cifar100) {
    id = "cifar100";
    label_bytes = 2;
    label_offset = 1;
    n_classes = 100;
    files.push_back(dir / (split == Split::kTrain ? "train.bin" : "test.bin"));
  } else {
    throw NotFoundError("'" + dir.string() + "' contains no CIFAR-10 or CIFAR-100 binary batches");
  }
  std::vector<float> pixels;
  std::vector<int> labels;
  for (const auto& file : files) {
    if (!fs::exists(file)) throw NotFoundError("missing batch file '" + file.string() + "'");
    read_cifar_batch(file, label_bytes, label_offset, n_classes, pixels, labels);
  }
  return ImageDataset(id, split, ImageShape{kCifarSide, kCifarSide, 3}, n_classes,
                      std::move(pixels), std::move(labels), StoragePrecision::kUint8);
}

fs::path registry_path(std::string_view name) {
  const char* env = std::getenv(kDataDirEnv);
  const fs::path root = env != nullptr ? fs::path(env) : fs::path("data");
  return root / (name == "cifar10" ? "cifar-10-batches-bin" : "cifar-100-binary");
}

constexpr std::string_view kContainerMagic = "TWDS 1";

ImageDataset load_container(const fs::path& path, Split split) {
  const std::string bytes = read_file(path);
  std::string_view view(bytes);
  const auto line = [&view, &path]() {
    const auto end = view.find('\n');
    if (end == std::string_view::npos) throw FormatError("'" + path.string() + "' is truncated");
    const auto result = view.substr(0, end);
    view.remove_prefix(end + 1);
    return result;
  };
  if (line() != kContainerMagic) throw FormatError("'" + path.string() + "' is not a dataset container");
  const std::string size_line(line());
  if (size_line.rfind("header-bytes ", 0) != 0) throw FormatError("'" + path.string() + "' lacks header-bytes");
  const std::size_t header_bytes = std::stoull(size_line.substr(13));
  if (header_bytes + 1 > view.size()) throw FormatError("'" + path.string() + "' truncated in header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(view.substr(0, header_bytes));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "' header: " + e.what());
  }
  view.remove_prefix(header_bytes + 1);
  try {
    const Split stored_split = parse_split(header.at("split").get<std::string>());
    if (stored_split != split) {
      throw NotFoundError("'" + path.string() + "' holds the " + std::string(to_string(stored_split)) +
                          " split, " + std::string(to_string(split)) + " was requested");
    }
    const ImageShape shape{header.at("height").get<int>(), header.at("width").get<int>(),
                           header.at("channels").get<int>()};
    const auto count = header.at("count").get<std::size_t>();
    const auto precision = parse_precision(header.at("precision").get<std::string>());
    const std::size_t pixel_bytes =
        count * shape.pixels() * (precision == StoragePrecision::kUint8 ? 1 : sizeof(float));
    const std::size_t expected = count * (sizeof(std::int32_t) + sizeof(std::uint32_t)) + pixel_bytes;
    if (view.size() != expected) {
      throw FormatError("'" + path.string() + "' payload is " + std::to_string(view.size()) +
                        " bytes, header implies " + std::to_string(expected));
    }
    std::vector<std::int32_t> raw_labels(count);
    std::vector<std::uint32_t> ids(count);
    std::memcpy(raw_labels.data(), view.data(), count * sizeof(std::int32_t));
    view.remove_prefix(count * sizeof(std::int32_t));
    std::memcpy(ids.data(), view.data(), count * sizeof(std::uint32_t));
    view.remove_prefix(count * sizeof(std::uint32_t));
    std::vector<float> pixels(count * shape.pixels());
    if (precision == StoragePrecision::kUint8) {
      for (std::size_t k = 0; k < pixels.size(); ++k) pixels[k] = level_to_float(static_cast<std::uint8_t>(view[k]));
    } else {
      std::memcpy(pixels.data(), view.data(), pixel_bytes);
    }
    return ImageDataset(header.at("id").get<std::string>(), split, shape,
                        header.at("n_classes").get<int>(), std::move(pixels),
                        std::vector<int>(raw_labels.begin(), raw_labels.end()), precision,
                        std::move(ids));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "' header field: " + e.what());
  }
}

}  // namespace

std::uint8_t quantize_to_uint8(float value) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0f, 1.0f) * 255.0f));
}

std::optional<fs::path> source_path(std::string_view source) {
  if (source.rfind("synthetic:", 0) == 0) return std::nullopt;
  if (source == "cifar10" || source == "cifar100") return registry_path(source);
  return fs::path(source);
}

ImageDataset load_dataset(std::string_view source, Split split) {
  if (source.rfind("synthetic:", 0) == 0) return make_synthetic(SyntheticSpec::parse(source), split);
  const fs::path path = *source_path(source);
  if (!fs::exists(path)) {
    std::string message = "dataset source '" + path.string() + "' does not exist";
    if (source == "cifar10" || source == "cifar100") {
      message += " (set " + std::string(kDataDirEnv) + " to the directory holding it)";
    }
    throw NotFoundError(message);
  }
  if (fs::is_directory(path)) {
    if (fs::is_empty(path)) throw NotFoundError("dataset directory '" + path.string() + "' is empty");
    return load_cifar_directory(path, split);
  }
  return load_container(path, split);
}

void save_dataset(const ImageDataset& dataset, const fs::path& path) {
  nlohmann::ordered_json header;
  header["id"] = dataset.id();
  header["split"] = std::string(to_string(dataset.split()));
  header["height"] = dataset.shape().height;
  header["width"] = dataset.shape().width;
  header["channels"] = dataset.shape().channels;
  header["n_classes"] = dataset.n_classes();
  header["count"] = dataset.size();
  header["precision"] = std::string(to_string(dataset.precision()));
  const std::string text = header.dump();
  std::string out;
  out += kContainerMagic;
  out += "\nheader-bytes " + std::to_string(text.size()) + "\n" + text + "\n";
  for (const int label : dataset.labels()) {
    const auto v = static_cast<std::int32_t>(label);
    out.append(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  for (const std::uint32_t id : dataset.record_ids()) {
    out.append(reinterpret_cast<const char*>(&id), sizeof(id));
  }
  if (dataset.precision() == StoragePrecision::kUint8) {
    for (const float v : dataset.pixels()) out.push_back(static_cast<char>(quantize_to_uint8(v)));
  } else {
    out.append(reinterpret_cast<const char*>(dataset.pixels().data()),
               dataset.pixels().size() * sizeof(float));
  }
  write_file_atomic(path, out);
}

void export_cifar10_binary(const ImageDataset& dataset, const fs::path& path) {
  if (dataset.shape() != ImageShape{kCifarSide, kCifarSide, 3} || dataset.n_classes() > 256) {
    throw FormatError("CIFAR binary export needs 32x32x3 images, got " + to_string(dataset.shape()));
  }
  constexpr std::size_t kPlane = kCifarSide * kCifarSide;
  std::string out;
  out.reserve(dataset.size() * (1 + kCifarPixels));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out.push_back(static_cast<char>(dataset.label(i)));
    const auto image = dataset.image(i);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      for (std::size_t p = 0; p < kPlane; ++p) out.push_back(static_cast<char>(quantize_to_uint8(image[p * 3 + ch])));
    }
  }
  write_file_atomic(path, out);
}

SyntheticSpec SyntheticSpec::parse(std::string_view text) {
  if (text.rfind("synthetic:", 0) == 0) text.remove_prefix(10);
  SyntheticSpec spec;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view() : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw FormatError("synthetic spec item '" + std::string(item) + "' lacks '='");
    const std::string key(item.substr(0, eq));
    const std::string value(item.substr(eq + 1));
    try {
      if (key == "classes") spec.classes = std::stoi(value);
      else if (key == "train") spec.train_per_class = std::stoi(value);
      else if (key == "test") spec.test_per_class = std::stoi(value);
      else if (key == "size") spec.height = spec.width = std::stoi(value);
      else if (key == "channels") spec.channels = std::stoi(value);
      else if (key == "noise") spec.noise = std::stod(value);
      else if (key == "twins") spec.twin_pairs = std::stoi(value) != 0;
      else if (key == "twin_offset") spec.twin_offset = std::stod(value);
      else if (key == "seed") spec.seed = std::stoull(value);
      else throw FormatError("unknown synthetic spec key '" + key + "'");
    } catch (const std::logic_error&) {
      throw FormatError("synthetic spec value '" + value + "' for '" + key + "' is not a number");
    }
  }
  if (spec.classes < 1 || spec.train_per_class < 0 || spec.test_per_class < 0 || spec.height < 1 ||
      spec.channels < 1 || spec.noise < 0.0) {
    throw FormatError("synthetic spec has out-of-range values");
  }
  return spec;
}

std::string SyntheticSpec::id() const {
  return "synthetic:classes=" + std::to_string(classes) + ",train=" + std::to_string(train_per_class) +
         ",test=" + std::to_string(test_per_class) + ",size=" + std::to_string(height) +
         ",channels=" + std::to_string(channels) + ",noise=" + format_exact(noise) +
         ",twins=" + std::to_string(twin_pairs ? 1 : 0) + ",twin_offset=" + format_exact(twin_offset) +
         ",seed=" + std::to_string(seed);
}

ImageDataset make_synthetic(const SyntheticSpec& spec, Split split) {
  const ImageShape shape{spec.height, spec.width, spec.channels};
  // Prototypes: a coarse 3x3 grid per channel, bilinearly upsampled.
  Rng proto_rng(derive_seed(spec.seed, 0));
  constexpr int kGrid = 3;
  std::vector<std::vector<float>> prototypes;
  std::vector<double> grid(kGrid * kGrid * static_cast<std::size_t>(spec.channels));
  for (int c = 0; c < spec.classes; ++c) {
    const bool twin = spec.twin_pairs && c % 2 == 1;
    if (!twin) {
      for (double& g : grid) g = proto_rng.uniform(0.2, 0.8);
    }
    std::vector<float> proto(shape.pixels());
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const double gy = spec.height == 1 ? 0.0 : (kGrid - 1) * static_cast<double>(y) / (spec.height - 1);
        const double gx = spec.width == 1 ? 0.0 : (kGrid - 1) * static_cast<double>(x) / (spec.width - 1);
        const int y0 = std::min(static_cast<int>(gy), kGrid - 2), x0 = std::min(static_cast<int>(gx), kGrid - 2);
        const double fy = gy - y0, fx = gx - x0;
        for (int ch = 0; ch < spec.channels; ++ch) {
          const auto at = [&](int yy, int xx) {
            return grid[(static_cast<std::size_t>(yy) * kGrid + xx) * spec.channels + ch];
          };
          const double v = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                           fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
          proto[(static_cast<std::size_t>(y) * spec.width + x) * spec.channels + ch] = static_cast<float>(v);
        }
      }
    }
    if (twin) {
      for (float& v : proto) v = static_cast<float>(v + proto_rng.uniform(-1.0, 1.0) * spec.twin_offset);
    }
    prototypes.push_back(std::move(proto));
  }

  const int per_class = split == Split::kTrain ? spec.train_per_class : spec.test_per_class;
  Rng rng(derive_seed(spec.seed, split == Split::kTrain ? 1 : 2));
  std::vector<float> pixels;
  std::vector<int> labels;
  pixels.reserve(shape.pixels() * per_class * spec.classes);
  // Interleave classes so index order is not class-sorted.
  for (int k = 0; k < per_class; ++k) {
    for (int c = 0; c < spec.classes; ++c) {
      for (const float v : prototypes[static_cast<std::size_t>(c)]) {
        pixels.push_back(std::clamp(static_cast<float>(v + spec.noise * rng.normal()), 0.0f, 1.0f));
      }
      labels.push_back(c);
    }
  }
  return ImageDataset(spec.id(), split, shape, spec.classes, std::move(pixels), std::move(labels));
}

}  // namespace trainwreck::data
