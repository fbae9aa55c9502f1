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

#include "trainwreck/data/recipe.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <unordered_set>

#include "json.hpp"

#include "trainwreck/common/error.hpp"
#include "trainwreck/common/io.hpp"

namespace trainwreck::data {

static_assert(std::endian::native == std::endian::little,
              "recipe tensors are stored little-endian");

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kMagic = "TWRECIPE";
constexpr std::string_view kTensorMarker = "TWTENSORS\n";

const Json& field(const Json& header, const char* name) {
  if (!header.contains(name)) {
    throw FormatError(std::string("recipe header missing field '") + name + "'");
  }
  return header.at(name);
}

template <typename T>
T require(const Json& header, const char* name) {
  const Json& value = field(header, name);
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("recipe header field '") + name + "' has the wrong type");
  }
}

}  // namespace

const Perturbation& PoisonRecipe::tensor(const std::string& name) const {
  for (const auto& [key, value] : tensors) {
    if (key == name) return value;
  }
  throw FormatError("recipe references unknown tensor '" + name + "'");
}

bool PoisonRecipe::has_tensor(const std::string& name) const {
  return std::any_of(tensors.begin(), tensors.end(),
                     [&](const auto& entry) { return entry.first == name; });
}

void PoisonRecipe::add_tensor(std::string name, Perturbation perturbation) {
  if (has_tensor(name)) throw FormatError("duplicate tensor name '" + name + "'");
  tensors.emplace_back(std::move(name), std::move(perturbation));
}

std::size_t PoisonRecipe::perturb_edit_count() const {
  return static_cast<std::size_t>(std::count_if(edits.begin(), edits.end(), [](const Edit& e) {
    return std::holds_alternative<PerturbEdit>(e);
  }));
}

std::size_t PoisonRecipe::swap_edit_count() const { return edits.size() - perturb_edit_count(); }

std::vector<std::size_t> PoisonRecipe::touched_indices() const {
  std::vector<std::size_t> indices;
  for (const Edit& edit : edits) {
    if (const auto* p = std::get_if<PerturbEdit>(&edit)) {
      indices.push_back(p->index);
    } else {
      const auto& s = std::get<SwapEdit>(edit);
      indices.push_back(s.first);
      indices.push_back(s.second);
    }
  }
  return indices;
}

void validate_recipe(const PoisonRecipe& recipe) {
  if (!(recipe.poison_rate >= 0.0 && recipe.poison_rate <= 1.0)) {
    throw DomainError("recipe poison rate " + format_exact(recipe.poison_rate) +
                      " outside [0, 1]");
  }
  if (recipe.epsilon.numerator() < 0) throw DomainError("recipe epsilon is negative");
  std::unordered_set<std::size_t> seen;
  for (const std::size_t index : recipe.touched_indices()) {
    if (!seen.insert(index).second) {
      throw DomainError("record " + std::to_string(index) + " is edited more than once");
    }
  }
  std::unordered_set<std::string> names;
  for (const auto& [name, tensor] : recipe.tensors) {
    if (!names.insert(name).second) throw FormatError("duplicate tensor name '" + name + "'");
    if (!(tensor.epsilon() == recipe.epsilon)) {
      throw FormatError("tensor '" + name + "' budget " + tensor.epsilon().to_string() +
                        " differs from recipe budget " + recipe.epsilon.to_string());
    }
    if (!tensor.within_budget()) {
      throw DomainError("tensor '" + name + "' exceeds the l-infinity budget " +
                        recipe.epsilon.to_string());
    }
  }
  for (const Edit& edit : recipe.edits) {
    if (const auto* p = std::get_if<PerturbEdit>(&edit); p && !names.contains(p->tensor)) {
      throw FormatError("edit on record " + std::to_string(p->index) +
                        " references unknown tensor '" + p->tensor + "'");
    }
    if (const auto* s = std::get_if<SwapEdit>(&edit); s && s->first == s->second) {
      throw DomainError("swap of record " + std::to_string(s->first) + " with itself");
    }
  }
}

std::string serialize_recipe(const PoisonRecipe& recipe) {
  validate_recipe(recipe);
  Json header;
  header["format_version"] = kRecipeFormatVersion;
  header["dataset_id"] = recipe.dataset_id;
  header["attack_name"] = recipe.attack_name;
  header["poison_rate"] = recipe.poison_rate;
  header["epsilon"] = recipe.epsilon.to_string();
  header["seed"] = recipe.seed;
  Json edits = Json::array();
  for (const Edit& edit : recipe.edits) {
    if (const auto* p = std::get_if<PerturbEdit>(&edit)) {
      edits.push_back(Json::array({"perturb", p->index, p->tensor}));
    } else {
      const auto& s = std::get<SwapEdit>(edit);
      edits.push_back(Json::array({"swap", s.first, s.second}));
    }
  }
  header["edits"] = std::move(edits);
  Json tensors = Json::array();
  std::size_t offset = 0;
  for (const auto& [name, tensor] : recipe.tensors) {
    const std::size_t bytes = tensor.delta().size() * sizeof(float);
    tensors.push_back(Json{{"name", name},
                           {"shape", {tensor.shape().height, tensor.shape().width,
                                      tensor.shape().channels}},
                           {"offset", offset},
                           {"bytes", bytes}});
    offset += bytes;
  }
  header["tensors"] = std::move(tensors);

  const std::string text = header.dump();
  std::string out;
  out.reserve(text.size() + offset + 64);
  out += kMagic;
  out += " " + std::to_string(kRecipeFormatVersion) + "\n";
  out += "header-bytes " + std::to_string(text.size()) + "\n";
  out += text;
  out += "\n";
  out += kTensorMarker;
  for (const auto& entry : recipe.tensors) {
    const auto delta = entry.second.delta();
    out.append(reinterpret_cast<const char*>(delta.data()), delta.size() * sizeof(float));
  }
  return out;
}

PoisonRecipe parse_recipe(std::string_view bytes) {
  const auto take_line = [&bytes](const char* what) {
    const auto end = bytes.find('\n');
    if (end == std::string_view::npos) throw FormatError(std::string("recipe truncated in ") + what);
    std::string_view line = bytes.substr(0, end);
    bytes.remove_prefix(end + 1);
    return line;
  };
  const std::string_view magic_line = take_line("magic line");
  if (magic_line.substr(0, kMagic.size()) != kMagic || magic_line.size() <= kMagic.size() + 1) {
    throw FormatError("not a recipe file (bad magic)");
  }
  const std::string version(magic_line.substr(kMagic.size() + 1));
  if (version != std::to_string(kRecipeFormatVersion)) {
    throw VersionError("recipe format version " + version + " is not supported (expected " +
                       std::to_string(kRecipeFormatVersion) + ")");
  }
  const std::string_view size_line = take_line("header size");
  constexpr std::string_view kSizePrefix = "header-bytes ";
  if (size_line.substr(0, kSizePrefix.size()) != kSizePrefix) {
    throw FormatError("recipe missing header-bytes line");
  }
  std::size_t header_bytes = 0;
  try {
    header_bytes = std::stoull(std::string(size_line.substr(kSizePrefix.size())));
  } catch (const std::exception&) {
    throw FormatError("recipe header-bytes is not a number");
  }
  if (header_bytes + 1 + kTensorMarker.size() > bytes.size()) {
    throw FormatError("recipe truncated inside header");
  }
  Json header;
  try {
    header = Json::parse(bytes.substr(0, header_bytes));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("recipe header is not valid JSON: ") + e.what());
  }
  bytes.remove_prefix(header_bytes);
  if (bytes.substr(0, 1 + kTensorMarker.size()) != std::string("\n") + std::string(kTensorMarker)) {
    throw FormatError("recipe tensor container marker missing");
  }
  bytes.remove_prefix(1 + kTensorMarker.size());

  if (require<int>(header, "format_version") != kRecipeFormatVersion) {
    throw VersionError("recipe header format_version mismatch");
  }
  PoisonRecipe recipe;
  recipe.dataset_id = require<std::string>(header, "dataset_id");
  recipe.attack_name = require<std::string>(header, "attack_name");
  recipe.poison_rate = require<double>(header, "poison_rate");
  if (!(recipe.poison_rate >= 0.0 && recipe.poison_rate <= 1.0)) {
    throw DomainError("recipe field 'poison_rate' = " + format_exact(recipe.poison_rate) +
                      " outside [0, 1]");
  }
  recipe.epsilon = Rational::parse(require<std::string>(header, "epsilon"));
  recipe.seed = require<std::uint64_t>(header, "seed");

  const Json& edits = field(header, "edits");
  if (!edits.is_array()) throw FormatError("recipe field 'edits' is not an array");
  for (std::size_t k = 0; k < edits.size(); ++k) {
    const Json& e = edits[k];
    try {
      const auto kind = e.at(0).get<std::string>();
      if (kind == "perturb" && e.size() == 3) {
        recipe.edits.emplace_back(PerturbEdit{e.at(1).get<std::size_t>(), e.at(2).get<std::string>()});
      } else if (kind == "swap" && e.size() == 3) {
        recipe.edits.emplace_back(SwapEdit{e.at(1).get<std::size_t>(), e.at(2).get<std::size_t>()});
      } else {
        throw FormatError("");
      }
    } catch (const std::exception&) {
      throw FormatError("recipe field 'edits[" + std::to_string(k) + "]' is malformed");
    }
  }

  const Json& tensors = field(header, "tensors");
  if (!tensors.is_array()) throw FormatError("recipe field 'tensors' is not an array");
  std::size_t expected_offset = 0;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const Json& t = tensors[k];
    std::string name;
    ImageShape shape;
    std::size_t offset = 0, length = 0;
    try {
      name = t.at("name").get<std::string>();
      shape = ImageShape{t.at("shape").at(0).get<int>(), t.at("shape").at(1).get<int>(),
                         t.at("shape").at(2).get<int>()};
      offset = t.at("offset").get<std::size_t>();
      length = t.at("bytes").get<std::size_t>();
    } catch (const std::exception&) {
      throw FormatError("recipe field 'tensors[" + std::to_string(k) + "]' is malformed");
    }
    if (offset != expected_offset || length != shape.pixels() * sizeof(float) ||
        offset + length > bytes.size()) {
      throw FormatError("recipe tensor '" + name + "' has an inconsistent byte range");
    }
    std::vector<float> delta(shape.pixels());
    std::memcpy(delta.data(), bytes.data() + offset, length);
    recipe.add_tensor(name, Perturbation(shape, recipe.epsilon, std::move(delta)));
    expected_offset += length;
  }
  if (expected_offset != bytes.size()) {
    throw FormatError("recipe tensor container has " + std::to_string(bytes.size() - expected_offset) +
                      " trailing bytes");
  }
  validate_recipe(recipe);
  return recipe;
}

void write_recipe(const PoisonRecipe& recipe, const std::filesystem::path& destination) {
  write_file_atomic(destination, serialize_recipe(recipe));
}

PoisonRecipe read_recipe(const std::filesystem::path& source) {
  return parse_recipe(read_file(source));
}

}  // namespace trainwreck::data
