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

#ifndef TRAINWRECK_COMMON_IO_HPP_
#define TRAINWRECK_COMMON_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace trainwreck {

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temporary file and renames it into place, so a
// reader never observes a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Formats a double with 17 significant digits (round-trips binary64).
std::string format_exact(double value);

}  // namespace trainwreck

#endif  // TRAINWRECK_COMMON_IO_HPP_
