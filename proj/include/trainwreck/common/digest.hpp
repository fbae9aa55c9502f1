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

#ifndef TRAINWRECK_COMMON_DIGEST_HPP_
#define TRAINWRECK_COMMON_DIGEST_HPP_

#include <string>
#include <string_view>

namespace trainwreck {

// Lowercase hex digest of `bytes` under an OpenSSL digest name such as
// "sha256". Throws ConfigurationError for unknown names.
std::string hex_digest(std::string_view algorithm, std::string_view bytes);

// Digest length in bytes, or 0 for an unknown name.
std::size_t digest_size(std::string_view algorithm);

}  // namespace trainwreck

#endif  // TRAINWRECK_COMMON_DIGEST_HPP_
