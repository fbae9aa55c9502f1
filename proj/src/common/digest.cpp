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

#include "trainwreck/common/digest.hpp"

#include <openssl/evp.h>

#include <memory>

#include "trainwreck/common/error.hpp"

namespace trainwreck {

namespace {

const EVP_MD* find_digest(std::string_view algorithm) {
  return EVP_get_digestbyname(std::string(algorithm).c_str());
}

}  // namespace

std::size_t digest_size(std::string_view algorithm) {
  const EVP_MD* md = find_digest(algorithm);
  return md == nullptr ? 0 : static_cast<std::size_t>(EVP_MD_get_size(md));
}

std::string hex_digest(std::string_view algorithm, std::string_view bytes) {
  const EVP_MD* md = find_digest(algorithm);
  if (md == nullptr) throw ConfigurationError("unknown digest algorithm '" + std::string(algorithm) + "'");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out, &length) != 1) {
    throw Error("digest computation failed for '" + std::string(algorithm) + "'");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[out[i] >> 4];
    hex += kHex[out[i] & 0xf];
  }
  return hex;
}

}  // namespace trainwreck
