// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// 64-bit FNV-1a content hashes for manifests and golden checks.
#pragma once

#include "hsf/image.hpp"
#include "hsf/types.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace hsf {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for hashing");
  std::uint64_t h = kFnvOffset;
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) h = fnv1a64(std::string_view(buf, in.gcount()), h);
  return hash_hex(h);
}

/// Hash of the image's float dump, so it tracks exactly what save_f32 writes.
inline std::string hash_image(const Image& img) {
  std::ostringstream out;
  write_f32(out, img);
  return hash_hex(fnv1a64(out.str()));
}

}  // namespace hsf
