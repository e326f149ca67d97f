#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "glovesgns/error.hpp"

namespace glovesgns {

inline constexpr const char* kToolVersion = "0.1.0";

// 64-bit FNV-1a over a file's bytes.
inline std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for hashing: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Everything needed to re-run a command: resolved flags, seed, input hashes.
// Contains no timestamps, so identical runs produce identical manifests.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> flags;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["tool"] = "glovesgns";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["seed"] = seed;
    j["flags"] = flags;
    auto& in = j["inputs"] = nlohmann::json::array();
    for (const auto& path : inputs) in.push_back({{"path", path}, {"fnv1a64", hex64(fnv1a_file(path))}});
    return j;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError("error writing: " + path);
  }
};

}  // namespace glovesgns
