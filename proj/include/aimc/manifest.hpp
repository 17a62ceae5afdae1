/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "aimc/version.hpp"

/**
 * Every CLI run writes a manifest describing exactly what produced its
 * outputs: subcommand, config file (path plus content hash), profile, seeds,
 * and thread count. Replaying a manifest reruns the same work; because all
 * randomness is keyed and worker threads only partition seeds, the replayed
 * CSVs are byte-identical to the originals. The manifest itself is the one
 * file that differs between runs (its timestamp).
 */

namespace aimc {

struct Manifest {
  std::string artifact_version;  // library version that produced the run
  int config_schema_version = kConfigSchemaVersion;
  std::string subcommand;
  std::string config_path;
  std::string config_hash;  // fnv1a-64 of the config file bytes, 16 hex digits
  std::string profile;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> device_presets;
  std::vector<std::string> outputs;  // files written, relative to the out dir
  int threads = 1;
  std::string timestamp_utc;
};

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string to_hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

inline std::string hash_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "' for hashing");
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return to_hex16(fnv1a64(bytes.data(), bytes.size()));
}

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

inline void write_manifest(const std::string& path, const Manifest& m) {
  nlohmann::json j;
  j["artifact_version"] = m.artifact_version;
  j["config_schema_version"] = m.config_schema_version;
  j["subcommand"] = m.subcommand;
  j["config_path"] = m.config_path;
  j["config_hash"] = m.config_hash;
  j["profile"] = m.profile;
  j["seeds"] = m.seeds;
  j["device_presets"] = m.device_presets;
  j["outputs"] = m.outputs;
  j["threads"] = m.threads;
  j["timestamp_utc"] = m.timestamp_utc;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << j.dump(2) << "\n";
}

inline Manifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("manifest '" + path + "': " + e.what());
  }
  Manifest m;
  try {
    m.artifact_version = j.at("artifact_version").get<std::string>();
    m.config_schema_version = j.at("config_schema_version").get<int>();
    m.subcommand = j.at("subcommand").get<std::string>();
    m.config_path = j.at("config_path").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.profile = j.at("profile").get<std::string>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.device_presets = j.at("device_presets").get<std::vector<std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.threads = j.at("threads").get<int>();
    m.timestamp_utc = j.at("timestamp_utc").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("manifest '" + path + "': " + e.what());
  }
  return m;
}

}  // namespace aimc
