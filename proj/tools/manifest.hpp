#pragma once
// Run manifests: one JSON line per command run, appended next to its outputs.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace cellvote::cli {

std::string sha256_hex(std::string_view bytes);
// Directories hash the sorted list of (relative path, file digest) pairs.
std::string sha256_path(const std::filesystem::path& path);

class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void set_config(const std::string& digest_source);  // raw config text, or empty for defaults
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void set_parameter(const std::string& key, nlohmann::json value) { parameters_[key] = std::move(value); }

  nlohmann::json to_json() const;
  // Appends to <dir>/manifest.jsonl.
  void append_to(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  std::string config_digest_;
  std::uint64_t seed_ = 0;
  nlohmann::json inputs_ = nlohmann::json::array();
  std::vector<std::filesystem::path> outputs_;
  nlohmann::json parameters_ = nlohmann::json::object();
  std::chrono::steady_clock::time_point started_;
  std::int64_t started_at_;
};

}  // namespace cellvote::cli
