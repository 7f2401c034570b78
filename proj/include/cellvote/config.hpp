#pragma once
// Service configuration: JSON file, then CELLVOTE_* environment overrides.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "cellvote/orchestrator.hpp"

namespace cellvote::crowd {

struct ServiceConfig {
  OrchestratorConfig orchestrator;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string image_dir;    // served under /images when set
  std::string journal_dir;  // in-memory journal when empty
  int snapshot_every = 1000;
  int sweep_interval = 60;  // seconds between background sweeps, 0 disables
};

using EnvLookup = std::function<const char*(const char*)>;

// Keys: k, quorum, reward_usd, assignment_seconds, auto_approve_seconds,
// task_lifetime_seconds, min_approval_rate, require_master, host, port,
// image_dir, journal_dir, snapshot_every, sweep_interval. Environment names
// are the upper-cased keys prefixed with CELLVOTE_. Unknown keys and bad
// values throw Error(ParseError).
ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = nullptr);
// Same rules for an already parsed JSON object.
ServiceConfig service_config_from_json(const nlohmann::json& j, const EnvLookup& env = nullptr);

// Whole dollars to micro-dollars, rounded to the nearest micro.
Micros dollars_to_micros(double usd);
std::string format_dollars(Micros amount);

}  // namespace cellvote::crowd
