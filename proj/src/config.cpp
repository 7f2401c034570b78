#include "cellvote/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "cellvote/error.hpp"

namespace cellvote::crowd {

using nlohmann::json;

namespace {

const char* const kKeys[] = {"k",
                             "quorum",
                             "reward_usd",
                             "assignment_seconds",
                             "auto_approve_seconds",
                             "task_lifetime_seconds",
                             "min_approval_rate",
                             "require_master",
                             "host",
                             "port",
                             "image_dir",
                             "journal_dir",
                             "snapshot_every",
                             "sweep_interval"};

void set(ServiceConfig& c, const std::string& key, const json& v) {
  OrchestratorConfig& o = c.orchestrator;
  if (key == "k") o.k = v.get<int>();
  else if (key == "quorum") o.quorum = v.get<int>();
  else if (key == "reward_usd") o.reward = dollars_to_micros(v.get<double>());
  else if (key == "assignment_seconds") o.assignment_duration = v.get<Seconds>();
  else if (key == "auto_approve_seconds") o.auto_approve_after = v.get<Seconds>();
  else if (key == "task_lifetime_seconds") o.task_lifetime = v.get<Seconds>();
  else if (key == "min_approval_rate") o.min_approval_rate = v.get<double>();
  else if (key == "require_master") o.require_master = v.get<bool>();
  else if (key == "host") c.host = v.get<std::string>();
  else if (key == "port") c.port = v.get<int>();
  else if (key == "image_dir") c.image_dir = v.get<std::string>();
  else if (key == "journal_dir") c.journal_dir = v.get<std::string>();
  else if (key == "snapshot_every") c.snapshot_every = v.get<int>();
  else if (key == "sweep_interval") c.sweep_interval = v.get<int>();
  else throw Error(ErrorKind::ParseError, "unknown configuration key '" + key + "'");
}

bool is_text_key(std::string_view key) { return key == "host" || key == "image_dir" || key == "journal_dir"; }

// Environment values are parsed as JSON scalars, except for text keys.
json env_value(std::string_view key, const char* text) {
  if (is_text_key(key)) return json(std::string(text));
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded() || v.is_structured()) return json(std::string(text));
  return v;
}

}  // namespace

Micros dollars_to_micros(double usd) {
  if (!std::isfinite(usd)) throw Error(ErrorKind::InvalidArgument, "amount must be finite");
  return static_cast<Micros>(std::llround(usd * static_cast<double>(kMicrosPerDollar)));
}

std::string format_dollars(Micros amount) {
  char buf[40];
  const char* sign = amount < 0 ? "-" : "";
  const long long a = std::llabs(amount);
  std::snprintf(buf, sizeof buf, "%s%lld.%06lld", sign, a / kMicrosPerDollar, a % kMicrosPerDollar);
  return buf;
}

ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  json j = json::object();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot open config '" + file->string() + "'");
    j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw Error(ErrorKind::ParseError, "config '" + file->string() + "' is not a JSON object");
  }
  return service_config_from_json(j, env);
}

ServiceConfig service_config_from_json(const json& j, const EnvLookup& env) {
  if (!j.is_object()) throw Error(ErrorKind::ParseError, "service config must be a JSON object");
  ServiceConfig config;
  for (const auto& [key, value] : j.items()) {
    try {
      set(config, key, value);
    } catch (const json::exception&) {
      throw Error(ErrorKind::ParseError, "bad value for configuration key '" + key + "'");
    }
  }
  const EnvLookup lookup = env ? env : [](const char* name) -> const char* { return std::getenv(name); };
  for (const char* key : kKeys) {
    std::string name = "CELLVOTE_";
    for (const char* p = key; *p; ++p) name += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
    const char* text = lookup(name.c_str());
    if (!text) continue;
    try {
      set(config, key, env_value(key, text));
    } catch (const json::exception&) {
      throw Error(ErrorKind::ParseError, "bad value for " + name);
    }
  }
  if (config.port < 0 || config.port > 65535) throw Error(ErrorKind::ParseError, "port out of range");
  return config;
}

}  // namespace cellvote::crowd
