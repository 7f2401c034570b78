#pragma once
// Subcommand implementations behind the `cellvote` binary. Each returns a
// process exit code and writes only to the streams it is given.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellvote/error.hpp"

namespace cellvote::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kData = 4 };

int exit_code(ErrorKind kind);

struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> out;  // output directory; manifest.jsonl goes here
};

// Parsed --config file. Sections are keyed by subcommand name.
struct ConfigFile {
  std::string text;  // raw bytes, for the manifest digest
  nlohmann::json root = nlohmann::json::object();

  const nlohmann::json& section(const std::string& name) const;
};

// Throws MissingFile, or InvalidArgument for malformed JSON.
ConfigFile load_config(const std::optional<std::filesystem::path>& path);

struct Io {
  std::ostream& out;
  std::ostream& err;
};

struct SegmentArgs {
  std::vector<std::filesystem::path> inputs;  // images or directories of images
  std::optional<double> mu;
  std::optional<int> max_iter;
  std::optional<double> tol;
  std::optional<int> min_area;
  std::optional<int> pad;
};

struct BatchArgs {
  std::filesystem::path manifest;  // truth manifest listing the crops
  std::optional<std::string> pairing;
  std::optional<int> k;
  std::optional<double> reward_usd;
  std::optional<std::filesystem::path> journal;
};

struct ServeArgs {
  std::optional<std::string> host;
  std::optional<int> port;  // 0 picks a free port
  std::optional<std::filesystem::path> journal;
  std::optional<std::filesystem::path> images;
};

struct SimulateArgs {
  std::optional<int> workers;
  std::optional<std::string> items;     // "617,181,50"
  std::optional<std::filesystem::path> truth;
  std::optional<std::string> rho;       // one value or three
  std::optional<std::string> calibrate; // target consensus accuracies
  std::optional<int> k;
  std::optional<int> quorum;
  std::optional<int> mc_items;
};

struct AggregateArgs {
  std::filesystem::path votes;
  int k = 5;
  int quorum = 3;
};

struct ReportArgs {
  std::filesystem::path votes;
  std::filesystem::path truth;
  std::string format = "text";  // text | csv | json
  std::string na = "exclude";   // exclude | error
  int k = 5;
  int quorum = 3;
};

struct EstimateArgs {
  std::vector<std::string> alphas;  // decimals or fractions "a/b"
  int k = 5;
  int quorum = 3;
};

int cmd_segment(const SegmentArgs& args, const GlobalOptions& global, Io io);
int cmd_batch(const BatchArgs& args, const GlobalOptions& global, Io io);
int cmd_serve(const ServeArgs& args, const GlobalOptions& global, Io io);
int cmd_simulate(const SimulateArgs& args, const GlobalOptions& global, Io io);
int cmd_aggregate(const AggregateArgs& args, const GlobalOptions& global, Io io);
int cmd_report(const ReportArgs& args, const GlobalOptions& global, Io io);
int cmd_estimate(const EstimateArgs& args, const GlobalOptions& global, Io io);

// "0.8674" or "2676/3085". Throws InvalidArgument.
double parse_probability(const std::string& text);

}  // namespace cellvote::cli
