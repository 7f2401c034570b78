#include <doctest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cellvote/image.hpp"
#include "commands.hpp"
#include "manifest.hpp"
#include "reference_corpus.hpp"
#include "phantom.hpp"

using namespace cellvote;
using namespace cellvote::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cellvote-cli-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Captured {
  std::ostringstream out, err;
  Io io() { return Io{out, err}; }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool has_line(const std::string& text, const std::string& name, int count) {
  char line[96];
  std::snprintf(line, sizeof line, "  %-12s %8d\n", name.c_str(), count);
  return text.find(line) != std::string::npos;
}

int run_binary(const std::string& args) {
  const int status = std::system((std::string(CELLVOTE_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("estimate prints the binomial table") {
  Captured c;
  EstimateArgs args;
  args.alphas = {"2676/3085", "614/905", "153/250", "0.5"};
  REQUIRE(cmd_estimate(args, {}, c.io()) == kOk);
  const std::string out = c.out.str();
  CHECK(out.find("98.11%") != std::string::npos);
  CHECK(out.find("80.73%") != std::string::npos);
  CHECK(out.find("70.31%") != std::string::npos);
  CHECK(out.find("50.00%") != std::string::npos);

  args.alphas = {"1.2"};
  CHECK(cmd_estimate(args, {}, c.io()) == kUsage);
  args.alphas = {"0.8"};
  args.quorum = 6;
  CHECK(cmd_estimate(args, {}, c.io()) == kUsage);
}

TEST_CASE("aggregate reproduces the corpus histogram") {
  const fs::path dir = scratch("aggregate");
  testing::write_corpus(testing::load_reference_corpus(), dir.string());

  Captured c;
  GlobalOptions g;
  g.out = dir / "out";
  REQUIRE(cmd_aggregate({dir / "votes.csv"}, g, c.io()) == kOk);
  const std::string out = c.out.str();
  CHECK(out.find("votes 4240\n") != std::string::npos);
  CHECK(out.find("items 848\n") != std::string::npos);
  CHECK(has_line(out, "5", 463));
  CHECK(has_line(out, "4-1", 226));
  CHECK(has_line(out, "3-*", 135));
  CHECK(has_line(out, "2-2-1", 24));
  CHECK(c.err.str().empty());
  CHECK(fs::exists(dir / "out" / "consensus.csv"));
  CHECK(fs::exists(dir / "out" / "manifest.jsonl"));

  SUBCASE("empty file gives an all-zero histogram") {
    std::ofstream(dir / "empty.csv") << "";
    Captured e;
    REQUIRE(cmd_aggregate({dir / "empty.csv"}, {}, e.io()) == kOk);
    CHECK(e.out.str().find("votes 0\n") != std::string::npos);
    CHECK(has_line(e.out.str(), "5", 0));
    CHECK(has_line(e.out.str(), "2-2-1", 0));
  }
  SUBCASE("a four-vote item is reported as incomplete") {
    std::ofstream(dir / "four.csv") << "item_id,worker_id,label,timestamp\n"
                                       "a,w1,circular,0\na,w2,circular,0\na,w3,other,0\na,w4,circular,0\n";
    Captured e;
    REQUIRE(cmd_aggregate({dir / "four.csv"}, {}, e.io()) == kOk);
    CHECK(e.err.str().find("warning") != std::string::npos);
    CHECK(has_line(e.out.str(), "incomplete", 1));
  }
  SUBCASE("parse errors name the line") {
    std::ofstream(dir / "bad.csv") << "item_id,worker_id,label,timestamp\na,w1,square,0\n";
    Captured e;
    CHECK(cmd_aggregate({dir / "bad.csv"}, {}, e.io()) == kData);
    CHECK(e.err.str().find("2") != std::string::npos);
  }
  SUBCASE("missing input is an I/O error") {
    Captured e;
    CHECK(cmd_aggregate({dir / "nope.csv"}, {}, e.io()) == kIo);
  }
}

TEST_CASE("report on the corpus shows the individual rows and flags discrepancies") {
  const fs::path dir = scratch("report");
  testing::write_corpus(testing::load_reference_corpus(), dir.string());
  Captured c;
  ReportArgs args;
  args.votes = dir / "votes.csv";
  args.truth = dir / "truth.csv";
  REQUIRE(cmd_report(args, {}, c.io()) == kOk);
  const std::string out = c.out.str();
  CHECK(out.find("0.8759") != std::string::npos);
  CHECK(out.find("91.73%") != std::string::npos);
  CHECK(out.find("5 agree") != std::string::npos);
  CHECK(out.find("DISCREPANCY") != std::string::npos);

  args.format = "json";
  Captured j;
  REQUIRE(cmd_report(args, {}, j.io()) == kOk);
  std::istringstream lines(j.out.str());
  std::string first;
  std::getline(lines, first);
  CHECK(nlohmann::json::parse(first).is_object());

  args.format = "yaml";
  CHECK(cmd_report(args, {}, j.io()) == kUsage);
}

TEST_CASE("report on a perfect corpus is all ones") {
  const fs::path dir = scratch("perfect");
  std::ofstream votes(dir / "votes.csv");
  std::ofstream truth(dir / "truth.csv");
  const char* labels[] = {"circular", "elongated", "other"};
  for (int i = 0; i < 9; ++i) {
    truth << "p" << i << ".png," << labels[i % 3] << ",src\n";
    for (int w = 0; w < 5; ++w) votes << 'p' << i << ",w" << w << ',' << labels[i % 3] << ",0\n";
  }
  votes.close();
  truth.close();
  Captured c;
  ReportArgs args;
  args.votes = dir / "votes.csv";
  args.truth = dir / "truth.csv";
  args.format = "csv";
  REQUIRE(cmd_report(args, {}, c.io()) == kOk);
  std::istringstream in(c.out.str());
  std::string line;
  int checked = 0;
  while (std::getline(in, line)) {
    const std::string prefix = "metrics_3class,Individual,";
    if (line.rfind(prefix, 0) != 0) continue;
    const std::string column = line.substr(prefix.size(), line.find(',', prefix.size()) - prefix.size());
    if (column == "sds" || column == "f_macro" || column == "cba" || column == "mcc") {
      CHECK(line.substr(line.rfind(',') + 1) == "1.0000");
      ++checked;
    }
  }
  CHECK(checked == 4);
}

TEST_CASE("segment turns a two-disk phantom into two crops") {
  const fs::path dir = scratch("segment");
  fs::create_directories(dir / "in");
  const auto img = testing::phantom(96, 64, {{24, 32, 12}, {70, 30, 14}});
  seg::save_gray_png(dir / "in" / "pair.png", img);

  Captured c;
  GlobalOptions g;
  g.out = dir / "crops";
  SegmentArgs args;
  args.inputs = {dir / "in"};
  args.mu = 0.2;
  args.max_iter = 1000;
  REQUIRE(cmd_segment(args, g, c.io()) == kOk);
  CHECK(c.out.str().find("crops 2") != std::string::npos);
  CHECK(fs::exists(dir / "crops" / "pair-c0000.png"));
  CHECK(fs::exists(dir / "crops" / "pair-c0001.png"));

  const auto m = nlohmann::json::parse(slurp(dir / "crops" / "manifest.jsonl"));
  CHECK(m["command"] == "segment");
  CHECK(m["parameters"]["mu"] == 0.2);
  CHECK(m["parameters"]["max_iter"] == 1000);
  CHECK(m["inputs"][0]["sha256"] == sha256_path(dir / "in" / "pair.png"));

  fs::create_directories(dir / "none");
  CHECK(cmd_segment({{dir / "none"}}, g, c.io()) == kData);
  CHECK(cmd_segment({{dir / "missing"}}, g, c.io()) == kIo);
  SegmentArgs bad = args;
  bad.mu = -1.0;
  CHECK(cmd_segment(bad, g, c.io()) == kUsage);
}

TEST_CASE("config sections feed the commands") {
  const fs::path dir = scratch("config");
  fs::create_directories(dir / "in");
  seg::save_gray_png(dir / "in" / "one.png", testing::phantom(64, 64, {{32, 32, 14}}));
  std::ofstream(dir / "cfg.json") << R"({"segment": {"mu": 0.25, "min_area": 50}})";
  GlobalOptions g;
  g.config = dir / "cfg.json";
  g.out = dir / "out";
  Captured c;
  REQUIRE(cmd_segment({{dir / "in"}}, g, c.io()) == kOk);
  const auto m = nlohmann::json::parse(slurp(dir / "out" / "manifest.jsonl"));
  CHECK(m["parameters"]["mu"] == 0.25);
  CHECK(m["parameters"]["min_area"] == 50);
  CHECK(m["config_sha256"] == sha256_hex(slurp(dir / "cfg.json")));

  std::ofstream(dir / "bad.json") << R"({"segment": {"mew": 0.25}})";
  g.config = dir / "bad.json";
  CHECK(cmd_segment({{dir / "in"}}, g, c.io()) == kUsage);
  g.config = dir / "absent.json";
  CHECK(cmd_segment({{dir / "in"}}, g, c.io()) == kIo);
}

TEST_CASE("simulate is deterministic given the seed") {
  const fs::path dir = scratch("simulate");
  SimulateArgs args;
  args.items = "40,20,10";
  args.rho = "0.3";
  GlobalOptions g;
  g.seed = 7;
  g.out = dir / "a";
  Captured c;
  REQUIRE(cmd_simulate(args, g, c.io()) == kOk);
  g.out = dir / "b";
  REQUIRE(cmd_simulate(args, g, c.io()) == kOk);
  CHECK(sha256_path(dir / "a" / "votes.csv") == sha256_path(dir / "b" / "votes.csv"));
  CHECK(sha256_path(dir / "a" / "truth.csv") == sha256_path(dir / "b" / "truth.csv"));
  g.seed = 8;
  g.out = dir / "c";
  REQUIRE(cmd_simulate(args, g, c.io()) == kOk);
  CHECK(sha256_path(dir / "a" / "votes.csv") != sha256_path(dir / "c" / "votes.csv"));

  Captured agg;
  REQUIRE(cmd_aggregate({dir / "a" / "votes.csv"}, {}, agg.io()) == kOk);
  CHECK(agg.out.str().find("votes 350\n") != std::string::npos);

  args.workers = 3;
  CHECK(cmd_simulate(args, g, c.io()) == kData);
  args.workers.reset();
  args.calibrate = "0.99";
  args.rho.reset();
  CHECK(cmd_simulate(args, g, c.io()) == kData);
}

TEST_CASE("batch pairs items into tasks") {
  const fs::path dir = scratch("batch");
  testing::write_corpus(testing::load_reference_corpus(), dir.string());
  GlobalOptions g;
  g.out = dir / "out";
  BatchArgs args;
  args.manifest = dir / "truth.csv";
  Captured c;
  REQUIRE(cmd_batch(args, g, c.io()) == kOk);
  CHECK(c.out.str().find("848 items, 424 tasks") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "journal" / "commands.jsonl"));
  std::istringstream tasks(slurp(dir / "out" / "tasks.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(tasks, line)) rows += !line.empty();
  CHECK(rows == 425);

  args.pairing = "diagonal";
  CHECK(cmd_batch(args, g, c.io()) == kUsage);
}

TEST_CASE("binary exit codes") {
  CHECK(run_binary("estimate 0.5") == 0);
  CHECK(run_binary("--help") == 0);
  CHECK(run_binary("") == 2);
  CHECK(run_binary("estimate") == 2);
  CHECK(run_binary("frobnicate") == 2);
  CHECK(run_binary("aggregate /nonexistent/votes.csv") == 3);
  const fs::path dir = scratch("exit");
  std::ofstream(dir / "bad.csv") << "x,y\n";
  CHECK(run_binary("aggregate " + (dir / "bad.csv").string()) == 4);
}

TEST_CASE("serve answers the health probe and stops on SIGTERM") {
  int pipefd[2];
  REQUIRE(::pipe(pipefd) == 0);
  const pid_t pid = ::fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    ::dup2(pipefd[1], STDOUT_FILENO);
    ::close(pipefd[0]);
    ::execl(CELLVOTE_CLI_PATH, CELLVOTE_CLI_PATH, "serve", "--port", "0", static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(pipefd[1]);
  std::string line;
  char ch;
  while (::read(pipefd[0], &ch, 1) == 1 && ch != '\n') line += ch;
  REQUIRE(line.rfind("listening on 127.0.0.1:", 0) == 0);
  const int port = std::stoi(line.substr(line.rfind(':') + 1));

  httplib::Client client("127.0.0.1", port);
  const auto res = client.Get("/health");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(nlohmann::json::parse(res->body)["status"] == "ok");

  ::kill(pid, SIGTERM);
  int status = 0;
  ::waitpid(pid, &status, 0);
  ::close(pipefd[0]);
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
}
