#include "commands.hpp"

#include <pthread.h>
#include <signal.h>

#include <array>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "cellvote/annotation.hpp"
#include "cellvote/config.hpp"
#include "cellvote/dataset.hpp"
#include "cellvote/orchestrator.hpp"
#include "cellvote/records.hpp"
#include "cellvote/report.hpp"
#include "cellvote/rng.hpp"
#include "cellvote/segmentation.hpp"
#include "cellvote/service.hpp"
#include "cellvote/simulator.hpp"
#include "manifest.hpp"

namespace cellvote::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::DomainError:
      return kUsage;
    case ErrorKind::MissingFile:
    case ErrorKind::IoError:
      return kIo;
    default:
      return kData;
  }
}

const json& ConfigFile::section(const std::string& name) const {
  static const json empty = json::object();
  const auto it = root.find(name);
  return it == root.end() ? empty : *it;
}

ConfigFile load_config(const std::optional<fs::path>& path) {
  ConfigFile cfg;
  if (!path) return cfg;
  std::ifstream in(*path);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open config '" + path->string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  cfg.text = buf.str();
  cfg.root = json::parse(cfg.text, nullptr, false);
  if (cfg.root.is_discarded() || !cfg.root.is_object())
    throw Error(ErrorKind::InvalidArgument, "config '" + path->string() + "' is not a JSON object");
  return cfg;
}

namespace {

// Flag, then config section, then default.
template <class T>
T pick(const std::optional<T>& flag, const json& section, const char* key, T fallback) {
  if (flag) return *flag;
  const auto it = section.find(key);
  if (it == section.end()) return fallback;
  try {
    return it->template get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::InvalidArgument, std::string("config key '") + key + "' has the wrong type");
  }
}

void check_keys(const json& section, const char* name, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : section.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(ErrorKind::InvalidArgument, std::string("unknown key '") + key + "' in config section '" + name + "'");
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

double parse_double(const std::string& text, const char* what) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) throw Error(ErrorKind::InvalidArgument, std::string("bad ") + what + " '" + text + "'");
  return v;
}

int parse_int(const std::string& text, const char* what) {
  int v = 0;
  const char* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) throw Error(ErrorKind::InvalidArgument, std::string("bad ") + what + " '" + text + "'");
  return v;
}

sim::ClassProbabilities parse_triple(const std::string& text, const char* what) {
  const auto parts = split(text, ',');
  sim::ClassProbabilities out{};
  if (parts.size() == 1) {
    out.fill(parse_probability(parts[0]));
  } else if (parts.size() == kNumClasses) {
    for (std::size_t i = 0; i < kNumClasses; ++i) out[i] = parse_probability(parts[i]);
  } else {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " takes one value or three comma-separated values");
  }
  return out;
}

// Config values given either as "0.1,0.2,0.3" or as a bare number.
std::optional<std::string> scalar_text(const json& section, const char* key) {
  const auto it = section.find(key);
  if (it == section.end()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number()) return it->dump();
  throw Error(ErrorKind::InvalidArgument, std::string("config key '") + key + "' must be a string or a number");
}

fs::path out_dir(const GlobalOptions& g, const char* fallback) { return g.out ? *g.out : fs::path(fallback); }

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
}

template <class F>
int guarded(Io io, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    io.err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    io.err << "error: IoError: " << e.what() << '\n';
    return kIo;
  }
}

std::vector<fs::path> collect_images(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> images;
  for (const fs::path& p : inputs) {
    if (!fs::exists(p)) throw Error(ErrorKind::MissingFile, "no such file or directory '" + p.string() + "'");
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p))
        if (entry.is_regular_file() && seg::is_raster_file(entry.path())) found.push_back(entry.path());
      std::sort(found.begin(), found.end());
      images.insert(images.end(), found.begin(), found.end());
    } else {
      images.push_back(p);
    }
  }
  if (images.empty()) throw Error(ErrorKind::EmptyBatch, "no images found in the given inputs");
  return images;
}

struct BatchItems {
  std::vector<std::string> items;
  std::map<std::string, CellClass> truth;
};

// Either a crops.csv written by `segment` or a truth manifest.
BatchItems read_batch_items(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::MissingFile, "no such file '" + path.string() + "'");
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  BatchItems out;
  if (first.rfind("item_id,", 0) == 0) {
    std::string line;
    int n = 1;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.empty() || fields[0].empty())
        throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(n) + ": missing item_id");
      out.items.push_back(fields[0]);
    }
    return out;
  }
  for (const GroundTruthRecord& r : ingest_dataset(path)) {
    out.items.push_back(r.item_id());
    out.truth[r.item_id()] = r.true_label();
  }
  return out;
}

std::string percent(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * p);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

double parse_probability(const std::string& text) {
  const auto slash = text.find('/');
  double v;
  if (slash == std::string::npos) {
    v = parse_double(text, "probability");
  } else {
    const double num = parse_double(text.substr(0, slash), "numerator");
    const double den = parse_double(text.substr(slash + 1), "denominator");
    if (den == 0.0) throw Error(ErrorKind::InvalidArgument, "zero denominator in '" + text + "'");
    v = num / den;
  }
  if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::InvalidArgument, "probability '" + text + "' is outside [0, 1]");
  return v;
}

int cmd_segment(const SegmentArgs& args, const GlobalOptions& global, Io io) {
  return guarded(io, [&] {
    const ConfigFile cfg = load_config(global.config);
    const json& sec = cfg.section("segment");
    check_keys(sec, "segment", {"mu", "max_iter", "tol", "min_area", "pad"});
    seg::SegmentOptions opt;
    opt.chan_vese.mu = pick(args.mu, sec, "mu", opt.chan_vese.mu);
    opt.chan_vese.max_iter = pick(args.max_iter, sec, "max_iter", opt.chan_vese.max_iter);
    opt.chan_vese.tol = pick(args.tol, sec, "tol", opt.chan_vese.tol);
    opt.min_area = pick(args.min_area, sec, "min_area", opt.min_area);
    opt.pad = pick(args.pad, sec, "pad", opt.pad);
    if (opt.min_area < 0 || opt.pad < 0) throw Error(ErrorKind::InvalidArgument, "min-area and pad must be nonnegative");

    const std::vector<fs::path> images = collect_images(args.inputs);
    const fs::path dir = out_dir(global, "crops");
    fs::create_directories(dir);

    RunManifest manifest("segment");
    manifest.set_config(cfg.text);
    manifest.set_seed(global.seed);
    manifest.set_parameter("mu", opt.chan_vese.mu);
    manifest.set_parameter("max_iter", opt.chan_vese.max_iter);
    manifest.set_parameter("tol", opt.chan_vese.tol);
    manifest.set_parameter("min_area", opt.min_area);
    manifest.set_parameter("pad", opt.pad);

    std::ostringstream csv;
    csv << "item_id,crop_path,source_image_id,x,y,width,height,area\n";
    std::size_t total = 0;
    for (const fs::path& image : images) {
      manifest.add_input(image);
      const seg::SegmentedImage s = seg::segment_file(image, dir, opt);
      for (const seg::CellCrop& c : s.crops) {
        csv << c.item_id << ',' << c.item_id << ".png," << c.source_image_id << ',' << c.box.x << ',' << c.box.y << ','
            << c.box.width << ',' << c.box.height << ',' << c.area << '\n';
        manifest.add_output(dir / (c.item_id + ".png"));
      }
      total += s.crops.size();
      io.out << s.source_image_id << ": " << s.crops.size() << " crops, " << s.segmentation.state.iteration
             << " iterations, " << (s.segmentation.converged ? "converged" : "not converged") << '\n';
    }
    write_file(dir / "crops.csv", csv.str());
    manifest.add_output(dir / "crops.csv");
    manifest.append_to(dir);
    io.out << "crops " << total << '\n';
    return kOk;
  });
}

int cmd_batch(const BatchArgs& args, const GlobalOptions& global, Io io) {
  return guarded(io, [&] {
    const ConfigFile cfg = load_config(global.config);
    const json& sec = cfg.section("batch");
    check_keys(sec, "batch", {"pairing", "k", "reward_usd", "journal"});
    const fs::path dir = out_dir(global, "batch");

    crowd::OrchestratorConfig oc;
    crowd::BatchSpec spec;
    BatchItems items = read_batch_items(args.manifest);
    spec.items = std::move(items.items);
    spec.truth = std::move(items.truth);
    spec.pairing = crowd::parse_pairing(pick(args.pairing, sec, "pairing", std::string("sequential")));
    spec.seed = global.seed;
    spec.k = pick(args.k, sec, "k", oc.k);
    spec.reward = crowd::dollars_to_micros(pick(args.reward_usd, sec, "reward_usd", 0.01));
    const fs::path journal_dir =
        args.journal ? *args.journal : fs::path(pick(std::optional<std::string>{}, sec, "journal", (dir / "journal").string()));

    fs::create_directories(dir);
    auto orchestrator = crowd::Orchestrator::open(oc, journal_dir, 1000);
    const crowd::Batch batch = orchestrator->create_batch(spec, system_now());

    std::ostringstream csv;
    csv << "task_id,batch_id,item_ids\n";
    orchestrator->read([&](const crowd::State& state) {
      for (const std::string& id : batch.task_ids) {
        const crowd::Task& t = state.task(id);
        csv << t.task_id << ',' << t.batch_id << ',';
        for (std::size_t i = 0; i < t.items.size(); ++i) csv << (i ? ";" : "") << t.items[i];
        csv << '\n';
      }
    });
    write_file(dir / "tasks.csv", csv.str());

    RunManifest manifest("batch");
    manifest.set_config(cfg.text);
    manifest.set_seed(global.seed);
    manifest.add_input(args.manifest);
    manifest.set_parameter("pairing", crowd::to_string(spec.pairing));
    manifest.set_parameter("k", *spec.k);
    manifest.set_parameter("reward_micros", *spec.reward);
    manifest.set_parameter("journal", journal_dir.string());
    manifest.add_output(dir / "tasks.csv");
    manifest.append_to(dir);

    io.out << batch.batch_id << ": " << spec.items.size() << " items, " << batch.task_ids.size() << " tasks\n";
    io.out << "journal " << journal_dir.string() << '\n';
    return kOk;
  });
}

int cmd_serve(const ServeArgs& args, const GlobalOptions& global, Io io) {
  return guarded(io, [&] {
    const ConfigFile cfg = load_config(global.config);
    crowd::ServiceConfig sc = crowd::service_config_from_json(cfg.section("serve"), [](const char* n) { return std::getenv(n); });
    if (args.host) sc.host = *args.host;
    if (args.port) sc.port = *args.port;
    if (args.journal) sc.journal_dir = args.journal->string();
    if (args.images) sc.image_dir = args.images->string();
    if (sc.port < 0 || sc.port > 65535) throw Error(ErrorKind::InvalidArgument, "port must be in [0, 65535]");
    if (!sc.image_dir.empty() && !fs::is_directory(sc.image_dir))
      throw Error(ErrorKind::MissingFile, "image directory '" + sc.image_dir + "' does not exist");

    // SIGINT/SIGTERM are taken synchronously by a waiter thread; every other
    // thread inherits the blocked mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    crowd::Service service(sc);
    int port = sc.port;
    if (port == 0) {
      port = service.bind_any_port();
      if (port < 0) throw Error(ErrorKind::IoError, "cannot bind " + sc.host);
    }
    std::thread waiter([&] {
      int sig = 0;
      sigwait(&signals, &sig);
      service.stop();
    });
    io.out << "listening on " << sc.host << ':' << port << std::endl;
    const bool ok = sc.port == 0 ? service.listen_after_bind() : service.listen();
    // Wake the waiter if the server stopped on its own.
    if (waiter.joinable()) {
      pthread_kill(waiter.native_handle(), SIGTERM);
      waiter.join();
    }
    pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
    if (!ok) {
      io.err << "error: IoError: cannot listen on " << sc.host << ':' << port << '\n';
      return kIo;
    }
    io.out << "stopped" << std::endl;
    (void)global;
    return kOk;
  });
}

int cmd_simulate(const SimulateArgs& args, const GlobalOptions& global, Io io) {
  return guarded(io, [&] {
    const ConfigFile cfg = load_config(global.config);
    const json& sec = cfg.section("simulate");
    check_keys(sec, "simulate", {"workers", "items", "rho", "calibrate", "k", "quorum", "mc_items"});
    const int workers = pick(args.workers, sec, "workers", 20);
    const int k = pick(args.k, sec, "k", kDefaultRedundancy);
    const int quorum = pick(args.quorum, sec, "quorum", kDefaultQuorum);
    const int mc_items = pick(args.mc_items, sec, "mc_items", 100'000);
    const std::optional<std::string> rho_text = args.rho ? args.rho : scalar_text(sec, "rho");
    const std::optional<std::string> calibrate_text = args.calibrate ? args.calibrate : scalar_text(sec, "calibrate");
    if (rho_text && calibrate_text) throw Error(ErrorKind::InvalidArgument, "--rho and --calibrate are exclusive");
    if (args.items && args.truth) throw Error(ErrorKind::InvalidArgument, "--items and --truth are exclusive");
    if (workers < 1 || k < 1 || quorum < 1 || quorum > k || mc_items < 1)
      throw Error(ErrorKind::InvalidArgument, "need workers >= 1, items >= 1 and 1 <= quorum <= k");

    std::vector<sim::ItemSpec> items;
    if (args.truth) {
      for (const GroundTruthRecord& r : ingest_dataset(*args.truth)) items.push_back({r.item_id(), r.true_label()});
    } else {
      const auto parts = split(pick(args.items, sec, "items", std::string("617,181,50")), ',');
      if (parts.size() != kNumClasses) throw Error(ErrorKind::InvalidArgument, "--items takes three counts");
      std::array<int, kNumClasses> per_class{};
      for (std::size_t i = 0; i < kNumClasses; ++i) per_class[i] = parse_int(parts[i], "item count");
      items = sim::make_items(per_class);
    }

    const sim::ClassProbabilities alpha = sim::reference_accuracy();
    sim::DifficultyModel difficulty;
    difficulty.seed = mix(global.seed, 0xd1ff);
    if (rho_text) {
      difficulty.rho = parse_triple(*rho_text, "--rho");
    } else if (calibrate_text) {
      sim::CalibrationOptions opt;
      opt.k = k;
      opt.quorum = quorum;
      opt.items = mc_items;
      opt.seed = global.seed;
      const auto targets = parse_triple(*calibrate_text, "--calibrate");
      const auto cal = sim::calibrate_correlation(targets, alpha, opt);
      io.out << "calibration (k=" << k << ", quorum=" << quorum << ", " << mc_items << " items per evaluation)\n";
      for (CellClass c : kAllClasses) {
        const auto& r = cal[index_of(c)];
        io.out << "  " << to_string(c) << ": target " << fixed(targets[index_of(c)], 4) << "  rho " << fixed(r.rho, 4)
               << "  [" << fixed(r.ci_low, 4) << ", " << fixed(r.ci_high, 4) << "]  achieved " << fixed(r.achieved, 4)
               << " +/- " << fixed(r.standard_error, 4) << '\n';
        difficulty.rho[index_of(c)] = r.rho;
      }
    }

    sim::ExperimentConfig ec;
    ec.k = k;
    ec.seed = global.seed;
    ec.difficulty = difficulty;
    ec.items = std::move(items);
    for (int w = 0; w < workers; ++w) {
      char id[32];
      std::snprintf(id, sizeof id, "worker-%03d", w + 1);
      ec.workers.push_back(sim::reference_worker(id, mix(global.seed, static_cast<std::uint64_t>(w))));
    }
    const std::vector<Vote> votes = sim::run_experiment(ec);

    const fs::path dir = out_dir(global, "sim");
    fs::create_directories(dir);
    {
      std::ofstream out(dir / "votes.csv");
      write_votes(out, votes);
      if (!out) throw Error(ErrorKind::IoError, "cannot write votes.csv");
    }
    std::vector<GroundTruthRecord> truth;
    for (const auto& item : ec.items) truth.emplace_back(item.item_id, item.truth, "sim", item.item_id + ".png");
    {
      std::ofstream out(dir / "truth.csv");
      write_truth_manifest(out, truth);
      if (!out) throw Error(ErrorKind::IoError, "cannot write truth.csv");
    }

    RunManifest manifest("simulate");
    manifest.set_config(cfg.text);
    manifest.set_seed(global.seed);
    if (args.truth) manifest.add_input(*args.truth);
    manifest.set_parameter("workers", workers);
    manifest.set_parameter("k", k);
    manifest.set_parameter("quorum", quorum);
    manifest.set_parameter("rho", difficulty.rho);
    manifest.add_output(dir / "votes.csv");
    manifest.add_output(dir / "truth.csv");
    manifest.append_to(dir);

    const auto agg = report::aggregate_votes(votes, k, quorum);
    const auto matrix = metrics::build_consensus_matrix(agg.results, index_truth(truth));
    const auto acc = metrics::per_class_accuracy(matrix, metrics::NaPolicy::CountAsError);
    io.out << "items " << ec.items.size() << ", votes " << votes.size() << ", workers " << workers << '\n';
    io.out << "consensus accuracy (no consensus counts as error)\n";
    for (CellClass c : kAllClasses) {
      const auto& a = acc[index_of(c)];
      io.out << "  " << to_string(c) << ": " << (a ? percent(*a) : std::string("-")) << "  independent "
             << percent(estimate_consensus_accuracy(alpha[index_of(c)], k, quorum)) << "  rho "
             << fixed(difficulty.rho[index_of(c)], 4) << '\n';
    }
    return kOk;
  });
}

int cmd_aggregate(const AggregateArgs& args, const GlobalOptions& global, Io io) {
  return guarded(io, [&] {
    if (!fs::exists(args.votes)) throw Error(ErrorKind::MissingFile, "no such file '" + args.votes.string() + "'");
    const std::vector<Vote> votes = read_votes_file(args.votes.string());
    const report::Aggregation agg = report::aggregate_votes(votes, args.k, args.quorum);
    for (const std::string& w : agg.warnings) io.err << "warning: " << w << '\n';
    io.out << "votes " << agg.vote_count << '\n';
    io.out << "items " << agg.results.size() + static_cast<std::size_t>(agg.histogram.incomplete) << '\n';
    report::print_histogram(io.out, agg.histogram);
    if (global.out) {
      fs::create_directories(*global.out);
      std::ostringstream csv;
      write_consensus(csv, agg.results);
      write_file(*global.out / "consensus.csv", csv.str());
      RunManifest manifest("aggregate");
      manifest.set_seed(global.seed);
      manifest.add_input(args.votes);
      manifest.set_parameter("k", args.k);
      manifest.set_parameter("quorum", args.quorum);
      manifest.add_output(*global.out / "consensus.csv");
      manifest.append_to(*global.out);
    }
    return kOk;
  });
}

int cmd_report(const ReportArgs& args, const GlobalOptions& global, Io io) {
  return guarded(io, [&] {
    if (args.format != "text" && args.format != "csv" && args.format != "json")
      throw Error(ErrorKind::InvalidArgument, "--format must be text, csv or json");
    if (args.na != "exclude" && args.na != "error") throw Error(ErrorKind::InvalidArgument, "--na must be exclude or error");
    for (const fs::path& p : {args.votes, args.truth})
      if (!fs::exists(p)) throw Error(ErrorKind::MissingFile, "no such file '" + p.string() + "'");
    const std::vector<Vote> votes = read_votes_file(args.votes.string());
    const std::vector<GroundTruthRecord> truth = ingest_dataset(args.truth);
    const auto policy = args.na == "error" ? metrics::NaPolicy::CountAsError : metrics::NaPolicy::Exclude;
    const report::CorpusReport rep = report::build_report(votes, index_truth(truth), args.k, args.quorum, policy);
    for (const std::string& w : rep.aggregation.warnings) io.err << "warning: " << w << '\n';

    std::ostringstream body;
    if (args.format == "text")
      report::render_text(body, rep);
    else if (args.format == "csv")
      report::render_csv(body, rep);
    else
      report::render_jsonl(body, rep);
    io.out << body.str();

    if (global.out) {
      fs::create_directories(*global.out);
      const fs::path file = *global.out / ("report." + std::string(args.format == "json" ? "jsonl" : args.format));
      write_file(file, body.str());
      RunManifest manifest("report");
      manifest.set_seed(global.seed);
      manifest.add_input(args.votes);
      manifest.add_input(args.truth);
      manifest.set_parameter("format", args.format);
      manifest.set_parameter("na", args.na);
      manifest.add_output(file);
      manifest.append_to(*global.out);
    }
    return kOk;
  });
}

int cmd_estimate(const EstimateArgs& args, const GlobalOptions& global, Io io) {
  return guarded(io, [&] {
    if (args.alphas.empty()) throw Error(ErrorKind::InvalidArgument, "give at least one alpha");
    std::vector<double> alphas;
    for (const std::string& a : args.alphas) alphas.push_back(parse_probability(a));
    std::ostringstream table;
    table << "alpha,k,quorum,estimate\n";
    io.out << "alpha       k  quorum  estimate\n";
    for (const double alpha : alphas) {
      const double p = estimate_consensus_accuracy(alpha, args.k, args.quorum);
      char line[96];
      std::snprintf(line, sizeof line, "%-10.6f %2d  %6d  %8s\n", alpha, args.k, args.quorum, percent(p).c_str());
      io.out << line;
      table << fixed(alpha, 6) << ',' << args.k << ',' << args.quorum << ',' << fixed(p, 6) << '\n';
    }
    if (global.out) {
      fs::create_directories(*global.out);
      write_file(*global.out / "estimate.csv", table.str());
      RunManifest manifest("estimate");
      manifest.set_seed(global.seed);
      manifest.set_parameter("alphas", args.alphas);
      manifest.set_parameter("k", args.k);
      manifest.set_parameter("quorum", args.quorum);
      manifest.add_output(*global.out / "estimate.csv");
      manifest.append_to(*global.out);
    }
    return kOk;
  });
}

}  // namespace cellvote::cli
