#include "cellvote/service.hpp"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cellvote/dataset.hpp"
#include "cellvote/records.hpp"
#include "cellvote/report.hpp"

namespace cellvote::crowd {

using nlohmann::json;

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownTask:
    case ErrorKind::UnknownAssignment:
    case ErrorKind::UnknownWorker:
    case ErrorKind::UnknownBatch:
    case ErrorKind::UnknownItem:
    case ErrorKind::NoneAvailable:
      return 404;
    case ErrorKind::NotQualified:
      return 403;
    case ErrorKind::WrongState:
    case ErrorKind::DeadlineExceeded:
    case ErrorKind::DuplicateItem:
    case ErrorKind::DuplicateWorker:
      return 409;
    case ErrorKind::IoError:
    case ErrorKind::MissingFile:
      return 500;
    default:
      return 400;
  }
}

namespace {

const std::set<std::string> kTimeKeys = {"claimed_at", "deadline",  "submitted_at", "resolved_at",
                                         "created_at", "expires_at", "at"};

// Epoch seconds in known timestamp fields become ISO-8601 strings.
json with_iso_times(json j) {
  if (j.is_object()) {
    for (auto& [key, value] : j.items()) {
      if (kTimeKeys.count(key) && value.is_number_integer())
        value = format_iso8601(value.get<Seconds>());
      else
        value = with_iso_times(std::move(value));
    }
  } else if (j.is_array()) {
    for (auto& v : j) v = with_iso_times(std::move(v));
  }
  return j;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(with_iso_times(body).dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", kind}, {"message", message}}.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorKind::ParseError, "request body must be a JSON object");
  return j;
}

Seconds time_arg(const json& value) {
  if (value.is_number_integer()) return value.get<Seconds>();
  if (value.is_string()) return parse_iso8601(value.get<std::string>());
  throw Error(ErrorKind::ParseError, "timestamp must be ISO-8601 text or epoch seconds");
}

// `now` from the query string, then the body, then the clock.
Seconds request_now(const httplib::Request& req, const json& body) {
  if (req.has_param("now")) return parse_iso8601(req.get_param_value("now"));
  if (body.contains("now")) return time_arg(body.at("now"));
  return system_now();
}

template <class T>
T field(const json& body, const char* key, T fallback) {
  if (!body.contains(key)) return fallback;
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::ParseError, std::string("bad value for '") + key + "'");
  }
}

}  // namespace

struct Service::Impl {
  httplib::Server server;
  std::thread sweeper;
  std::mutex mutex;
  std::condition_variable wake;
  bool stopping = false;
};

Service::Service(ServiceConfig config)
    : Service(config, config.journal_dir.empty()
                          ? std::make_shared<Orchestrator>(config.orchestrator)
                          : std::shared_ptr<Orchestrator>(
                                Orchestrator::open(config.orchestrator, config.journal_dir, config.snapshot_every))) {}

Service::Service(ServiceConfig config, std::shared_ptr<Orchestrator> orchestrator)
    : config_(std::move(config)), orchestrator_(std::move(orchestrator)), impl_(std::make_unique<Impl>()) {
  httplib::Server& s = impl_->server;
  Orchestrator& o = *orchestrator_;

  // Every handler runs inside this wrapper so domain errors map to statuses.
  const auto guarded = [](auto handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const Error& e) {
        send_error(res, http_status(e.kind()), to_string(e.kind()), e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, "ParseError", e.what());
      }
    };
  };

  s.Get("/health", guarded([&o](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"status", "ok"}, {"sequence", o.read([](const State& st) { return st.sequence; })}});
  }));

  s.Post("/workers", guarded([&o](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    WorkerRegistration r;
    r.worker_id = field<std::string>(body, "worker_id", "");
    r.is_master = field<bool>(body, "is_master", false);
    if (body.contains("approval_rate")) r.approval_rate = field<double>(body, "approval_rate", 1.0);
    r.prior_approved = field<int>(body, "prior_approved", 0);
    r.prior_reviewed = field<int>(body, "prior_reviewed", 0);
    send_json(res, to_json(o.register_worker(r, request_now(req, body))), 201);
  }));

  s.Get(R"(/workers/([^/]+))", guarded([&o](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    json j = to_json(o.worker(id));
    const Micros pending = o.pending_earnings(id);
    j["pending_micros"] = pending;
    j["pending_usd"] = format_dollars(pending);
    j["balance_usd"] = format_dollars(j["balance_micros"].get<Micros>());
    send_json(res, j);
  }));

  s.Post("/batches", guarded([&o](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    BatchSpec spec;
    spec.batch_id = field<std::string>(body, "batch_id", "");
    for (const json& item : body.value("items", json::array())) {
      if (item.is_string()) {
        spec.items.push_back(item.get<std::string>());
        continue;
      }
      spec.items.push_back(item.at("item_id").get<std::string>());
      if (item.contains("label"))
        spec.truth.emplace(spec.items.back(), parse_cell_class(item.at("label").get<std::string>()));
    }
    spec.pairing = parse_pairing(field<std::string>(body, "pairing", "sequential"));
    spec.seed = field<std::uint64_t>(body, "seed", 0);
    if (body.contains("k")) spec.k = field<int>(body, "k", 0);
    if (body.contains("reward_usd")) spec.reward = dollars_to_micros(field<double>(body, "reward_usd", 0.0));
    if (body.contains("lifetime_seconds")) spec.lifetime = field<Seconds>(body, "lifetime_seconds", 0);
    const Batch b = o.create_batch(spec, request_now(req, body));
    send_json(res, {{"batch_id", b.batch_id}, {"task_ids", b.task_ids}, {"created_at", b.created_at}}, 201);
  }));

  s.Get("/assignments/next", guarded([&o](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("worker_id")) throw Error(ErrorKind::InvalidArgument, "worker_id is required");
    const Assignment a = o.claim_next(req.get_param_value("worker_id"), request_now(req, json::object()));
    json j = to_json(a);
    const Task t = o.task_status(a.task_id);
    json items = json::array();
    for (const auto& item : t.items) items.push_back({{"item_id", item}, {"image_url", "/images/" + item + ".png"}});
    j["items"] = std::move(items);
    j["reward_usd"] = format_dollars(t.reward);
    send_json(res, j);
  }));

  s.Post(R"(/assignments/([^/]+)/submit)", guarded([&o](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    std::vector<CellClass> answers;
    for (const json& label : body.value("answers", json::array())) {
      if (!label.is_string()) throw Error(ErrorKind::InvalidLabel, "answers must be label strings");
      answers.push_back(parse_cell_class(label.get<std::string>()));
    }
    const SubmitReceipt r = o.submit_answers(req.matches[1], answers, request_now(req, body),
                                             field<std::string>(body, "idempotency_key", ""));
    send_json(res, {{"assignment_id", r.assignment_id},
                    {"task_id", r.task_id},
                    {"votes_recorded", r.votes_recorded},
                    {"task_complete", r.task_complete},
                    {"submitted_at", r.submitted_at}});
  }));

  s.Post(R"(/assignments/([^/]+)/(approve|reject))",
         guarded([&o](const httplib::Request& req, httplib::Response& res) {
           const json body = parse_body(req);
           const Seconds now = request_now(req, body);
           const Assignment a = req.matches[2] == "approve" ? o.approve(req.matches[1], now)
                                                             : o.reject(req.matches[1], now);
           send_json(res, to_json(a));
         }));

  s.Post("/admin/sweep", guarded([&o](const httplib::Request& req, httplib::Response& res) {
    const SweepReport r = o.sweep(request_now(req, parse_body(req)));
    send_json(res, {{"expired_assignments", r.expired_assignments},
                    {"expired_tasks", r.expired_tasks},
                    {"approved_assignments", r.approved_assignments}});
  }));

  s.Get("/admin/state", guarded([&o](const httplib::Request&, httplib::Response& res) {
    send_json(res, o.snapshot());
  }));

  s.Get(R"(/tasks/([^/]+))", guarded([&o](const httplib::Request& req, httplib::Response& res) {
    const Task t = o.task_status(req.matches[1]);
    json j = to_json(t);
    std::size_t votes = 0;
    for (const auto& per_item : t.votes) votes += per_item.size();
    j["vote_count"] = votes;
    send_json(res, j);
  }));

  s.Get(R"(/batches/([^/]+)/votes\.csv)", guarded([&o](const httplib::Request& req, httplib::Response& res) {
    std::ostringstream out;
    write_votes(out, o.export_votes(req.matches[1]));
    res.set_content(out.str(), "text/csv");
  }));

  s.Get(R"(/batches/([^/]+)/report)", guarded([&o](const httplib::Request& req, httplib::Response& res) {
    const Batch b = o.batch(req.matches[1]);
    const std::vector<Vote> votes = o.export_votes(b.batch_id);
    const int k = b.task_ids.empty() ? o.config().k : o.task_status(b.task_ids.front()).k;
    const int quorum = b.task_ids.empty() ? o.config().quorum : o.task_status(b.task_ids.front()).quorum;
    const std::string format = req.has_param("format") ? req.get_param_value("format") : "text";
    std::ostringstream out;
    if (b.truth.empty()) {
      // Without expert labels only the agreement histogram is available.
      const report::Aggregation agg = report::aggregate_votes(votes, k, quorum);
      if (format == "json") {
        json hist = json::object();
        for (const auto& [bucket, n] : agg.histogram.summary()) hist[bucket] = n;
        send_json(res, {{"histogram", hist}, {"incomplete", agg.histogram.incomplete}, {"votes", agg.vote_count}});
        return;
      }
      report::print_histogram(out, agg.histogram);
      res.set_content(out.str(), "text/plain");
      return;
    }
    TruthIndex truth(b.truth.begin(), b.truth.end());
    const report::CorpusReport r = report::build_report(votes, truth, k, quorum);
    if (format == "csv") {
      report::render_csv(out, r);
      res.set_content(out.str(), "text/csv");
    } else if (format == "json") {
      report::render_jsonl(out, r);
      res.set_content(out.str(), "application/x-ndjson");
    } else {
      report::render_text(out, r);
      res.set_content(out.str(), "text/plain");
    }
  }));

  if (!config_.image_dir.empty() && !s.set_mount_point("/images", config_.image_dir))
    throw Error(ErrorKind::MissingFile, "image directory '" + config_.image_dir + "' does not exist");
}

Service::~Service() { stop(); }

namespace {

void run_sweeper(Orchestrator& o, int interval, std::mutex& m, std::condition_variable& cv, bool& stopping) {
  std::unique_lock lock(m);
  while (!cv.wait_for(lock, std::chrono::seconds(interval), [&] { return stopping; })) {
    lock.unlock();
    o.sweep(system_now());
    lock.lock();
  }
}

}  // namespace

bool Service::listen() {
  if (!impl_->server.bind_to_port(config_.host, config_.port)) return false;
  return listen_after_bind();
}

int Service::bind_any_port() { return impl_->server.bind_to_any_port(config_.host); }

bool Service::listen_after_bind() {
  {
    std::lock_guard lock(impl_->mutex);
    impl_->stopping = false;
  }
  if (config_.sweep_interval > 0 && !impl_->sweeper.joinable())
    impl_->sweeper = std::thread(run_sweeper, std::ref(*orchestrator_), config_.sweep_interval,
                                 std::ref(impl_->mutex), std::ref(impl_->wake), std::ref(impl_->stopping));
  return impl_->server.listen_after_bind();
}

void Service::stop() {
  {
    std::lock_guard lock(impl_->mutex);
    impl_->stopping = true;
  }
  impl_->wake.notify_all();
  impl_->server.stop();
  if (impl_->sweeper.joinable()) impl_->sweeper.join();
}

bool Service::running() const { return impl_->server.is_running(); }

}  // namespace cellvote::crowd
