#pragma once
// HTTP front end for the orchestrator. JSON bodies, ISO-8601 UTC timestamps.
// Mutating endpoints accept an optional `now` (ISO-8601 or epoch seconds) so
// scripted clients can drive the clock; otherwise the system clock is used.

#include <memory>
#include <string>

#include "cellvote/config.hpp"
#include "cellvote/error.hpp"
#include "cellvote/orchestrator.hpp"

namespace cellvote::crowd {

// HTTP status for an error kind (404 unknown ids, 409 state conflicts, ...).
int http_status(ErrorKind kind);

class Service {
 public:
  explicit Service(ServiceConfig config);
  Service(ServiceConfig config, std::shared_ptr<Orchestrator> orchestrator);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Blocks until stop(). Returns false if the socket could not be bound.
  bool listen();
  // Binds to an ephemeral port on host and returns it (-1 on failure);
  // follow with listen_after_bind().
  int bind_any_port();
  bool listen_after_bind();
  void stop();
  bool running() const;

  Orchestrator& orchestrator() { return *orchestrator_; }
  const ServiceConfig& config() const { return config_; }

 private:
  struct Impl;
  ServiceConfig config_;
  std::shared_ptr<Orchestrator> orchestrator_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cellvote::crowd
