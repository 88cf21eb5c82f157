#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "brachy/config.hpp"
#include "brachy/controller.hpp"

namespace brachy {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 7430;             // 0 binds any free port
  double speedup = 1.0;        // simulated seconds per wall second; <= 0 runs unpaced
  double telemetry_hz = 50.0;  // wall-clock stream rate
  std::size_t stream_queue = 64;  // frames buffered per telemetry client before dropping
};

// HTTP front end for one Controller. A single simulation thread owns the
// controller; HTTP handlers enqueue commands and queries which the sim
// thread applies between ticks in arrival order.
//
//   GET  /state        latest frame + legal commands + needle statuses
//   POST /command      {"id", "cmd", "args"} -> {"id", "ok", "code", "reason"}
//   GET  /telemetry    NDJSON stream, one line per frame
//   GET  /plan         loaded plan (canonical JSON)
//   GET  /log          events since ?since=seq, or the full log with ?format=ndjson
//   POST /access       {"target": [x,y,z], "min_clearance"?} -> planned access
//   GET  /transitions  legal-transition table
//   GET  /config       effective config
class ControlService {
 public:
  explicit ControlService(Config base = {}, ServiceOptions options = {});
  ~ControlService();

  ControlService(const ControlService&) = delete;
  ControlService& operator=(const ControlService&) = delete;

  // Binds and starts the simulation and HTTP threads; returns the bound
  // port. Throws std::runtime_error when the port cannot be bound.
  int start();
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();
  int port() const noexcept;

  // In-process equivalents of the endpoints, going through the same queue.
  CommandResult submit(Command cmd);
  nlohmann::json state() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace brachy
