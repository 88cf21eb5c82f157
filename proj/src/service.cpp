#include "brachy/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include <httplib.h>

#include "brachy/errors.hpp"
#include "brachy/plan_io.hpp"
#include "brachy/workspace.hpp"

namespace brachy {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr auto kReplyTimeout = std::chrono::seconds(10);

struct Subscriber {
  std::mutex m;
  std::condition_variable cv;
  std::deque<std::string> lines;
  std::uint64_t counter = 0;
  std::uint64_t dropped = 0;
  std::uint64_t delivered = 0;
  std::uint64_t limit = 0;  // 0 = unbounded
  bool closed = false;
};

struct Snapshot {
  TelemetryFrame frame;
  std::map<std::string, NeedleStatus> needles;
};

json snapshot_json(const Snapshot& s) {
  json j = s.frame.to_json();
  json legal = json::array();
  for (CommandKind c : kAllCommands) {
    if (is_legal(s.frame.phase, c)) legal.push_back(to_string(c));
  }
  j["legal"] = std::move(legal);
  json needles = json::object();
  for (const auto& [id, st] : s.needles) needles[id] = st == NeedleStatus::Done ? "DONE" : "PENDING";
  j["needles"] = std::move(needles);
  return j;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, json{{"error", code}, {"message", message}}, status);
}

}  // namespace

struct ControlService::Impl {
  Config base;
  ServiceOptions opt;
  Controller controller;

  httplib::Server server;
  std::thread sim_thread;
  std::thread http_thread;
  std::atomic<bool> running{false};
  int bound_port = -1;

  std::mutex queue_m;
  std::deque<std::function<void(Controller&)>> queue;

  mutable std::mutex snap_m;
  Snapshot snap;

  std::mutex subs_m;
  std::vector<std::shared_ptr<Subscriber>> subs;

  std::mutex stop_m;
  std::condition_variable stop_cv;

  Impl(Config b, ServiceOptions o) : base(b), opt(std::move(o)), controller(std::move(b)) {}

  // Runs fn on the sim thread between ticks and waits for its result.
  template <typename Fn>
  auto call(Fn fn) -> decltype(fn(std::declval<Controller&>())) {
    using R = decltype(fn(std::declval<Controller&>()));
    auto done = std::make_shared<std::promise<R>>();
    auto fut = done->get_future();
    {
      std::lock_guard lk(queue_m);
      if (!running) throw std::runtime_error("service is not running");
      queue.emplace_back([done, fn = std::move(fn)](Controller& c) mutable {
        try {
          done->set_value(fn(c));
        } catch (...) {
          done->set_exception(std::current_exception());
        }
      });
    }
    if (fut.wait_for(kReplyTimeout) != std::future_status::ready) throw std::runtime_error("simulation timed out");
    return fut.get();
  }

  void publish_snapshot() {
    std::lock_guard lk(snap_m);
    snap.frame = controller.frame();
    snap.needles = controller.needle_status();
  }

  void broadcast() {
    const json frame = controller.frame().to_json();
    std::lock_guard lk(subs_m);
    for (auto& s : subs) {
      std::lock_guard sl(s->m);
      if (s->closed) continue;
      ++s->counter;
      if (s->lines.size() >= opt.stream_queue) {
        s->lines.pop_front();
        ++s->dropped;
      }
      json line = frame;
      line["counter"] = s->counter;
      line["dropped"] = s->dropped;
      s->lines.push_back(line.dump() + "\n");
      s->cv.notify_one();
    }
  }

  void drain() {
    std::deque<std::function<void(Controller&)>> work;
    {
      std::lock_guard lk(queue_m);
      work.swap(queue);
    }
    for (auto& w : work) w(controller);
  }

  void sim_loop() {
    const double dt = controller.config().controller.tick_dt;
    const auto publish_period =
        std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / opt.telemetry_hz));
    auto next_publish = Clock::now();
    auto epoch = Clock::now();
    std::uint64_t paced_ticks = 0;

    while (running) {
      drain();
      controller.tick();
      publish_snapshot();

      const auto now = Clock::now();
      if (now >= next_publish) {
        broadcast();
        next_publish += publish_period;
        if (now - next_publish > publish_period * 10) next_publish = now + publish_period;
      }

      if (opt.speedup > 0) {
        ++paced_ticks;
        const auto due = epoch + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double>(static_cast<double>(paced_ticks) * dt / opt.speedup));
        if (due > now) {
          std::this_thread::sleep_until(due);
        } else if (now - due > std::chrono::milliseconds(200)) {
          // Too far behind: drop the backlog rather than burst.
          epoch = now;
          paced_ticks = 0;
        }
      }
    }
    drain();
  }

  void close_subscribers() {
    std::lock_guard lk(subs_m);
    for (auto& s : subs) {
      std::lock_guard sl(s->m);
      s->closed = true;
      s->cv.notify_all();
    }
  }

  void routes();
};

void ControlService::Impl::routes() {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Get("/state", [this](const httplib::Request&, httplib::Response& res) {
    std::lock_guard lk(snap_m);
    send_json(res, snapshot_json(snap));
  });

  server.Get("/transitions", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, transition_table_json());
  });

  server.Post("/command", [this](const httplib::Request& req, httplib::Response& res) {
    json id = nullptr;
    Command cmd;
    try {
      json doc;
      try {
        doc = json::parse(req.body);
      } catch (const json::exception& e) {
        throw ParseError("/", e.what());
      }
      if (doc.is_object() && doc.contains("id")) id = doc["id"];
      if (doc.is_object()) {
        for (auto it = doc.begin(); it != doc.end(); ++it) {
          if (it.key() != "id" && it.key() != "cmd" && it.key() != "args") {
            throw ParseError("/" + it.key(), "unknown field");
          }
        }
      }
      cmd = command_from_json(doc);
    } catch (const ParseError& e) {
      send_json(res, json{{"id", id}, {"ok", false}, {"code", "malformed"}, {"reason", e.what()}}, 400);
      return;
    }
    cmd.client = req.remote_addr + ":" + std::to_string(req.remote_port);
    try {
      const CommandResult r = call([cmd](Controller& c) { return c.handle(cmd); });
      json body{{"id", id}, {"ok", r.ok}};
      if (!r.ok) {
        body["code"] = r.code;
        body["reason"] = r.reason;
      }
      send_json(res, body);
    } catch (const std::exception& e) {
      send_json(res, json{{"id", id}, {"ok", false}, {"code", "unavailable"}, {"reason", e.what()}}, 503);
    }
  });

  server.Get("/plan", [this](const httplib::Request&, httplib::Response& res) {
    try {
      const auto plan = call([](Controller& c) { return c.plan(); });
      if (!plan) return send_error(res, 404, "NoPlan", "no plan loaded");
      send_json(res, plan_to_json(*plan));
    } catch (const std::exception& e) {
      send_error(res, 503, "unavailable", e.what());
    }
  });

  server.Get("/config", [this](const httplib::Request&, httplib::Response& res) {
    try {
      send_json(res, call([](Controller& c) { return config_to_json(c.config()); }));
    } catch (const std::exception& e) {
      send_error(res, 503, "unavailable", e.what());
    }
  });

  server.Get("/log", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      if (req.get_param_value("format") == "ndjson") {
        const auto text = call([](Controller& c) { return write_log(c.log_file()); });
        res.set_content(text, "application/x-ndjson");
        return;
      }
      std::uint64_t since = 0;
      if (req.has_param("since")) {
        try {
          since = std::stoull(req.get_param_value("since"));
        } catch (const std::exception&) {
          return send_error(res, 400, "malformed", "since must be a non-negative integer");
        }
      }
      const auto body = call([since](Controller& c) {
        json events = json::array();
        for (const auto& e : c.log().since(since)) events.push_back(e.to_json());
        return json{{"events", std::move(events)}, {"next", c.log().size()}};
      });
      send_json(res, body);
    } catch (const std::exception& e) {
      send_error(res, 503, "unavailable", e.what());
    }
  });

  server.Post("/access", [this](const httplib::Request& req, httplib::Response& res) {
    Vec3 target;
    std::optional<double> min_clearance;
    try {
      const json doc = json::parse(req.body);
      if (!doc.is_object() || !doc.contains("target")) throw std::invalid_argument("expected {\"target\": [x, y, z]}");
      const json& t = doc["target"];
      if (!t.is_array() || t.size() != 3 || !t[0].is_number() || !t[1].is_number() || !t[2].is_number()) {
        throw std::invalid_argument("target must be [x, y, z]");
      }
      target = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
      if (doc.contains("min_clearance")) {
        if (!doc["min_clearance"].is_number()) throw std::invalid_argument("min_clearance must be a number");
        min_clearance = doc["min_clearance"].get<double>();
      }
    } catch (const std::exception& e) {
      return send_error(res, 400, "malformed", e.what());
    }
    try {
      const auto body = call([target, min_clearance](Controller& c) {
        Obstacles obstacles;
        if (c.plan()) obstacles = c.plan()->obstacles;
        try {
          const AccessSolution s =
              plan_access(target, obstacles.arch, c.config().geometry, min_clearance.value_or(obstacles.min_clearance));
          return json{{"ok", true},
                      {"pose",
                       {{"entry_x", s.pose.entry_x},
                        {"entry_y", s.pose.entry_y},
                        {"pitch", s.pose.pitch},
                        {"yaw", s.pose.yaw}}},
                      {"inclination", s.inclination},
                      {"clearance", std::isfinite(s.clearance) ? json(s.clearance) : json(nullptr)},
                      {"length", s.length}};
        } catch (const Error& e) {
          return json{{"ok", false}, {"code", e.code()}, {"reason", e.what()}};
        }
      });
      send_json(res, body);
    } catch (const std::exception& e) {
      send_error(res, 503, "unavailable", e.what());
    }
  });

  server.Get("/telemetry", [this](const httplib::Request& req, httplib::Response& res) {
    auto sub = std::make_shared<Subscriber>();
    if (req.has_param("max_frames")) {
      try {
        sub->limit = std::stoull(req.get_param_value("max_frames"));
      } catch (const std::exception&) {
        return send_error(res, 400, "malformed", "max_frames must be a non-negative integer");
      }
    }
    {
      std::lock_guard lk(subs_m);
      subs.push_back(sub);
    }
    res.set_chunked_content_provider(
        "application/x-ndjson",
        [sub](std::size_t, httplib::DataSink& sink) {
          std::unique_lock lk(sub->m);
          sub->cv.wait_for(lk, std::chrono::milliseconds(100), [&] { return !sub->lines.empty() || sub->closed; });
          while (!sub->lines.empty()) {
            const std::string line = std::move(sub->lines.front());
            sub->lines.pop_front();
            lk.unlock();
            if (!sink.write(line.data(), line.size())) return false;
            lk.lock();
            if (sub->limit && ++sub->delivered >= sub->limit) {
              sub->closed = true;
              break;
            }
          }
          if (sub->closed) sink.done();
          return true;
        },
        [this, sub](bool) {
          std::lock_guard lk(subs_m);
          std::erase(subs, sub);
        });
  });
}

ControlService::ControlService(Config base, ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(base), std::move(options))) {
  if (!(impl_->opt.telemetry_hz > 0)) throw std::invalid_argument("telemetry_hz must be > 0");
  if (impl_->opt.stream_queue == 0) throw std::invalid_argument("stream_queue must be > 0");
  impl_->routes();
}

ControlService::~ControlService() { stop(); }

int ControlService::start() {
  auto& s = *impl_;
  if (s.running) return s.bound_port;
  if (s.opt.port == 0) {
    s.bound_port = s.server.bind_to_any_port(s.opt.host);
  } else if (s.server.bind_to_port(s.opt.host, s.opt.port)) {
    s.bound_port = s.opt.port;
  } else {
    s.bound_port = -1;
  }
  if (s.bound_port <= 0) throw std::runtime_error("cannot bind " + s.opt.host + ":" + std::to_string(s.opt.port));
  s.publish_snapshot();
  s.running = true;
  s.sim_thread = std::thread([&s] { s.sim_loop(); });
  s.http_thread = std::thread([&s] { s.server.listen_after_bind(); });
  s.server.wait_until_ready();
  return s.bound_port;
}

void ControlService::stop() {
  auto& s = *impl_;
  {
    std::lock_guard lk(s.queue_m);
    if (!s.running) return;
    s.running = false;
  }
  s.close_subscribers();
  s.server.stop();
  if (s.http_thread.joinable()) s.http_thread.join();
  if (s.sim_thread.joinable()) s.sim_thread.join();
  std::lock_guard lk(s.stop_m);
  s.stop_cv.notify_all();
}

void ControlService::wait() {
  std::unique_lock lk(impl_->stop_m);
  impl_->stop_cv.wait(lk, [this] { return !impl_->running.load(); });
}

int ControlService::port() const noexcept { return impl_->bound_port; }

CommandResult ControlService::submit(Command cmd) {
  return impl_->call([cmd = std::move(cmd)](Controller& c) { return c.handle(cmd); });
}

json ControlService::state() const {
  std::lock_guard lk(impl_->snap_m);
  return snapshot_json(impl_->snap);
}

}  // namespace brachy
