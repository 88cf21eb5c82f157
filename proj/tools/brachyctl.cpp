// brachyctl: command-line front end for the brachytherapy needle-insertion library.

#include <chrono>
#include <cmath>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "brachy/controller.hpp"
#include "brachy/errors.hpp"
#include "brachy/kinematics.hpp"
#include "brachy/plan_io.hpp"
#include "brachy/run.hpp"
#include "brachy/service.hpp"
#include "brachy/workspace.hpp"

using namespace brachy;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

json joints_json(const JointState& j) {
  return json{{"xf", j.xf},       {"yf", j.yf},       {"xr", j.xr},       {"yr", j.yr},
              {"z_pre", j.z_pre}, {"d_ins", j.d_ins}, {"theta", j.theta}};
}

json pose_json(const NeedlePose& p) {
  return json{{"entry_x", p.entry_x}, {"entry_y", p.entry_y}, {"pitch", p.pitch}, {"yaw", p.yaw}};
}

// "speed=5,rotation=continuous,omega=10" -> profile JSON
json parse_profile_flags(const std::string& spec) {
  json profile = json::object();
  json rotation = json::object();
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParseError("--profile", "expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    auto number = [&]() {
      try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
      } catch (const std::exception&) {
        throw ParseError("--profile/" + key, "expected a number, got '" + value + "'");
      }
    };
    if (key == "speed") {
      profile["speed"] = number();
    } else if (key == "rotation" || key == "mode") {
      rotation["mode"] = value;
    } else if (key == "omega" || key == "step" || key == "interval") {
      rotation[key] = number();
    } else {
      throw ParseError("--profile/" + key, "unknown profile key");
    }
  }
  if (!rotation.empty()) {
    if (!rotation.contains("mode")) rotation["mode"] = rotation.contains("omega") ? "continuous" : "indexed";
    profile["rotation"] = rotation;
  }
  return profile;
}

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"brachyctl: kinematics, planning, simulation and service for the needle-insertion robot"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "Config file (JSON with geometry/tissue/safety/controller sections)");

  auto base_config = [&]() { return config_path.empty() ? Config{} : load_config_file(config_path); };

  // ik
  auto* ik = app.add_subcommand("ik", "Joint positions for a needle pose");
  std::vector<double> ik_entry{0.0, 0.0};
  double ik_pitch = 0.0, ik_yaw = 0.0;
  ik->add_option("--entry", ik_entry, "Entry point x y on the template plane (mm)")->expected(2);
  ik->add_option("--pitch", ik_pitch, "Pitch (deg)");
  ik->add_option("--yaw", ik_yaw, "Yaw (deg)");

  // fk
  auto* fk = app.add_subcommand("fk", "Needle pose for joint positions");
  JointState fk_joints;
  fk->add_option("--xf", fk_joints.xf)->required();
  fk->add_option("--yf", fk_joints.yf)->required();
  fk->add_option("--xr", fk_joints.xr)->required();
  fk->add_option("--yr", fk_joints.yr)->required();
  fk->add_option("--z-pre", fk_joints.z_pre);
  fk->add_option("--d-ins", fk_joints.d_ins);

  // workspace
  auto* ws = app.add_subcommand("workspace", "Reachability grid (max feasible inclination per entry point)");
  double ws_step = 2.5;
  std::optional<double> ws_half;
  std::string ws_format = "text";
  ws->add_option("--step", ws_step, "Sample spacing (mm)")->check(CLI::PositiveNumber);
  ws->add_option("--half-extent", ws_half, "Half width of the sampled square (mm)");
  ws->add_option("--format", ws_format)->check(CLI::IsMember({"text", "json"}));

  // access
  auto* acc = app.add_subcommand("access", "Minimal-inclination access path around the plan's arch");
  std::vector<double> acc_target;
  std::string acc_plan;
  std::optional<double> acc_clearance;
  acc->add_option("--target", acc_target, "Target x y z (mm)")->expected(3)->required();
  acc->add_option("--plan", acc_plan, "Plan supplying the arch obstacle");
  acc->add_option("--min-clearance", acc_clearance);

  // plan
  auto* plan = app.add_subcommand("plan", "Plan file utilities");
  plan->require_subcommand(1);
  auto* validate = plan->add_subcommand("validate", "Parse and validate a plan");
  std::string plan_file;
  validate->add_option("file", plan_file)->required();
  auto* fmt = plan->add_subcommand("fmt", "Print the canonical form of a plan");
  std::string fmt_out;
  fmt->add_option("file", plan_file)->required();
  fmt->add_option("-o,--output", fmt_out, "Write to a file instead of stdout");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Headless run of a plan through the standard workflow");
  std::string sim_profile, sim_log;
  std::optional<double> sim_threshold;
  sim->add_option("file", plan_file)->required();
  sim->add_option("--profile", sim_profile, "Override every needle's profile, e.g. speed=1,rotation=continuous,omega=10");
  sim->add_option("--log", sim_log, "Write the event log here");
  sim->add_option("--threshold", sim_threshold, "Release threshold (N)");

  // replay
  auto* rep = app.add_subcommand("replay", "Re-execute an event log and check its digest");
  std::string rep_file;
  rep->add_option("log", rep_file)->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the control service");
  ServiceOptions sopt;
  serve->add_option("--port", sopt.port, "TCP port (0 picks a free one)");
  serve->add_option("--host", sopt.host);
  serve->add_option("--speedup", sopt.speedup, "Simulated seconds per wall second (<= 0: unpaced)");

  // transitions
  auto* tr = app.add_subcommand("transitions", "Print the legal-transition table");

  // precision
  auto* prec = app.add_subcommand("precision", "Monte-Carlo tip placement precision");
  std::size_t prec_samples = 10000;
  std::uint64_t prec_seed = 1;
  prec->add_option("--samples", prec_samples);
  prec->add_option("--seed", prec_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "UsageError"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }

  try {
    if (*ik) {
      const Config cfg = base_config();
      const NeedlePose pose{ik_entry[0], ik_entry[1], ik_pitch, ik_yaw};
      const JointState j = ik_position(pose, cfg.geometry);
      std::cout << json{{"joints", joints_json(j)}, {"inclination", inclination(ik_pitch, ik_yaw)}}.dump(2) << "\n";
    } else if (*fk) {
      const Config cfg = base_config();
      const NeedlePose pose = fk_position(fk_joints, cfg.geometry);
      const Vec3 tip = tip_point(pose, fk_joints, cfg.geometry);
      std::cout << json{{"pose", pose_json(pose)},
                        {"inclination", inclination(pose.pitch, pose.yaw)},
                        {"tip", {tip.x(), tip.y(), tip.z()}}}
                       .dump(2)
                << "\n";
    } else if (*ws) {
      const Config cfg = base_config();
      const ReachabilityMap m = reachability_map(cfg.geometry, ws_step, ws_half);
      if (ws_format == "text") {
        std::cout << m.to_text();
      } else {
        json cells = json::array();
        for (std::size_t r = 0; r < m.ys.size(); ++r) {
          json row = json::array();
          for (std::size_t c = 0; c < m.xs.size(); ++c) row.push_back(m.at(c, r) ? json(*m.at(c, r)) : json(nullptr));
          cells.push_back(std::move(row));
        }
        std::cout << json{{"xs", m.xs}, {"ys", m.ys}, {"max_inclination", cells}}.dump() << "\n";
      }
    } else if (*acc) {
      Config cfg = base_config();
      Obstacles obstacles;
      if (!acc_plan.empty()) {
        const Plan p = load_plan_file(acc_plan, cfg);
        cfg = effective_config(cfg, p);
        obstacles = p.obstacles;
      }
      const AccessSolution s = plan_access(Vec3(acc_target[0], acc_target[1], acc_target[2]), obstacles.arch,
                                           cfg.geometry, acc_clearance.value_or(obstacles.min_clearance));
      std::cout << json{{"pose", pose_json(s.pose)},
                        {"inclination", s.inclination},
                        {"clearance", std::isfinite(s.clearance) ? json(s.clearance) : json(nullptr)},
                        {"length", s.length}}
                       .dump(2)
                << "\n";
    } else if (*validate) {
      const Config base = base_config();
      const Plan p = load_plan_file(plan_file, base);
      const Config cfg = effective_config(base, p);
      json needles = json::array();
      for (const auto& n : p.needles) {
        const ResolvedNeedle r = resolve_needle(n, p, cfg.geometry);
        needles.push_back(json{{"id", r.id},
                               {"pose", pose_json(r.pose)},
                               {"d_ins", r.d_ins},
                               {"inclination", r.inclination},
                               {"target", {r.target.x(), r.target.y(), r.target.z()}}});
      }
      std::cout << json{{"ok", true}, {"needles", needles}}.dump(2) << "\n";
    } else if (*fmt) {
      const std::string text = serialize_plan(load_plan_file(plan_file, base_config()));
      if (fmt_out.empty()) {
        std::cout << text;
      } else {
        write_file(fmt_out, text);
      }
    } else if (*sim) {
      const Config base = base_config();
      const Plan p = load_plan_file(plan_file, base);
      RunOptions opt;
      if (!sim_profile.empty()) opt.profile = profile_from_json(parse_profile_flags(sim_profile), "--profile");
      opt.threshold = sim_threshold;
      const RunResult r = run_plan(p, base, opt);
      if (!sim_log.empty()) write_file(sim_log, r.log_text());
      json needles = json::array();
      for (const auto& n : r.needles) {
        needles.push_back(json{{"id", n.id},
                               {"peak_force", n.peak_force},
                               {"mean_force", n.mean_force},
                               {"seed_offsets", n.seed_offsets}});
      }
      std::cout << json{{"digest", r.digest},
                        {"ticks", r.final_frame.tick},
                        {"sim_time", r.final_frame.sim_time},
                        {"events", r.log.events.size()},
                        {"needles", needles}}
                       .dump(2)
                << "\n";
    } else if (*rep) {
      const ReplayResult r = replay(read_file(rep_file));
      std::cout << json{{"digest", r.digest}, {"ticks", r.ticks}, {"events", r.events}}.dump() << "\n";
    } else if (*serve) {
      ControlService service(base_config(), sopt);
      const int port = service.start();
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << sopt.host << ":" << port << "\n";
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      service.stop();
    } else if (*tr) {
      std::cout << transition_table_json().dump(2) << "\n";
    } else if (*prec) {
      const Config cfg = base_config();
      const PrecisionStudy s = monte_carlo_precision(cfg.geometry, prec_samples, prec_seed);
      std::cout << json{{"samples", s.samples}, {"max_error", s.max_error}, {"mean_error", s.mean_error},
                        {"rms_error", s.rms_error}}
                       .dump(2)
                << "\n";
    }
  } catch (const Error& e) {
    std::cerr << json{{"error", e.code()}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "InvalidArgument"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
