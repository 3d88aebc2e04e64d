// Command-line front end: rollouts, seed sweeps, gradient checks and the
// teleoperation server.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "safeik/gradient_check.hpp"
#include "safeik/rollout.hpp"
#include "safeik/run_config.hpp"
#include "safeik/teleop/server.hpp"
#include "safeik/teleop/session.hpp"
#include "safeik/text_document.hpp"

namespace {

using namespace safeik;

RobotModel load_model(const RunConfig& cfg) {
  const std::string path = cfg.robot_path.empty() ? std::string(SAFEIK_DATA_DIR "/arm7.robot")
                                                  : cfg.robot_path;
  return load_robot_file(path);
}

std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

int cmd_rollout(const std::string& config_path, const std::string& solver, std::uint64_t seed,
                const std::string& out_dir, bool timing) {
  const RunConfig cfg = load_run_config(config_path);
  const RobotModel model = load_model(cfg);
  const SolverKind kind = *parse_solver_kind(solver);
  const Scenario sc = build_scenario(cfg, seed);
  const RolloutLog log = run_rollout(model, sc, rollout_options(cfg, kind));

  const std::string stem = out_dir + "/" + sc.scene.name + "_" + solver + "_seed" + std::to_string(seed);
  {
    auto out = open_out(stem + "_ticks.csv");
    write_rollout_csv(out, log, timing);
  }
  RunSummary run;
  run.kind = kind;
  run.seed = seed;
  run.panicked = log.panicked;
  run.panic_message = log.panic_message;
  if (!log.ticks.empty()) run.metrics = compute_metrics(log, model, sc.scene, sc.reference);
  {
    auto out = open_out(stem + "_summary.csv");
    write_summary_csv(out, {run});
  }
  Comparison cmp;
  cmp.scene = sc.scene.name;
  cmp.runs = {run};
  ComparisonRow row;
  row.kind = kind;
  const MetricsReport& m = run.metrics;
  row.collisions = mean_sd({double(m.collisions)});
  if (m.min_clearance) row.min_clearance = mean_sd({*m.min_clearance});
  row.violation_time_pct = mean_sd({m.violation_time_pct});
  row.pos_err_mean = mean_sd({m.pos_err_mean});
  row.ori_err_mean = mean_sd({m.ori_err_mean});
  if (m.task_jerk) row.task_jerk = mean_sd({*m.task_jerk});
  if (m.joint_jerk) row.joint_jerk = mean_sd({*m.joint_jerk});
  cmp.rows = {row};
  write_comparison_table(std::cout, cmp);
  std::cout << "ticks " << m.ticks << "/" << log.planned_ticks << ", held " << m.held_steps
            << "\nwrote " << stem << "_ticks.csv and " << stem << "_summary.csv\n";
  if (log.panicked) {
    std::cerr << "solver panic: " << log.panic_message << "\n";
    return 3;
  }
  return 0;
}

int cmd_compare(const std::string& config_path, int seeds, const std::string& out_dir) {
  const RunConfig cfg = load_run_config(config_path);
  const RobotModel model = load_model(cfg);
  const Comparison cmp =
      batch_compare(model, cfg, {SolverKind::N, SolverKind::P, SolverKind::B}, seeds);
  const std::string path = out_dir + "/" + cmp.scene + "_compare.csv";
  {
    auto out = open_out(path);
    write_summary_csv(out, cmp.runs);
  }
  write_comparison_table(std::cout, cmp);
  std::cout << "wrote " << path << "\n";
  int panics = 0;
  for (const RunSummary& r : cmp.runs) {
    if (r.panicked) {
      ++panics;
      std::cerr << "solver panic: " << to_string(r.kind) << " seed " << r.seed << ": "
                << r.panic_message << "\n";
    }
  }
  return panics ? 3 : 0;
}

int cmd_check_gradients(const std::string& robot_path, int instances, std::uint64_t seed) {
  const RobotModel model = load_robot_file(robot_path);
  GradientCheckOptions opt;
  opt.instances = instances;
  opt.seed = seed;
  bool ok = true;
  std::printf("%-16s %8s %9s %14s\n", "term", "checked", "excluded", "max_rel_error");
  for (const GradientCheckResult& r : check_gradients(model, opt)) {
    std::printf("%-16s %8d %9d %14.3e  %s\n", r.term.c_str(), r.checked, r.excluded,
                r.max_rel_error, r.passed ? "ok" : "FAIL");
    ok = ok && r.passed;
  }
  std::printf("tolerance %.0e\n", opt.tolerance);
  return ok ? 0 : 4;
}

struct SessionArgs {
  std::string config = SAFEIK_DATA_DIR "/configs/clutter.cfg";
  std::string solver = "B";
  std::uint64_t seed = 1;
  std::string policy;
  double stale = 0.5;
  bool deterministic = false;
};

teleop::Session make_session(const SessionArgs& a) {
  teleop::SessionConfig sc;
  sc.run = load_run_config(a.config);
  sc.kind = *parse_solver_kind(a.solver);
  sc.seed = a.seed;
  if (!a.policy.empty()) {
    sc.policy = *teleop::parse_reference_policy(a.policy);
  } else if (sc.run.scene == SceneKind::clutter) {
    sc.policy = teleop::ReferencePolicy::nearest_pick;
  }
  sc.stale_after = a.stale;
  sc.deterministic = a.deterministic;
  return teleop::Session(load_model(sc.run), std::move(sc));
}

std::atomic<teleop::Server*> g_server{nullptr};

extern "C" void on_signal(int) {
  if (teleop::Server* s = g_server.load()) s->stop();
}

int cmd_serve(const SessionArgs& a, teleop::ServerOptions opt) {
  teleop::Server server(make_session(a), std::move(opt));
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on ws://" << "127.0.0.1:" << server.port() << std::endl;
  server.run();
  g_server = nullptr;
  std::cout << "stopped after " << server.ticks() << " ticks\n";
  return 0;
}

int cmd_replay(const SessionArgs& a, const std::string& script_path, const std::string& out_path) {
  teleop::Session session = make_session(a);
  const auto frames = teleop::replay(session, teleop::parse_script(read_file(script_path)));
  std::ofstream file;
  if (!out_path.empty()) file = open_out(out_path);
  std::ostream& out = out_path.empty() ? std::cout : file;
  for (const std::string& f : frames) out << f << '\n';
  const auto& last = session.last();
  std::cerr << "ticks " << session.tick_count() << ", episodes " << last.episodes << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety-aware inverse kinematics toolkit"};
  app.require_subcommand(1);

  std::string config, solver = "B", out_dir = "out";
  std::uint64_t seed = 1;
  int seeds = 10;
  bool timing = false;

  auto* rollout = app.add_subcommand("rollout", "run one solver on one seed");
  rollout->add_option("--config", config, "run configuration")->required()->check(CLI::ExistingFile);
  rollout->add_option("--solver", solver, "N, P or B")->check(CLI::IsMember({"N", "P", "B"}));
  rollout->add_option("--seed", seed, "scene seed");
  rollout->add_option("--out", out_dir, "output directory");
  rollout->add_flag("--timing", timing, "add the step_ms column to the per-tick CSV");

  auto* compare = app.add_subcommand("compare", "run N, P and B over a seed range");
  compare->add_option("--config", config, "run configuration")->required()->check(CLI::ExistingFile);
  compare->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
  compare->add_option("--out", out_dir, "output directory");

  std::string robot = SAFEIK_DATA_DIR "/arm7.robot";
  int instances = 100;
  std::uint64_t check_seed = 7;
  auto* grads = app.add_subcommand("check-gradients",
                                   "compare analytic gradients with central differences");
  grads->add_option("--robot", robot, "robot description")->check(CLI::ExistingFile);
  grads->add_option("--instances", instances, "instances per term")->check(CLI::PositiveNumber);
  grads->add_option("--seed", check_seed, "random seed");

  SessionArgs session;
  teleop::ServerOptions server_opt;
  std::string record, log;
  auto add_session_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", session.config, "run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--solver", session.solver, "N, P or B")->check(CLI::IsMember({"N", "P", "B"}));
    cmd->add_option("--seed", session.seed, "scene seed");
    cmd->add_option("--policy", session.policy, "reference policy")
        ->check(CLI::IsMember({"fixed", "waypoints", "nearest_pick"}));
    cmd->add_option("--stale", session.stale, "seconds before operator input counts as stale")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--deterministic", session.deterministic, "report step_ms as 0");
  };
  auto* serve = app.add_subcommand("serve", "run the teleoperation WebSocket server");
  add_session_options(serve);
  serve->add_option("--port", server_opt.port, "TCP port, 0 for any free port");
  serve->add_option("--address", server_opt.address, "listen address");
  serve->add_option("--rate", server_opt.rate_hz, "tick rate in Hz")->check(CLI::PositiveNumber);
  serve->add_option("--record", record, "write applied control messages as a replay script");
  serve->add_option("--log", log, "write every state frame, one per line");

  std::string script, frames_out;
  auto* replay = app.add_subcommand("replay", "run a recorded message script without a network");
  add_session_options(replay);
  replay->add_option("--script", script, "message script")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", frames_out, "frame file (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*rollout) return cmd_rollout(config, solver, seed, out_dir, timing);
    if (*compare) return cmd_compare(config, seeds, out_dir);
    if (*grads) return cmd_check_gradients(robot, instances, check_seed);
    if (*serve) {
      if (!record.empty()) server_opt.record_path = record;
      if (!log.empty()) server_opt.log_path = log;
      return cmd_serve(session, server_opt);
    }
    if (*replay) return cmd_replay(session, script, frames_out);
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
