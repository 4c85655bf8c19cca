// Command-line driver tying the pipeline together: training runs, paired
// policy-vs-planner episodes, planner throughput benchmarking, plot export,
// and log validation. Every subcommand is deterministic given --seed; the
// only wall-clock values ever written are the timing fields of the bench
// report.
#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "dreamplan/error.hpp"
#include "dreamplan/eval/paired.hpp"
#include "dreamplan/io/bundle_io.hpp"
#include "dreamplan/io/episode_log.hpp"
#include "dreamplan/io/svg.hpp"
#include "dreamplan/io/validate.hpp"
#include "dreamplan/train/trainer.hpp"

namespace {

using namespace dreamplan;
namespace fs = std::filesystem;
using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  return json::parse(f);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << j.dump(2) << "\n";
}

// Partial planner configs are merged over the defaults so callers only
// spell the keys they change.
mpc::PlannerConfig load_planner_config(const std::string& path) {
  json merged = json(mpc::PlannerConfig{});
  const json user = load_json(path);
  for (const auto& [key, value] : user.items()) {
    if (!merged.contains(key)) {
      throw ValueError("unknown planner config key: " + key);
    }
    merged[key] = value;
  }
  mpc::PlannerConfig config = merged.get<mpc::PlannerConfig>();
  config.validate();
  return config;
}

bool joint_exceeded(const env::EnvConfig& cfg, const env::EnvState& st) {
  for (int i = 0; i < cfg.joint_count; ++i) {
    if (std::abs(st.q(i) - cfg.q_nominal(i)) > cfg.q_soft_limit(i)) {
      return true;
    }
  }
  return false;
}

std::vector<double> joint_deviation(const env::EnvConfig& cfg,
                                    const env::EnvState& st) {
  std::vector<double> out(static_cast<std::size_t>(cfg.joint_count));
  for (int i = 0; i < cfg.joint_count; ++i) {
    out[static_cast<std::size_t>(i)] = st.q(i) - cfg.q_nominal(i);
  }
  return out;
}

std::uint64_t fnv64(std::uint64_t h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_doubles(std::uint64_t h, const double* p, std::size_t n) {
  return fnv64(h, p, n * sizeof(double));
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// train

struct TrainCli {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  std::string variant;
  int horizon = -1;
  int history = -1;
  int latent_dim = -1;
  int envs = -1;
  int iters = -1;
  std::vector<int> hidden;
  std::string activation;
  std::string noise;
  int joints = -1;
  int checkpoint_every = -1;
};

int cmd_train(const TrainCli& cli) {
  train::TrainerConfig config;
  if (!cli.config_path.empty()) {
    train::apply_trainer_config_json(load_json(cli.config_path), config);
  }
  if (!cli.variant.empty()) {
    config.use_internal_model = cli.variant != "none";
    if (config.use_internal_model) {
      config.variant = wm::variant_from_name(cli.variant);
    }
  }
  if (cli.joints >= 0) config.env = env::EnvConfig::make_default(cli.joints);
  if (cli.horizon >= 0) config.horizon = cli.horizon;
  if (cli.history >= 0) config.history = cli.history;
  if (cli.latent_dim >= 0) config.latent_dim = cli.latent_dim;
  if (cli.envs >= 0) config.env_count = cli.envs;
  if (cli.iters >= 0) config.iterations = cli.iters;
  if (!cli.hidden.empty()) config.hidden = cli.hidden;
  if (!cli.activation.empty()) {
    config.activation = net::activation_from_name(cli.activation);
  }
  if (!cli.noise.empty()) {
    config.env.noise_level = env::noise_level_from_name(cli.noise);
  }
  if (cli.checkpoint_every >= 0) config.checkpoint_every = cli.checkpoint_every;
  config.seed = cli.seed;
  config.out_dir = cli.out;
  config.validate();

  const train::TrainResult result = train::train(config);
  double final_return = std::nan("");
  for (auto it = result.metrics.rbegin(); it != result.metrics.rend(); ++it) {
    if (it->contains("mean_return") && !(*it)["mean_return"].is_null()) {
      final_return = (*it)["mean_return"].get<double>();
      break;
    }
  }
  std::printf("train: %d iterations, final mean return %.4f\n",
              config.iterations, final_return);
  std::printf("checkpoint: %s\n", result.checkpoint_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalCli {
  std::string checkpoint;
  std::string out;
  std::string mode = "paired";
  std::string config_path;
  std::string profile_path;
  std::string noise;
  std::uint64_t seed = 0;
  int episodes = 10;
  int max_steps = -1;
  double command_scale = 1.0;
};

json episode_record_json(const train::EpisodeRecord& r) {
  return json{{"return", r.ret},
              {"steps", r.steps},
              {"fell", r.fell},
              {"joint_exceed_fraction", r.joint_exceed_fraction},
              {"peak_roll", r.peak_roll},
              {"peak_pitch", r.peak_pitch},
              {"mean_lin_track_err", r.mean_lin_track_err},
              {"mean_ang_track_err", r.mean_ang_track_err}};
}

json mode_summary_json(const std::vector<train::EpisodeRecord>& records) {
  json episodes = json::array();
  double ret = 0.0, exceed = 0.0, lin = 0.0, ang = 0.0;
  double peak_roll = 0.0, peak_pitch = 0.0;
  for (const auto& r : records) {
    episodes.push_back(episode_record_json(r));
    ret += r.ret;
    exceed += r.joint_exceed_fraction;
    lin += r.mean_lin_track_err;
    ang += r.mean_ang_track_err;
    peak_roll = std::max(peak_roll, r.peak_roll);
    peak_pitch = std::max(peak_pitch, r.peak_pitch);
  }
  const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
  return json{{"episodes", episodes},
              {"mean_return", ret / n},
              {"mean_exceed_fraction", exceed / n},
              {"mean_lin_track_err", lin / n},
              {"mean_ang_track_err", ang / n},
              {"peak_roll", peak_roll},
              {"peak_pitch", peak_pitch}};
}

// Piecewise-constant command schedule: {"segments":[{"steps":100,
// "command":[vx,vy,wz]}, ...]}; the last segment holds to episode end.
std::function<Eigen::Vector3d(int, int)> load_profile(
    const std::string& path) {
  const json j = load_json(path);
  if (j.value("schema", "") != "dreamplan/profile/1") {
    throw ValueError("profile file missing schema dreamplan/profile/1");
  }
  struct Segment {
    int steps;
    Eigen::Vector3d command;
  };
  auto segments = std::make_shared<std::vector<Segment>>();
  for (const auto& s : j.at("segments")) {
    const auto& c = s.at("command");
    segments->push_back(
        {s.at("steps").get<int>(),
         Eigen::Vector3d(c.at(0).get<double>(), c.at(1).get<double>(),
                         c.at(2).get<double>())});
  }
  if (segments->empty()) throw ValueError("profile has no segments");
  return [segments](int, int step) {
    int acc = 0;
    for (const auto& s : *segments) {
      acc += s.steps;
      if (step < acc) return s.command;
    }
    return segments->back().command;
  };
}

int cmd_eval(const EvalCli& cli) {
  io::Artifacts artifacts = io::load_artifacts(cli.checkpoint);
  if (!cli.noise.empty()) {
    artifacts.env.noise_level = env::noise_level_from_name(cli.noise);
  }
  if (cli.max_steps > 0) artifacts.env.max_steps = cli.max_steps;

  mpc::PlannerConfig planner_config;
  if (!cli.config_path.empty()) {
    planner_config = load_planner_config(cli.config_path);
  }
  const auto constraints =
      mpc::default_constraints(artifacts.env, planner_config);

  std::function<Eigen::Vector3d(int, int)> profile;
  if (!cli.profile_path.empty()) profile = load_profile(cli.profile_path);

  fs::create_directories(cli.out);
  const env::EnvConfig& ecfg = artifacts.env;

  // Per-episode CSV sinks; rows accumulate through the hooks below.
  std::vector<io::EpisodeRow>* sink = nullptr;
  auto policy_hook = [&](const train::StepInfo& info) {
    io::EpisodeRow row;
    row.step = info.step;
    row.mode = "policy";
    row.roll = info.state->roll;
    row.pitch = info.state->pitch;
    row.joint_pos = joint_deviation(ecfg, *info.state);
    row.target = info.command;
    row.optimized = info.command;
    row.twist = info.state->twist;
    row.reward = info.reward_terms.total();
    row.joint_exceed = joint_exceeded(ecfg, *info.state);
    row.feasible = true;
    sink->push_back(std::move(row));
  };
  auto planner_hook = [&](const eval::PlanStepInfo& info) {
    io::EpisodeRow row;
    row.step = info.step;
    row.mode = "planner";
    row.roll = info.state->roll;
    row.pitch = info.state->pitch;
    row.joint_pos = joint_deviation(ecfg, *info.state);
    row.target = info.target;
    row.optimized = info.optimized;
    row.twist = info.state->twist;
    row.reward = info.reward;
    row.joint_exceed = joint_exceeded(ecfg, *info.state);
    row.feasible = info.feasible;
    sink->push_back(std::move(row));
  };
  auto flush_episode = [&](int episode, const char* mode,
                           std::vector<io::EpisodeRow>& rows) {
    io::EpisodeLog log;
    log.joint_count = ecfg.joint_count;
    log.q_soft_limit = ecfg.q_soft_limit;
    log.roll_limit = planner_config.roll_limit;
    log.pitch_limit = planner_config.pitch_limit;
    log.rows = std::move(rows);
    char name[64];
    std::snprintf(name, sizeof(name), "ep%03d_%s.csv", episode, mode);
    io::write_episode_csv((fs::path(cli.out) / name).string(), log);
    rows.clear();
  };

  json summary{{"schema", "dreamplan/eval-summary/1"},
               {"checkpoint", cli.checkpoint},
               {"seed", cli.seed},
               {"mode", cli.mode},
               {"episodes", cli.episodes},
               {"command_scale", cli.command_scale},
               {"noise_level", env::noise_level_name(ecfg.noise_level)},
               {"planner", planner_config}};

  std::vector<io::EpisodeRow> rows;
  sink = &rows;

  if (cli.mode == "paired") {
    const eval::PairedEpisodes result = eval::evaluate_paired(
        artifacts, constraints, planner_config, cli.episodes, cli.seed,
        cli.command_scale, profile,
        [&](int e, const train::StepInfo& info) {
          policy_hook(info);
          if (info.done) flush_episode(e, "policy", rows);
        },
        [&](int e, const eval::PlanStepInfo& info) {
          planner_hook(info);
          if (info.done) flush_episode(e, "planner", rows);
        });

    std::vector<train::EpisodeRecord> planner_records;
    json deviation = json::array();
    json infeasible = json::array();
    for (const auto& p : result.planner) {
      planner_records.push_back(p.record);
      deviation.push_back(p.command_deviation_steps);
      infeasible.push_back(p.infeasible_steps);
    }
    summary["modes"] = {{"policy", mode_summary_json(result.policy)},
                        {"planner", mode_summary_json(planner_records)}};
    summary["modes"]["planner"]["command_deviation_steps"] = deviation;
    summary["modes"]["planner"]["infeasible_steps"] = infeasible;
    summary["paired"] = {{"planner_no_worse", result.planner_no_worse},
                         {"episodes", cli.episodes}};
    std::printf("eval: planner no worse on %d/%d paired episodes\n",
                result.planner_no_worse, cli.episodes);
  } else if (cli.mode == "policy") {
    train::PolicyController controller(artifacts);
    env::SurrogateEnv sim(ecfg, derive_seed(cli.seed, 0xeba1));
    std::vector<train::EpisodeRecord> records;
    for (int e = 0; e < cli.episodes; ++e) {
      const Eigen::Vector3d constant =
          train::eval_command(cli.seed, e, ecfg, cli.command_scale);
      controller.reset();
      records.push_back(train::run_episode(
          sim, train::eval_reset_seed(cli.seed, e),
          [&](int step) { return profile ? profile(e, step) : constant; },
          [&](const net::Vec& obs) { return controller(obs); }, policy_hook));
      flush_episode(e, "policy", rows);
    }
    summary["modes"] = {{"policy", mode_summary_json(records)}};
    std::printf("eval: %d policy episodes, mean return %.4f\n", cli.episodes,
                summary["modes"]["policy"]["mean_return"].get<double>());
  } else if (cli.mode == "planner") {
    if (!artifacts.has_model) {
      throw ValueError("planner evaluation requires an internal model");
    }
    env::SurrogateEnv sim(ecfg, derive_seed(cli.seed, 0xeba1));
    mpc::MpcController controller(artifacts.bundle, constraints,
                                  planner_config,
                                  derive_seed(cli.seed, 0x914e));
    std::vector<train::EpisodeRecord> records;
    json deviation = json::array();
    json infeasible = json::array();
    for (int e = 0; e < cli.episodes; ++e) {
      const Eigen::Vector3d constant =
          train::eval_command(cli.seed, e, ecfg, cli.command_scale);
      controller.reset(static_cast<std::uint64_t>(e));
      const eval::PlannerEpisodeRecord rec = eval::run_planner_episode(
          sim, train::eval_reset_seed(cli.seed, e),
          [&](int step) { return profile ? profile(e, step) : constant; },
          controller, planner_hook);
      flush_episode(e, "planner", rows);
      records.push_back(rec.record);
      deviation.push_back(rec.command_deviation_steps);
      infeasible.push_back(rec.infeasible_steps);
    }
    summary["modes"] = {{"planner", mode_summary_json(records)}};
    summary["modes"]["planner"]["command_deviation_steps"] = deviation;
    summary["modes"]["planner"]["infeasible_steps"] = infeasible;
    std::printf("eval: %d planner episodes, mean return %.4f\n", cli.episodes,
                summary["modes"]["planner"]["mean_return"].get<double>());
  } else {
    throw ValueError("unknown eval mode: " + cli.mode);
  }

  write_json(fs::path(cli.out) / "summary.json", summary);
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchCli {
  std::string checkpoint;
  std::string out;
  std::string config_path;
  std::uint64_t seed = 0;
  int steps = 1000;
  int digest_steps = 8;
};

int cmd_bench(const BenchCli& cli) {
  io::Artifacts artifacts = io::load_artifacts(cli.checkpoint);
  if (!artifacts.has_model) {
    throw ValueError("bench requires an internal model");
  }
  mpc::PlannerConfig planner_config;
  if (!cli.config_path.empty()) {
    planner_config = load_planner_config(cli.config_path);
  }
  const auto constraints =
      mpc::default_constraints(artifacts.env, planner_config);
  const env::EnvConfig& ecfg = artifacts.env;

  // Planner-in-the-loop control steps; the digest covers the planner's
  // chosen plans (and, separately, every scored candidate over the first
  // digest_steps steps), so two runs under one seed can be compared while
  // timing fields stay free to differ.
  auto run = [&](int steps, bool record,
                 std::vector<double>* ms) -> std::pair<std::uint64_t,
                                                       std::uint64_t> {
    mpc::PlannerConfig config = planner_config;
    config.record_candidates = record;
    env::SurrogateEnv sim(ecfg, derive_seed(cli.seed, 0xeba1));
    mpc::MpcController ctl(artifacts.bundle, constraints, config,
                           derive_seed(cli.seed, 0xbe7c));
    std::uint64_t plan_digest = 0xcbf29ce484222325ULL;
    std::uint64_t cand_digest = 0xcbf29ce484222325ULL;
    int episode = 0;
    int step_in_episode = 0;
    Eigen::Vector3d target = train::eval_command(cli.seed, 0, ecfg, 1.0);
    Eigen::Vector3d executed = target;
    sim.reset(train::eval_reset_seed(cli.seed, 0));
    ctl.reset(0);
    for (int step = 0; step < steps; ++step) {
      const net::Vec obs = sim.observe(executed);
      const auto t0 = std::chrono::steady_clock::now();
      const mpc::PlanResult& plan = ctl.step(obs, target);
      const auto t1 = std::chrono::steady_clock::now();
      if (ms) {
        ms->push_back(
            std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      executed = plan.command;
      plan_digest = hash_doubles(plan_digest, plan.command.data(), 3);
      plan_digest = hash_doubles(
          plan_digest, plan.plan_actions.data(),
          static_cast<std::size_t>(plan.plan_actions.size()));
      for (const auto& cand : plan.recorded) {
        cand_digest = hash_doubles(cand_digest, cand.command.data(), 3);
        cand_digest = hash_doubles(cand_digest, cand.actions.data(),
                                   static_cast<std::size_t>(cand.actions.size()));
        cand_digest = hash_doubles(cand_digest, &cand.ret, 1);
        const double feasible = cand.feasible ? 1.0 : 0.0;
        cand_digest = hash_doubles(cand_digest, &feasible, 1);
      }
      auto res = sim.step(plan.first_action, executed);
      ++step_in_episode;
      if (res.done) {
        ++episode;
        step_in_episode = 0;
        target = train::eval_command(cli.seed, episode, ecfg, 1.0);
        executed = target;
        sim.reset(train::eval_reset_seed(cli.seed, episode));
        ctl.reset(static_cast<std::uint64_t>(episode));
      }
    }
    return {plan_digest, cand_digest};
  };

  std::vector<double> ms;
  ms.reserve(static_cast<std::size_t>(cli.steps));
  const auto [plan_digest, unused] = run(cli.steps, false, &ms);
  const auto [digest_plans_short, candidate_digest] =
      run(cli.digest_steps, true, nullptr);
  (void)unused;
  (void)digest_plans_short;

  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const auto q = [&](double p) {
    const std::size_t i = std::min(
        sorted.size() - 1, static_cast<std::size_t>(p * sorted.size()));
    return sorted[i];
  };
  const double median = q(0.5);
  const double p95 = q(0.95);
  double mean = 0.0;
  for (double v : ms) mean += v;
  mean /= static_cast<double>(ms.size());

  fs::create_directories(cli.out);
  json report{
      {"schema", "dreamplan/bench/1"},
      {"checkpoint", cli.checkpoint},
      {"seed", cli.seed},
      {"steps", cli.steps},
      {"planner", planner_config},
      {"deterministic",
       {{"plan_digest", hex64(plan_digest)},
        {"candidate_digest", hex64(candidate_digest)},
        {"digest_steps", cli.digest_steps}}},
      // Wall-clock section: excluded from determinism guarantees.
      {"timing_ms",
       {{"median", median}, {"p95", p95}, {"mean", mean},
        {"min", sorted.front()}, {"max", sorted.back()}}},
      {"hz", {{"median", 1000.0 / median}, {"mean", 1000.0 / mean}}}};
  write_json(fs::path(cli.out) / "bench.json", report);

  std::printf("bench: %d steps, median %.2f ms, p95 %.2f ms, %.0f Hz\n",
              cli.steps, median, p95, 1000.0 / median);
  std::printf("plan digest %s, candidate digest %s\n",
              hex64(plan_digest).c_str(), hex64(candidate_digest).c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// export-plots

struct PlotsCli {
  std::string in;
  std::string out;
  std::vector<std::string> panels = {"roll_pitch", "commands", "joints"};
};

void render_panel(const io::EpisodeLog& log, const std::string& panel,
                  const std::string& stem, const fs::path& out_dir) {
  const std::size_t n = log.rows.size();
  std::vector<double> steps(n);
  for (std::size_t i = 0; i < n; ++i) steps[i] = log.rows[i].step;

  io::PlotSpec spec;
  spec.x_label = "control step";
  auto series_of = [&](const std::string& label, auto getter) {
    io::PlotSeries s;
    s.label = label;
    s.x = steps;
    s.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.y[i] = getter(log.rows[i]);
    spec.series.push_back(std::move(s));
  };

  if (panel == "roll_pitch") {
    spec.title = stem + ": base attitude";
    spec.y_label = "angle [rad]";
    series_of("roll", [](const io::EpisodeRow& r) { return r.roll; });
    series_of("pitch", [](const io::EpisodeRow& r) { return r.pitch; });
    spec.hlines = {{"roll limit", log.roll_limit},
                   {"", -log.roll_limit}};
    if (log.pitch_limit != log.roll_limit) {
      spec.hlines.emplace_back("pitch limit", log.pitch_limit);
      spec.hlines.emplace_back("", -log.pitch_limit);
    }
  } else if (panel == "commands") {
    spec.title = stem + ": commanded vs optimized twist";
    spec.y_label = "twist";
    static const char* axis[] = {"vx", "vy", "wz"};
    for (int a = 0; a < 3; ++a) {
      series_of(std::string("target ") + axis[a],
                [a](const io::EpisodeRow& r) { return r.target(a); });
    }
    for (int a = 0; a < 3; ++a) {
      series_of(std::string("optimized ") + axis[a],
                [a](const io::EpisodeRow& r) { return r.optimized(a); });
    }
  } else if (panel == "joints") {
    spec.title = stem + ": joint deviations vs soft limits";
    spec.y_label = "q - q_nominal [rad]";
    for (int i = 0; i < log.joint_count; ++i) {
      series_of("q" + std::to_string(i), [i](const io::EpisodeRow& r) {
        return r.joint_pos[static_cast<std::size_t>(i)];
      });
    }
    std::vector<double> limits;
    for (int i = 0; i < log.joint_count; ++i) {
      limits.push_back(log.q_soft_limit(i));
    }
    std::sort(limits.begin(), limits.end());
    limits.erase(std::unique(limits.begin(), limits.end()), limits.end());
    for (double lim : limits) {
      spec.hlines.emplace_back("limit", lim);
      spec.hlines.emplace_back("", -lim);
    }
  } else {
    throw ValueError("unknown panel '" + panel +
                     "' (expected roll_pitch, commands, or joints)");
  }

  io::write_svg_plot((out_dir / (stem + "_" + panel + ".svg")).string(),
                     spec);
}

int cmd_export_plots(const PlotsCli& cli) {
  std::vector<fs::path> csvs;
  for (const auto& entry : fs::directory_iterator(cli.in)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      csvs.push_back(entry.path());
    }
  }
  std::sort(csvs.begin(), csvs.end());
  if (csvs.empty()) {
    throw IoError("no episode CSVs in " + cli.in);
  }
  fs::create_directories(cli.out);
  int images = 0;
  for (const auto& csv : csvs) {
    const io::EpisodeLog log = io::read_episode_csv(csv.string());
    if (log.rows.empty()) {
      throw ValueError("episode log is empty: " + csv.string());
    }
    for (const std::string& panel : cli.panels) {
      render_panel(log, panel, csv.stem().string(), cli.out);
      ++images;
    }
  }
  std::printf("export-plots: %d images from %zu logs (%zu panels each)\n",
              images, csvs.size(), cli.panels.size());
  return 0;
}

// ---------------------------------------------------------------------------
// validate-logs

int cmd_validate_logs(const std::string& dir) {
  const auto checks = io::validate_log_dir(dir);
  int failures = 0;
  for (const auto& c : checks) {
    if (c.ok) {
      std::printf("ok    %-28s %s\n", c.schema.c_str(), c.path.c_str());
    } else {
      ++failures;
      std::printf("FAIL  %s: %s\n", c.path.c_str(), c.detail.c_str());
    }
  }
  std::printf("validate-logs: %zu files, %d failures\n", checks.size(),
              failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dreamplan: learned-model planning pipeline"};
  app.require_subcommand(1);

  TrainCli train_cli;
  auto* train_cmd = app.add_subcommand("train", "Run a training session");
  train_cmd->add_option("--config", train_cli.config_path,
                        "Training config JSON (dreamplan/train-config/1)");
  train_cmd->add_option("--seed", train_cli.seed, "RNG seed")->required();
  train_cmd->add_option("--out", train_cli.out, "Output directory")
      ->required();
  train_cmd->add_option("--variant", train_cli.variant,
                        "Internal model: nlm, plm, flm, or none");
  train_cmd->add_option("--horizon", train_cli.horizon, "Dream horizon H");
  train_cmd->add_option("--history", train_cli.history,
                        "Observation history window");
  train_cmd->add_option("--latent-dim", train_cli.latent_dim, "Latent width");
  train_cmd->add_option("--envs", train_cli.envs, "Parallel environments");
  train_cmd->add_option("--iters", train_cli.iters, "Training iterations");
  train_cmd->add_option("--hidden", train_cli.hidden, "Hidden layer widths");
  train_cmd->add_option("--activation", train_cli.activation,
                        "Hidden activation: tanh or elu");
  train_cmd->add_option("--noise", train_cli.noise,
                        "Observation noise: off, low, medium, high");
  train_cmd->add_option("--joints", train_cli.joints, "Joint count");
  train_cmd->add_option("--checkpoint-every", train_cli.checkpoint_every,
                        "Periodic checkpoint interval (iterations)");

  EvalCli eval_cli;
  auto* eval_cmd =
      app.add_subcommand("eval", "Run policy/planner evaluation episodes");
  eval_cmd->add_option("--checkpoint", eval_cli.checkpoint, "Checkpoint file")
      ->required();
  eval_cmd->add_option("--seed", eval_cli.seed, "RNG seed")->required();
  eval_cmd->add_option("--out", eval_cli.out, "Output directory")->required();
  eval_cmd->add_option("--mode", eval_cli.mode,
                       "paired (default), policy, or planner");
  eval_cmd->add_option("--episodes", eval_cli.episodes, "Episode count");
  eval_cmd->add_option("--max-steps", eval_cli.max_steps,
                       "Episode length cap (overrides the checkpoint's)");
  eval_cmd->add_option("--command-scale", eval_cli.command_scale,
                       "Command magnitude as a multiple of the training "
                       "range");
  eval_cmd->add_option("--profile", eval_cli.profile_path,
                       "Piecewise command schedule JSON "
                       "(dreamplan/profile/1)");
  eval_cmd->add_option("--config", eval_cli.config_path,
                       "Planner config JSON (partial keys allowed)");
  eval_cmd->add_option("--noise", eval_cli.noise,
                       "Observation noise override");

  BenchCli bench_cli;
  auto* bench_cmd =
      app.add_subcommand("bench", "Time plan() over a control loop");
  bench_cmd->add_option("--checkpoint", bench_cli.checkpoint,
                        "Checkpoint file")
      ->required();
  bench_cmd->add_option("--seed", bench_cli.seed, "RNG seed")->required();
  bench_cmd->add_option("--out", bench_cli.out, "Output directory")
      ->required();
  bench_cmd->add_option("--steps", bench_cli.steps, "Control steps to time")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--digest-steps", bench_cli.digest_steps,
                        "Steps covered by the candidate digest")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--config", bench_cli.config_path,
                        "Planner config JSON (partial keys allowed)");

  PlotsCli plots_cli;
  auto* plots_cmd =
      app.add_subcommand("export-plots", "Render SVG panels from episode "
                                         "CSVs");
  plots_cmd->add_option("--in", plots_cli.in, "Directory with episode CSVs")
      ->required();
  plots_cmd->add_option("--out", plots_cli.out, "Output directory")
      ->required();
  plots_cmd->add_option("--panels", plots_cli.panels,
                        "Panels to render (roll_pitch, commands, joints)");

  std::string validate_dir;
  auto* validate_cmd = app.add_subcommand(
      "validate-logs", "Check every artifact in a directory for a valid "
                       "schema");
  validate_cmd->add_option("dir", validate_dir, "Directory to validate")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_cli);
    if (eval_cmd->parsed()) return cmd_eval(eval_cli);
    if (bench_cmd->parsed()) return cmd_bench(bench_cli);
    if (plots_cmd->parsed()) return cmd_export_plots(plots_cli);
    if (validate_cmd->parsed()) return cmd_validate_logs(validate_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
