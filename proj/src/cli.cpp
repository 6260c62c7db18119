#include "gridcrew/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gridcrew/baselines.hpp"
#include "gridcrew/env.hpp"
#include "gridcrew/fault_model.hpp"
#include "gridcrew/grid.hpp"
#include "gridcrew/mcts.hpp"
#include "gridcrew/net.hpp"
#include "gridcrew/scenario_gen.hpp"
#include "gridcrew/train.hpp"

namespace gridcrew {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

UnitGranularity pick_granularity(const std::string& choice, const DistributionGrid& grid) {
  if (choice == "line") return UnitGranularity::Line;
  if (choice == "segment") return UnitGranularity::Segment;
  return grid.lines.size() <= 30 ? UnitGranularity::Line : UnitGranularity::Segment;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ','))
    if (!token.empty()) out.push_back(std::stoi(token));
  return out;
}

constexpr const char* kVersion = "0.1.0";

// Written before the run starts so a crashed run still documents itself.
void write_manifest(const fs::path& dir, const std::string& command,
                    const nlohmann::json& settings) {
  nlohmann::json j;
  j["tool"] = "gridcrew";
  j["version"] = kVersion;
  j["command"] = command;
  j["output_dir"] = dir.string();
  j["settings"] = settings;
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << "\n";
}

struct EpisodeRun {
  double outage_hours = 0.0;
  int decisions = 0;
  bool truncated = false;
  double wall_ms_per_decision = 0.0;
  std::string trajectory;
  EnvState final_state;
};

std::string trajectory_string(const DistributionGrid& grid, const EnvState& s) {
  std::string out;
  for (size_t vi = 0; vi < grid.vehicles.size(); ++vi) {
    if (vi) out += ";";
    out += grid.vehicles[vi].id + ":" + std::to_string(grid.vehicles[vi].depot);
    for (const LogEntry& e : s.log)
      if (e.vehicle == static_cast<int>(vi)) out += "->" + std::to_string(e.to);
  }
  return out;
}

enum class Algo { Agent, Vanilla, Oluct, Greedy };

std::string algo_name(Algo a) {
  switch (a) {
    case Algo::Agent: return "agent";
    case Algo::Vanilla: return "vanilla";
    case Algo::Oluct: return "oluct";
    case Algo::Greedy: return "greedy";
  }
  return "?";
}

// Plays one episode to termination under the chosen decision rule.
EpisodeRun run_episode(const FaultModel& model, const Scenario& scenario,
                       const EnvConfig& env_cfg, Algo algo, int sims,
                       const Checkpoint* ckpt, std::uint64_t seed, bool zero_timing,
                       double uct_c = std::sqrt(2.0)) {
  EnvState state = reset(model, scenario, env_cfg, seed);
  Evaluator evaluator;
  if (algo == Algo::Agent) {
    if (!ckpt) throw std::runtime_error("the agent needs a checkpoint");
    evaluator = make_net_evaluator(model, ckpt->config, ckpt->params);
  }
  double decide_seconds = 0.0;
  int decisions = 0;
  while (!state.terminal) {
    const auto t0 = std::chrono::steady_clock::now();
    int dest = -1;
    switch (algo) {
      case Algo::Agent: {
        SearchConfig scfg;
        scfg.simulations = sims;
        scfg.tau = 1e-4;
        scfg.seed = Rng::derive(seed, 0xDEC1DE + state.decisions);
        dest = most_visited_action(search(model, env_cfg, state, evaluator, scfg));
        break;
      }
      case Algo::Vanilla: {
        BaselineConfig bcfg;
        bcfg.simulations = sims;
        bcfg.uct_c = uct_c;
        bcfg.seed = Rng::derive(seed, 0xDEC1DE + state.decisions);
        dest = vanilla_uct_decide(model, env_cfg, state, bcfg);
        break;
      }
      case Algo::Oluct: {
        BaselineConfig bcfg;
        bcfg.simulations = sims;
        bcfg.uct_c = uct_c;
        bcfg.seed = Rng::derive(seed, 0xDEC1DE + state.decisions);
        dest = oluct_decide(model, env_cfg, state, bcfg);
        break;
      }
      case Algo::Greedy:
        dest = greedy_decide(model, state);
        break;
    }
    decide_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ++decisions;
    state = step(model, env_cfg, state, {next_to_dispatch(state), dest}).state;
  }
  EpisodeRun run;
  run.outage_hours = episode_outage_hours(model, state);
  run.decisions = decisions;
  run.truncated = state.truncated;
  run.wall_ms_per_decision =
      zero_timing || decisions == 0 ? 0.0 : decide_seconds * 1000.0 / decisions;
  run.trajectory = trajectory_string(model.grid(), state);
  run.final_state = std::move(state);
  return run;
}

void append_episode_log(std::ofstream& out, const FaultModel& model, const Scenario& scenario,
                        const std::string& case_id, std::uint64_t seed, Algo algo, int sims,
                        const EpisodeRun& run) {
  const DistributionGrid& grid = model.grid();
  nlohmann::json j;
  j["scenario"] = scenario.name;
  j["case"] = case_id;
  j["seed"] = seed;
  j["algorithm"] = algo_name(algo);
  j["simulations"] = sims;
  nlohmann::json dmg = nlohmann::json::array();
  for (int li : run.final_state.damaged_lines0) dmg.push_back(grid.lines[li].id);
  j["damage_lines"] = std::move(dmg);
  nlohmann::json calls = nlohmann::json::array();
  for (int c = 0; c < model.num_customers(); ++c)
    if (run.final_state.belief.called[c]) calls.push_back(grid.customers[c].node);
  j["called_nodes"] = std::move(calls);
  nlohmann::json events = nlohmann::json::array();
  for (const LogEntry& e : run.final_state.log) {
    nlohmann::json ev;
    ev["decision"] = e.decision;
    ev["vehicle"] = grid.vehicles[e.vehicle].id;
    ev["from"] = e.from;
    ev["to"] = e.to;
    ev["t_depart"] = e.t_depart;
    ev["t_arrive"] = e.t_arrive;
    ev["travel_minutes"] = e.travel_minutes;
    ev["reward"] = e.reward;
    nlohmann::json units = nlohmann::json::array(), damaged = nlohmann::json::array(),
                   done = nlohmann::json::array();
    for (size_t i = 0; i < e.units.size(); ++i) {
      units.push_back(model.unit_id(e.units[i]));
      damaged.push_back(static_cast<int>(e.damaged[i]));
      done.push_back(e.repair_done[i]);
    }
    ev["units"] = std::move(units);
    ev["damaged"] = std::move(damaged);
    ev["repair_done"] = std::move(done);
    ev["max_posterior_after"] = e.max_posterior_after;
    events.push_back(std::move(ev));
  }
  j["events"] = std::move(events);
  j["t_end"] = run.final_state.clock;
  j["outage_hours"] = run.outage_hours;
  j["decisions"] = run.decisions;
  j["truncated"] = run.truncated;
  out << j.dump() << "\n";
}

struct CommonOpts {
  std::string scenario_path;
  std::string granularity = "auto";
  bool zero_timing = false;
};

int cmd_train(const CommonOpts& common, const std::string& cases_path, const std::string& out_dir,
              TrainConfig tcfg, std::vector<int> hidden, std::string activation, double lr,
              double l2, int max_decisions) {
  const Scenario scenario = load_scenario(common.scenario_path);
  const FaultModel model(scenario.grid, pick_granularity(common.granularity, scenario.grid));
  const std::vector<EvalCase> cases = load_cases(cases_path, scenario.grid);
  EnvConfig env_cfg = make_env_config(scenario);
  env_cfg.max_decisions = max_decisions;

  NetConfig net_cfg = make_net_config(model);
  net_cfg.hidden = hidden;
  net_cfg.activation = activation == "tanh" ? Activation::Tanh : Activation::Relu;
  net_cfg.learning_rate = lr;
  net_cfg.l2_coeff = l2;
  net_cfg.seed = tcfg.seed;

  fs::create_directories(out_dir);
  nlohmann::json settings;
  settings["scenario"] = common.scenario_path;
  settings["cases"] = cases_path;
  settings["granularity"] = common.granularity;
  settings["episodes"] = tcfg.episodes;
  settings["simulations"] = tcfg.simulations;
  settings["batch_size"] = tcfg.batch_size;
  settings["steps_per_episode"] = tcfg.steps_per_episode;
  settings["buffer_capacity"] = tcfg.buffer_capacity;
  settings["learning_rate"] = lr;
  settings["l2_coeff"] = l2;
  settings["hidden"] = hidden;
  settings["activation"] = activation;
  settings["seed"] = tcfg.seed;
  settings["eval_every"] = tcfg.eval_every;
  settings["max_decisions"] = max_decisions;
  write_manifest(out_dir, "train", settings);

  std::ofstream metrics(fs::path(out_dir) / "metrics.csv");
  metrics << "episode,eval_outage_hours,value_loss,policy_loss,l2_loss,buffer_size,wall_s\n";
  const bool zero_timing = common.zero_timing;
  auto on_row = [&](const MetricsRow& row) {
    metrics << row.episode << "," << fmt(row.eval_outage_hours) << "," << fmt(row.value_loss)
            << "," << fmt(row.policy_loss) << "," << fmt(row.l2_loss) << "," << row.buffer_size
            << "," << fmt(zero_timing ? 0.0 : row.wall_s, 3) << "\n";
    metrics.flush();
    std::cout << "episode " << row.episode << "  eval " << fmt(row.eval_outage_hours, 3)
              << " customer-hours  losses v=" << fmt(row.value_loss, 4)
              << " p=" << fmt(row.policy_loss, 4) << "  buffer " << row.buffer_size << "\n";
  };
  TrainOutput result = train_loop(model, scenario, cases, env_cfg, net_cfg, tcfg, on_row);
  save_checkpoint((fs::path(out_dir) / "checkpoint.json").string(), result.checkpoint);
  std::cout << "checkpoint written to " << (fs::path(out_dir) / "checkpoint.json").string()
            << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& common, const std::string& cases_path,
                 const std::string& ckpt_path, const std::string& out_dir, int sims, int seeds,
                 std::uint64_t seed_base, const std::string& episode_log) {
  const Scenario scenario = load_scenario(common.scenario_path);
  const FaultModel model(scenario.grid, pick_granularity(common.granularity, scenario.grid));
  const std::vector<EvalCase> cases = load_cases(cases_path, scenario.grid);
  const EnvConfig env_cfg = make_env_config(scenario);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  if (ckpt.config.input_dim != 1 + model.num_units())
    throw std::runtime_error("checkpoint was trained for a different scenario or granularity");

  fs::create_directories(out_dir);
  nlohmann::json settings;
  settings["scenario"] = common.scenario_path;
  settings["cases"] = cases_path;
  settings["granularity"] = common.granularity;
  settings["checkpoint"] = ckpt_path;
  settings["checkpoint_episodes_trained"] = ckpt.episodes_trained;
  settings["simulations"] = sims;
  settings["seeds"] = seeds;
  settings["seed_base"] = seed_base;
  write_manifest(out_dir, "evaluate", settings);

  std::ofstream csv(fs::path(out_dir) / "evaluate.csv");
  csv << "scenario,case,seed,algorithm,simulations,outage_hours,decisions,"
         "wall_ms_per_decision,trajectory\n";
  std::ofstream log_out;
  if (!episode_log.empty()) log_out.open(episode_log);

  double total = 0.0;
  for (const EvalCase& ec : cases) {
    const Scenario sc = scenario_for_case(scenario, ec);
    for (int s = 0; s < seeds; ++s) {
      const std::uint64_t seed = Rng::derive(seed_base, 0xEAA0 + s);
      EpisodeRun run =
          run_episode(model, sc, env_cfg, Algo::Agent, sims, &ckpt, seed, common.zero_timing);
      total += run.outage_hours;
      csv << scenario.name << "," << ec.id << "," << seed_base + s << ",agent," << sims << ","
          << fmt(run.outage_hours) << "," << run.decisions << ","
          << fmt(run.wall_ms_per_decision, 3) << "," << run.trajectory << "\n";
      if (log_out.is_open())
        append_episode_log(log_out, model, sc, ec.id, seed_base + s, Algo::Agent, sims, run);
    }
  }
  std::cout << "mean outage over " << cases.size() * seeds
            << " episodes: " << fmt(total / (cases.size() * seeds), 3) << " customer-hours\n";
  return 0;
}

std::vector<std::pair<Algo, int>> parse_algorithms(const std::string& spec_text) {
  std::vector<std::pair<Algo, int>> out;
  std::istringstream in(spec_text);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    std::string name = token;
    int sims = 0;
    const auto colon = token.find(':');
    if (colon != std::string::npos) {
      name = token.substr(0, colon);
      sims = std::stoi(token.substr(colon + 1));
    }
    Algo algo;
    if (name == "agent")
      algo = Algo::Agent;
    else if (name == "vanilla")
      algo = Algo::Vanilla;
    else if (name == "oluct")
      algo = Algo::Oluct;
    else if (name == "greedy")
      algo = Algo::Greedy;
    else
      throw std::runtime_error("unknown algorithm '" + name + "'");
    if (algo != Algo::Greedy && sims <= 0)
      throw std::runtime_error("algorithm '" + name + "' needs a simulation count, e.g. " +
                               name + ":200");
    out.push_back({algo, sims});
  }
  if (out.empty()) throw std::runtime_error("no algorithms requested");
  return out;
}

int cmd_compare(const CommonOpts& common, const std::string& cases_path,
                const std::string& ckpt_path, const std::string& out_dir,
                const std::string& algorithms, int seeds, std::uint64_t seed_base,
                const std::string& episode_log, double uct_c) {
  const Scenario scenario = load_scenario(common.scenario_path);
  const FaultModel model(scenario.grid, pick_granularity(common.granularity, scenario.grid));
  const std::vector<EvalCase> cases = load_cases(cases_path, scenario.grid);
  const EnvConfig env_cfg = make_env_config(scenario);
  const std::vector<std::pair<Algo, int>> algos = parse_algorithms(algorithms);

  std::optional<Checkpoint> ckpt;
  for (const auto& [a, sims] : algos)
    if (a == Algo::Agent) {
      if (ckpt_path.empty())
        throw std::runtime_error("comparing the agent needs --checkpoint");
      ckpt = load_checkpoint(ckpt_path);
    }

  fs::create_directories(out_dir);
  nlohmann::json settings;
  settings["scenario"] = common.scenario_path;
  settings["cases"] = cases_path;
  settings["granularity"] = common.granularity;
  settings["checkpoint"] = ckpt_path;
  settings["algorithms"] = algorithms;
  settings["uct_c"] = uct_c;
  settings["seeds"] = seeds;
  settings["seed_base"] = seed_base;
  write_manifest(out_dir, "compare", settings);

  std::ofstream csv(fs::path(out_dir) / "compare.csv");
  csv << "scenario,case,seed,algorithm,simulations,outage_hours,wall_ms_per_decision\n";
  std::ofstream log_out;
  if (!episode_log.empty()) log_out.open(episode_log);

  struct Agg {
    double outage = 0.0;
    double ms = 0.0;
    int n = 0;
  };
  // Per (algorithm, case) cell plus an overall row per algorithm.
  std::vector<std::vector<Agg>> cell(algos.size(), std::vector<Agg>(cases.size()));
  std::vector<Agg> overall(algos.size());

  for (size_t ci = 0; ci < cases.size(); ++ci) {
    const Scenario sc = scenario_for_case(scenario, cases[ci]);
    for (size_t ai = 0; ai < algos.size(); ++ai) {
      const auto& [algo, sims] = algos[ai];
      for (int s = 0; s < seeds; ++s) {
        const std::uint64_t seed = Rng::derive(seed_base, 0xC0A + s);
        EpisodeRun run = run_episode(model, sc, env_cfg, algo, sims,
                                     ckpt ? &*ckpt : nullptr, seed, common.zero_timing, uct_c);
        csv << scenario.name << "," << cases[ci].id << "," << seed_base + s << ","
            << algo_name(algo) << "," << sims << "," << fmt(run.outage_hours) << ","
            << fmt(run.wall_ms_per_decision, 3) << "\n";
        cell[ai][ci].outage += run.outage_hours;
        cell[ai][ci].ms += run.wall_ms_per_decision;
        cell[ai][ci].n += 1;
        overall[ai].outage += run.outage_hours;
        overall[ai].ms += run.wall_ms_per_decision;
        overall[ai].n += 1;
        if (log_out.is_open())
          append_episode_log(log_out, model, sc, cases[ci].id, seed_base + s, algo, sims, run);
      }
    }
  }

  std::ofstream summary(fs::path(out_dir) / "summary.csv");
  summary << "algorithm,simulations,case,mean_outage_hours,mean_wall_ms_per_decision\n";
  for (size_t ai = 0; ai < algos.size(); ++ai) {
    const auto& [algo, sims] = algos[ai];
    for (size_t ci = 0; ci < cases.size(); ++ci)
      summary << algo_name(algo) << "," << sims << "," << cases[ci].id << ","
              << fmt(cell[ai][ci].outage / cell[ai][ci].n) << ","
              << fmt(cell[ai][ci].ms / cell[ai][ci].n, 3) << "\n";
    summary << algo_name(algo) << "," << sims << ",all,"
            << fmt(overall[ai].outage / overall[ai].n) << ","
            << fmt(overall[ai].ms / overall[ai].n, 3) << "\n";
    std::cout << algo_name(algo) << " (M=" << sims
              << "): mean outage " << fmt(overall[ai].outage / overall[ai].n, 3)
              << " customer-hours, " << fmt(overall[ai].ms / overall[ai].n, 3)
              << " ms/decision\n";
  }
  return 0;
}

int cmd_gen(const GenConfig& cfg, const std::string& out_path) {
  const Scenario sc = generate_scenario(cfg);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
  // The file carries its own recipe; comments are ignored by the parser.
  out << "# gridcrew " << kVersion << " gen-scenario --name " << cfg.name << " --nodes "
      << cfg.nodes << " --segments " << cfg.segments << " --customers " << cfg.customer_nodes
      << " --zones " << cfg.zones << " --rho " << fmt(cfg.rho, 4) << " --threshold "
      << fmt(cfg.threshold, 4) << " --seed " << cfg.seed << "\n";
  out << format_scenario(sc);
  std::cout << "wrote " << out_path << ": " << sc.grid.nodes.size() << " nodes, "
            << sc.grid.lines.size() << " lines, " << sc.grid.segments.size() << " segments, "
            << sc.grid.customers.size() << " customer nodes, " << sc.grid.zones.size()
            << " zones\n";
  return 0;
}

int cmd_validate(const CommonOpts& common) {
  const Scenario sc = load_scenario(common.scenario_path);
  const FaultModel model(sc.grid, pick_granularity(common.granularity, sc.grid));
  std::cout << "scenario '" << sc.name << "' is valid\n";
  std::cout << "  nodes: " << sc.grid.nodes.size() << "\n";
  std::cout << "  road edges: " << sc.grid.edges.size() << "\n";
  std::cout << "  circuits: " << sc.grid.circuits.size() << "\n";
  std::cout << "  lines: " << sc.grid.lines.size() << "\n";
  std::cout << "  segments: " << sc.grid.segments.size() << "\n";
  std::cout << "  customer nodes: " << sc.grid.customers.size() << " ("
            << sc.grid.total_customers() << " customers)\n";
  std::cout << "  zones: " << sc.grid.zones.size() << "\n";
  std::cout << "  belief units: " << model.num_units() << " ("
            << (model.granularity() == UnitGranularity::Line ? "line" : "segment")
            << " granularity)\n";
  std::cout << "  damage: " << (sc.damage ? "fixed" : "sampled") << ", calls: "
            << (sc.calls ? "fixed" : "sampled") << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"post-storm distribution grid repair dispatch"};
  app.require_subcommand(1);

  CommonOpts common;
  TrainConfig tcfg;
  GenConfig gcfg;
  std::string cases_path, out_dir = "out", ckpt_path, episode_log, gen_out;
  std::string algorithms = "greedy";
  std::string activation = "relu";
  std::string hidden_text = "120,120";
  double lr = 1e-4, l2 = 1e-4, uct_c = std::sqrt(2.0);
  int sims = 30, seeds = 1, max_decisions = 200;
  std::uint64_t seed_base = 1;

  auto add_common = [&](CLI::App* cmd, bool needs_scenario = true) {
    auto* opt = cmd->add_option("--scenario", common.scenario_path, "scenario file")
                    ->envname("GRIDCREW_SCENARIO");
    if (needs_scenario) opt->required();
    cmd->add_option("--granularity", common.granularity,
                    "belief granularity: line, segment or auto")
        ->check(CLI::IsMember({"line", "segment", "auto"}))
        ->envname("GRIDCREW_GRANULARITY");
    cmd->add_flag("--zero-timing", common.zero_timing,
                  "write zeros into wall-time columns (reproducible output)")
        ->envname("GRIDCREW_ZERO_TIMING");
    cmd->set_config("--config", "", "read options from an INI file");
  };

  CLI::App* train = app.add_subcommand("train", "self-play training");
  add_common(train);
  train->add_option("--cases", cases_path, "evaluation case suite")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--episodes", tcfg.episodes, "self-play episodes")
      ->check(CLI::PositiveNumber)
      ->envname("GRIDCREW_EPISODES");
  train->add_option("--sims", tcfg.simulations, "search simulations per decision")
      ->check(CLI::PositiveNumber)
      ->envname("GRIDCREW_SIMS");
  train->add_option("--c-puct", tcfg.c_puct, "exploration constant");
  train->add_option("--gamma", tcfg.gamma, "discount factor");
  train->add_option("--batch", tcfg.batch_size, "batch size")->check(CLI::PositiveNumber);
  train->add_option("--steps-per-episode", tcfg.steps_per_episode, "optimizer steps per episode")
      ->check(CLI::PositiveNumber);
  train->add_option("--buffer", tcfg.buffer_capacity, "replay capacity")
      ->check(CLI::PositiveNumber);
  train->add_option("--eval-every", tcfg.eval_every, "evaluation cadence (episodes)")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--tau-decisions", tcfg.tau.high_decisions,
                    "decisions played at high temperature")
      ->check(CLI::NonNegativeNumber);
  train->add_option("--seed", tcfg.seed, "training seed")->envname("GRIDCREW_SEED");
  train->add_flag("--root-noise", tcfg.root_noise, "Dirichlet noise on the root prior");
  train->add_option("--hidden", hidden_text, "hidden layer sizes, e.g. 120,120");
  train->add_option("--activation", activation, "relu or tanh")
      ->check(CLI::IsMember({"relu", "tanh"}));
  train->add_option("--lr", lr, "learning rate")->envname("GRIDCREW_LR");
  train->add_option("--l2", l2, "L2 regularization coefficient");
  train->add_option("--max-decisions", max_decisions, "dispatch cap per episode")
      ->check(CLI::PositiveNumber);

  CLI::App* evaluate = app.add_subcommand("evaluate", "run a trained agent on a case suite");
  add_common(evaluate);
  evaluate->add_option("--cases", cases_path, "case suite")->required();
  evaluate->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  evaluate->add_option("--out", out_dir, "output directory")->required();
  evaluate->add_option("--sims", sims, "search simulations per decision")
      ->check(CLI::PositiveNumber)
      ->envname("GRIDCREW_SIMS");
  evaluate->add_option("--runs", seeds, "episodes per case")->check(CLI::PositiveNumber);
  evaluate->add_option("--seed", seed_base, "base seed")->envname("GRIDCREW_SEED");
  evaluate->add_option("--episode-log", episode_log, "JSON-lines episode log path");

  CLI::App* compare = app.add_subcommand("compare", "benchmark algorithms on a case suite");
  add_common(compare);
  compare->add_option("--cases", cases_path, "case suite")->required();
  compare->add_option("--checkpoint", ckpt_path, "trained checkpoint (for agent:<M>)");
  compare->add_option("--out", out_dir, "output directory")->required();
  compare->add_option("--algorithms", algorithms,
                      "comma list of agent:<M>, vanilla:<M>, oluct:<M>, greedy")
      ->required();
  compare->add_option("--runs", seeds, "episodes per case and algorithm")
      ->check(CLI::PositiveNumber);
  compare->add_option("--uct-c", uct_c,
                      "UCB1 exploration constant for the sampling baselines "
                      "(scale it to the scenario's customer-hour returns)");
  compare->add_option("--seed", seed_base, "base seed")->envname("GRIDCREW_SEED");
  compare->add_option("--episode-log", episode_log, "JSON-lines episode log path");

  CLI::App* gen = app.add_subcommand("gen-scenario", "generate a synthetic scenario");
  gen->add_option("--out", gen_out, "output scenario path")->required();
  gen->add_option("--name", gcfg.name, "scenario name");
  gen->add_option("--nodes", gcfg.nodes, "road nodes")->check(CLI::PositiveNumber);
  gen->add_option("--segments", gcfg.segments, "protection segments")
      ->check(CLI::PositiveNumber);
  gen->add_option("--customers", gcfg.customer_nodes, "customer nodes")
      ->check(CLI::PositiveNumber);
  gen->add_option("--zones", gcfg.zones, "crew zones (one vehicle each)")
      ->check(CLI::PositiveNumber);
  gen->add_option("--rho", gcfg.rho, "per-customer call probability")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--threshold", gcfg.threshold, "termination threshold")
      ->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", gcfg.seed, "generator seed");

  CLI::App* validate = app.add_subcommand("validate-scenario", "parse and validate a scenario");
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage and config problems share one exit code; --help stays 0.
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) {
      std::vector<int> hidden = parse_int_list(hidden_text);
      if (hidden.empty()) throw std::runtime_error("--hidden needs at least one layer");
      return cmd_train(common, cases_path, out_dir, tcfg, hidden, activation, lr, l2,
                       max_decisions);
    }
    if (evaluate->parsed())
      return cmd_evaluate(common, cases_path, ckpt_path, out_dir, sims, seeds, seed_base,
                          episode_log);
    if (compare->parsed())
      return cmd_compare(common, cases_path, ckpt_path, out_dir, algorithms, seeds, seed_base,
                         episode_log, uct_c);
    if (gen->parsed()) return cmd_gen(gcfg, gen_out);
    if (validate->parsed()) return cmd_validate(common);
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace gridcrew
