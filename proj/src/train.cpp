#include "gridcrew/train.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "gridcrew/mcts.hpp"

namespace gridcrew {

std::vector<EvalCase> load_cases(const std::string& path, const DistributionGrid& grid) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open case file '" + path + "'");
  std::vector<EvalCase> cases;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> toks;
    std::string t;
    while (ls >> t) toks.push_back(t);
    if (toks.empty()) continue;
    auto fail = [&](const std::string& msg) {
      throw ScenarioError(path + ":" + std::to_string(line_no) + ": " + msg);
    };
    if (toks[0] != "case" || toks.size() < 4) fail("rows are: case <id> lines <...> calls <...>");
    EvalCase ec;
    ec.id = toks[1];
    size_t i = 2;
    if (toks[i] != "lines") fail("expected 'lines'");
    for (++i; i < toks.size() && toks[i] != "calls"; ++i)
      ec.damage_lines.push_back(grid.line_index(toks[i]));
    if (i >= toks.size()) fail("expected 'calls'");
    for (++i; i < toks.size(); ++i) {
      if (toks[i] == "none") continue;
      int node = -1;
      try {
        node = std::stoi(toks[i]);
      } catch (const std::exception&) {
        fail("expected a customer node id, got '" + toks[i] + "'");
      }
      int found = -1;
      for (int c = 0; c < static_cast<int>(grid.customers.size()); ++c)
        if (grid.customers[c].node == node) found = c;
      if (found < 0) fail("node " + std::to_string(node) + " has no customers");
      ec.called_customers.push_back(found);
    }
    // The case must be a possible world: all calls explained by the damage.
    for (int c = 0; c < static_cast<int>(grid.circuits.size()); ++c) {
      std::vector<int> dark = grid.affected_nodes(c, ec.damage_lines);
      for (int ci : ec.called_customers) {
        if (grid.customers[ci].circuit != c) continue;
        if (!std::binary_search(dark.begin(), dark.end(), grid.customers[ci].node))
          fail("case " + ec.id + ": node " + std::to_string(grid.customers[ci].node) +
               " calls but stays energized");
      }
    }
    cases.push_back(std::move(ec));
  }
  if (cases.empty()) throw ScenarioError(path + ": no cases found");
  return cases;
}

Scenario scenario_for_case(const Scenario& base, const EvalCase& ec) {
  Scenario sc = base;
  sc.damage = ec.damage_lines;
  sc.calls = ec.called_customers;
  return sc;
}

NetConfig make_net_config(const FaultModel& model) {
  NetConfig cfg;
  cfg.input_dim = 1 + model.num_units();
  cfg.policy_dim = model.max_actions();
  cfg.z_scale = default_z_scale(model);
  return cfg;
}

namespace {

Eigen::VectorXd slot_policy(const Eigen::VectorXd& pi, int policy_dim) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(policy_dim);
  out.head(pi.size()) = pi;
  return out;
}

}  // namespace

SelfPlayResult self_play_episode(const FaultModel& model, const Scenario& scenario,
                                 const EnvConfig& env_cfg, const NetConfig& net_cfg,
                                 const Params& params, const TrainConfig& cfg,
                                 std::uint64_t episode_seed) {
  const Evaluator evaluator = make_net_evaluator(model, net_cfg, params);
  EnvState state = reset(model, scenario, env_cfg, episode_seed);
  Rng rng(Rng::derive(episode_seed, 0xAC7));

  SelfPlayResult out;
  while (!state.terminal) {
    SearchConfig scfg;
    scfg.simulations = cfg.simulations;
    scfg.c_puct = cfg.c_puct;
    scfg.gamma = cfg.gamma;
    scfg.tau = cfg.tau.at(state.decisions);
    scfg.seed = Rng::derive(episode_seed, 0x5E000 + state.decisions);
    scfg.root_noise = cfg.root_noise;
    SearchResult res = search(model, env_cfg, state, evaluator, scfg);

    Sample s;
    s.x = encode_state(model, state);
    s.pi = slot_policy(res.pi, net_cfg.policy_dim);
    s.z = res.value_target / net_cfg.z_scale;
    s.legal_count = static_cast<int>(res.actions.size());
    out.samples.push_back(std::move(s));

    const int choice = rng.categorical(res.pi);
    const RoutingAction action{next_to_dispatch(state), res.actions[choice]};
    state = step(model, env_cfg, state, action).state;
  }
  out.outage_hours = episode_outage_hours(model, state);
  out.decisions = state.decisions;
  out.truncated = state.truncated;
  return out;
}

double evaluate_case(const FaultModel& model, const Scenario& base, const EvalCase& ec,
                     const EnvConfig& env_cfg, const NetConfig& net_cfg, const Params& params,
                     int simulations, std::uint64_t seed) {
  const Evaluator evaluator = make_net_evaluator(model, net_cfg, params);
  const Scenario sc = scenario_for_case(base, ec);
  EnvState state = reset(model, sc, env_cfg, seed);
  while (!state.terminal) {
    SearchConfig scfg;
    scfg.simulations = simulations;
    scfg.tau = 1e-4;  // evaluation plays the most visited action
    scfg.seed = Rng::derive(seed, 0xEA10 + state.decisions);
    SearchResult res = search(model, env_cfg, state, evaluator, scfg);
    const RoutingAction action{next_to_dispatch(state), most_visited_action(res)};
    state = step(model, env_cfg, state, action).state;
  }
  return episode_outage_hours(model, state);
}

double evaluate_suite(const FaultModel& model, const Scenario& base,
                      const std::vector<EvalCase>& cases, const EnvConfig& env_cfg,
                      const NetConfig& net_cfg, const Params& params, int simulations,
                      std::uint64_t seed) {
  double total = 0.0;
  for (size_t i = 0; i < cases.size(); ++i)
    total += evaluate_case(model, base, cases[i], env_cfg, net_cfg, params, simulations,
                           Rng::derive(seed, 0xCA5E + i));
  return total / static_cast<double>(cases.size());
}

TrainOutput train_loop(const FaultModel& model, const Scenario& scenario,
                       const std::vector<EvalCase>& cases, const EnvConfig& env_cfg,
                       NetConfig net_cfg, const TrainConfig& cfg,
                       const std::function<void(const MetricsRow&)>& on_row) {
  if (net_cfg.input_dim == 0) {
    const NetConfig defaults = make_net_config(model);
    net_cfg.input_dim = defaults.input_dim;
    net_cfg.policy_dim = defaults.policy_dim;
    if (net_cfg.z_scale <= 0.0 || net_cfg.z_scale == 1.0) net_cfg.z_scale = defaults.z_scale;
  }
  net_cfg.seed = net_cfg.seed ? net_cfg.seed : cfg.seed;

  TrainOutput out;
  out.checkpoint.config = net_cfg;
  out.checkpoint.params = init_params(net_cfg);
  out.checkpoint.opt = init_opt(out.checkpoint.params);

  ReplayBuffer buffer(cfg.buffer_capacity);
  Rng train_rng(Rng::derive(cfg.seed, 0x7EA1));
  const auto t0 = std::chrono::steady_clock::now();

  LossParts acc;
  int acc_steps = 0;
  auto take_row = [&](int episodes_done) {
    MetricsRow row;
    row.episode = episodes_done;
    row.eval_outage_hours =
        evaluate_suite(model, scenario, cases, env_cfg, net_cfg, out.checkpoint.params,
                       cfg.simulations, Rng::derive(cfg.seed, 0xE7A1));
    if (acc_steps > 0) {
      row.value_loss = acc.value / acc_steps;
      row.policy_loss = acc.policy / acc_steps;
      row.l2_loss = acc.l2 / acc_steps;
    }
    row.buffer_size = buffer.size();
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    acc = LossParts{};
    acc_steps = 0;
    out.metrics.push_back(row);
    if (on_row) on_row(row);
  };

  take_row(0);
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    SelfPlayResult sp = self_play_episode(model, scenario, env_cfg, net_cfg,
                                          out.checkpoint.params, cfg,
                                          Rng::derive(cfg.seed, 0xE9 + ep));
    for (Sample& s : sp.samples) buffer.push(std::move(s));
    if (buffer.size() >= static_cast<std::size_t>(cfg.batch_size)) {
      for (int k = 0; k < cfg.steps_per_episode; ++k) {
        const std::vector<Sample> batch =
            buffer.sample(static_cast<std::size_t>(cfg.batch_size), train_rng);
        const LossParts loss =
            train_step(net_cfg, out.checkpoint.params, out.checkpoint.opt, batch);
        acc.value += loss.value;
        acc.policy += loss.policy;
        acc.l2 += loss.l2;
        ++acc_steps;
      }
    }
    out.checkpoint.episodes_trained += 1;
    const bool last = ep + 1 == cfg.episodes;
    if (last || (cfg.eval_every > 0 && (ep + 1) % cfg.eval_every == 0)) take_row(ep + 1);
  }
  return out;
}

}  // namespace gridcrew
