#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gridcrew/env.hpp"
#include "gridcrew/net.hpp"

namespace gridcrew {

// Visit-count temperature schedule: exploratory early in the episode, nearly
// deterministic afterwards.
struct TauSchedule {
  double high = 1.0;
  double low = 1e-2;
  int high_decisions = 10;
  double at(int decision) const { return decision < high_decisions ? high : low; }
};

struct TrainConfig {
  int episodes = 2000;
  int simulations = 30;
  double c_puct = 1.25;
  double gamma = 1.0;
  TauSchedule tau;
  std::size_t buffer_capacity = 20000;
  int batch_size = 32;
  int steps_per_episode = 8;
  int eval_every = 100;        // evaluation cadence in episodes; 0 = ends only
  std::uint64_t seed = 1;
  bool root_noise = false;
};

// A benchmark episode: fixed damage and fixed calls.
struct EvalCase {
  std::string id;
  std::vector<int> damage_lines;      // line indices
  std::vector<int> called_customers;  // customer-group indices
};

// Parses the case-suite text format (see docs/cases_format.md) and checks
// each case's calls are explainable by its damage.
std::vector<EvalCase> load_cases(const std::string& path, const DistributionGrid& grid);

// The scenario with one case's initial conditions substituted in.
Scenario scenario_for_case(const Scenario& base, const EvalCase& ec);

struct SelfPlayResult {
  std::vector<Sample> samples;   // z already divided by the net's z_scale
  double outage_hours = 0.0;
  int decisions = 0;
  bool truncated = false;
};

// Plays one episode against the real environment with search guidance,
// sampling actions from the tempered visit counts, and collects one training
// sample per decision (value target: best visited root Q).
SelfPlayResult self_play_episode(const FaultModel& model, const Scenario& scenario,
                                 const EnvConfig& env_cfg, const NetConfig& net_cfg,
                                 const Params& params, const TrainConfig& cfg,
                                 std::uint64_t episode_seed);

// Runs one benchmark case to termination, choosing the most visited action at
// every decision; returns realized customer-hours.
double evaluate_case(const FaultModel& model, const Scenario& base, const EvalCase& ec,
                     const EnvConfig& env_cfg, const NetConfig& net_cfg, const Params& params,
                     int simulations, std::uint64_t seed);

// Mean of evaluate_case over the suite.
double evaluate_suite(const FaultModel& model, const Scenario& base,
                      const std::vector<EvalCase>& cases, const EnvConfig& env_cfg,
                      const NetConfig& net_cfg, const Params& params, int simulations,
                      std::uint64_t seed);

struct MetricsRow {
  int episode = 0;               // episodes completed when the row was taken
  double eval_outage_hours = 0.0;
  double value_loss = 0.0;       // means since the previous row
  double policy_loss = 0.0;
  double l2_loss = 0.0;
  std::size_t buffer_size = 0;
  double wall_s = 0.0;           // cumulative
};

struct TrainOutput {
  Checkpoint checkpoint;
  std::vector<MetricsRow> metrics;
};

// Self-play training: fills a replay ring, takes steps_per_episode RMSprop
// steps per episode once a batch is available, and evaluates on the case
// suite every eval_every episodes (plus before and after training).
// `on_row` (optional) observes each metrics row as it is produced.
TrainOutput train_loop(const FaultModel& model, const Scenario& scenario,
                       const std::vector<EvalCase>& cases, const EnvConfig& env_cfg,
                       NetConfig net_cfg, const TrainConfig& cfg,
                       const std::function<void(const MetricsRow&)>& on_row = {});

// Fills the input/policy dimensions and z_scale from the model. The caller
// sets hidden sizes, learning rate and the rest.
NetConfig make_net_config(const FaultModel& model);

}  // namespace gridcrew
