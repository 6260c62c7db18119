#include "gridcrew/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "gridcrew/rng.hpp"

namespace gridcrew {

Evaluator uniform_evaluator() {
  return [](const EnvState&, const std::vector<int>& legal) {
    PolicyValue pv;
    const int k = static_cast<int>(legal.size());
    pv.prior = Eigen::VectorXd::Constant(k, k > 0 ? 1.0 / k : 0.0);
    pv.value = 0.0;
    return pv;
  };
}

int select_edge(const std::vector<EdgeStats>& edges, const MinMaxStats& minmax, double c_puct) {
  int total = 0;
  for (const EdgeStats& e : edges) total += e.n;
  const double sqrt_total = total > 0 ? std::sqrt(static_cast<double>(total)) : 1.0;
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
    const EdgeStats& e = edges[i];
    const double q_norm = e.n > 0 ? minmax.normalize(e.q) : 0.0;
    const double score = q_norm + c_puct * e.prior * sqrt_total / (1.0 + e.n);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  if (best < 0) throw std::logic_error("selection over a node with no edges");
  return best;
}

Eigen::VectorXd visit_policy(const Eigen::VectorXi& visits, double tau) {
  const int k = static_cast<int>(visits.size());
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(k);
  if (k == 0) return pi;
  const int n_max = visits.maxCoeff();
  if (n_max <= 0) {
    pi.setConstant(1.0 / k);
    return pi;
  }
  if (tau < 1e-3) {
    for (int i = 0; i < k; ++i)
      if (visits[i] == n_max) {
        pi[i] = 1.0;
        return pi;
      }
  }
  // Weights are scaled by the max count before exponentiation so large 1/tau
  // cannot overflow.
  for (int i = 0; i < k; ++i)
    pi[i] = visits[i] > 0
                ? std::pow(static_cast<double>(visits[i]) / n_max, 1.0 / tau)
                : 0.0;
  pi /= pi.sum();
  return pi;
}

namespace {

void expand(const FaultModel& model, const Evaluator& evaluator, DecisionNode* node,
            double* leaf_value) {
  const std::vector<int> legal = legal_destinations(model, node->state);
  if (legal.empty()) throw std::logic_error("non-terminal state with no legal destination");
  PolicyValue pv = evaluator(node->state, legal);
  if (pv.prior.size() != static_cast<Eigen::Index>(legal.size()))
    throw std::logic_error("evaluator prior size does not match the legal actions");
  double sum = 0.0;
  for (int i = 0; i < pv.prior.size(); ++i) sum += std::max(pv.prior[i], 0.0);
  node->edges.clear();
  node->edges.reserve(legal.size());
  for (size_t i = 0; i < legal.size(); ++i) {
    EdgeStats e;
    e.dest = legal[i];
    e.prior = sum > 0.0 ? std::max(pv.prior[i], 0.0) / sum : 1.0 / legal.size();
    node->edges.push_back(std::move(e));
  }
  node->expanded = true;
  *leaf_value = pv.value;
}

std::uint64_t outcome_key(const std::vector<std::uint8_t>& damaged) {
  std::uint64_t key = 0;
  for (size_t i = 0; i < damaged.size(); ++i)
    if (damaged[i]) key |= 1ULL << i;
  return key;
}

// Hypothetical branches never look at the ground truth; scrub it so a bug
// could not either.
void scrub_truth(EnvState* s) {
  std::fill(s->unit_damaged0.begin(), s->unit_damaged0.end(), 0);
  s->damaged_lines0.clear();
  s->log.clear();
}

}  // namespace

SearchResult search(const FaultModel& model, const EnvConfig& env_cfg, const EnvState& root_state,
                    const Evaluator& evaluator, const SearchConfig& cfg) {
  if (root_state.terminal) throw std::logic_error("search from a terminal state");
  if (cfg.simulations < 1) throw std::invalid_argument("search needs at least one simulation");

  Rng rng(Rng::derive(cfg.seed, 0x5EA4C4));

  auto root = std::make_shared<DecisionNode>();
  root->state = root_state;
  scrub_truth(&root->state);
  double root_value = 0.0;
  expand(model, evaluator, root.get(), &root_value);

  if (cfg.root_noise) {
    std::gamma_distribution<double> gamma_draw(cfg.dirichlet_alpha, 1.0);
    Eigen::VectorXd noise(root->edges.size());
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise[i] = gamma_draw(rng.engine());
    const double total = noise.sum();
    if (total > 0.0) {
      noise /= total;
      for (size_t i = 0; i < root->edges.size(); ++i)
        root->edges[i].prior =
            (1.0 - cfg.noise_frac) * root->edges[i].prior + cfg.noise_frac * noise[i];
    }
  }

  MinMaxStats minmax;
  struct PathStep {
    DecisionNode* node;
    int edge;
  };

  for (int sim = 0; sim < cfg.simulations; ++sim) {
    DecisionNode* node = root.get();
    std::vector<PathStep> path;
    double leaf_value = 0.0;
    while (true) {
      if (node->state.terminal) {
        leaf_value = 0.0;
        break;
      }
      const int ei = select_edge(node->edges, minmax, cfg.c_puct);
      EdgeStats& edge = node->edges[ei];
      const int vehicle = next_to_dispatch(node->state);
      const int from = node->state.vehicles[vehicle].position;
      if (!edge.reward_set) {
        edge.reward = expected_reward(model, node->state.belief, from, edge.dest);
        edge.reward_set = true;
      }
      const std::vector<int> units = model.units_on_edge(from, edge.dest);
      std::vector<std::uint8_t> outcome(units.size(), 0);
      for (size_t i = 0; i < units.size(); ++i) {
        const double p = std::clamp(node->state.belief.posterior[units[i]], 0.0, 1.0);
        outcome[i] = rng.bernoulli(p) ? 1 : 0;
      }
      path.push_back({node, ei});
      ChanceChild& child = edge.children[outcome_key(outcome)];
      ++child.count;
      if (!child.node) {
        StepResult sr = step_with_outcome(model, env_cfg, node->state,
                                          {vehicle, edge.dest}, outcome);
        child.node = std::make_unique<DecisionNode>();
        child.node->state = std::move(sr.state);
        child.node->state.log.clear();
        if (child.node->state.terminal)
          leaf_value = 0.0;
        else
          expand(model, evaluator, child.node.get(), &leaf_value);
        break;
      }
      node = child.node.get();
    }
    double g = leaf_value;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      EdgeStats& edge = it->node->edges[it->edge];
      g = edge.reward + cfg.gamma * g;
      edge.n += 1;
      edge.w += g;
      edge.q = edge.w / edge.n;
      minmax.update(edge.q);
    }
  }

  SearchResult res;
  const int k = static_cast<int>(root->edges.size());
  res.actions.resize(k);
  res.visits = Eigen::VectorXi::Zero(k);
  res.q = Eigen::VectorXd::Zero(k);
  bool any = false;
  for (int i = 0; i < k; ++i) {
    res.actions[i] = root->edges[i].dest;
    res.visits[i] = root->edges[i].n;
    res.q[i] = root->edges[i].q;
    if (root->edges[i].n > 0) {
      res.value_target = any ? std::max(res.value_target, root->edges[i].q) : root->edges[i].q;
      any = true;
    }
  }
  res.pi = visit_policy(res.visits, cfg.tau);
  res.root = std::move(root);
  return res;
}

int most_visited_action(const SearchResult& result) {
  int best = -1, best_n = -1;
  for (size_t i = 0; i < result.actions.size(); ++i)
    if (result.visits[static_cast<int>(i)] > best_n) {
      best_n = result.visits[static_cast<int>(i)];
      best = result.actions[i];
    }
  if (best < 0) throw std::logic_error("empty search result");
  return best;
}

}  // namespace gridcrew
