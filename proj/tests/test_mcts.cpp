#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gridcrew/mcts.hpp>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace gridcrew;

namespace {

// Guidance that pushes every simulation toward the highest destination id
// (the "forward" move on chain fixtures) and reports a fixed leaf value.
Evaluator forward_evaluator(double leaf_value) {
  return [leaf_value](const EnvState&, const std::vector<int>& legal) {
    PolicyValue pv;
    pv.prior = Eigen::VectorXd::Zero(legal.size());
    pv.prior[legal.size() - 1] = 1.0;
    pv.value = leaf_value;
    return pv;
  };
}

// Walks the expanded tree checking the bookkeeping invariants everywhere.
void check_tree(const DecisionNode& node, int* nodes_seen) {
  ++*nodes_seen;
  for (const EdgeStats& e : node.edges) {
    int child_total = 0;
    for (const auto& [key, child] : e.children) {
      (void)key;
      child_total += child.count;
      if (child.node) check_tree(*child.node, nodes_seen);
    }
    CHECK(child_total == e.n);
    if (e.n > 0) CHECK(e.q == doctest::Approx(e.w / e.n).epsilon(1e-12));
    else CHECK(e.q == 0.0);
  }
}

}  // namespace

TEST_CASE("puct selection balances value and prior") {
  // Two edges: visited one with normalized value 1, fresh one with equal
  // prior. Hand-evaluated scores: 1.1797 vs 1.9764, exploration wins.
  std::vector<EdgeStats> edges(2);
  edges[0].dest = 1;
  edges[0].prior = 0.5;
  edges[0].n = 10;
  edges[0].w = 20.0;
  edges[0].q = 2.0;
  edges[1].dest = 2;
  edges[1].prior = 0.5;
  MinMaxStats mm;
  mm.update(-5.0);
  mm.update(2.0);
  REQUIRE(mm.normalize(2.0) == doctest::Approx(1.0));

  CHECK(select_edge(edges, mm, 1.25) == 1);

  // Score arithmetic, spelled out.
  const double sqrt_total = std::sqrt(10.0);
  const double s0 = 1.0 + 1.25 * 0.5 * sqrt_total / 11.0;
  const double s1 = 0.0 + 1.25 * 0.5 * sqrt_total / 1.0;
  CHECK(s0 == doctest::Approx(1.1797).epsilon(1e-4));
  CHECK(s1 == doctest::Approx(1.9764).epsilon(1e-4));
}

TEST_CASE("puct edge cases") {
  SUBCASE("unvisited node uses sqrt(total)=1 and ties go to the first edge") {
    std::vector<EdgeStats> edges(3);
    for (int i = 0; i < 3; ++i) {
      edges[i].dest = i + 1;
      edges[i].prior = 1.0 / 3.0;
    }
    MinMaxStats mm;
    CHECK(select_edge(edges, mm, 1.25) == 0);
  }
  SUBCASE("degenerate value range reads 0.5") {
    MinMaxStats mm;
    mm.update(-3.0);
    CHECK(mm.normalize(-3.0) == 0.5);
    CHECK(mm.normalize(42.0) == 0.5);
    mm.update(1.0);
    CHECK(mm.normalize(-3.0) == 0.0);
    CHECK(mm.normalize(1.0) == 1.0);
    CHECK(mm.normalize(-7.0) == 0.0);  // clamped below the seen range
  }
  SUBCASE("zero-prior edge loses until values force it") {
    std::vector<EdgeStats> edges(2);
    edges[0].dest = 1;
    edges[0].prior = 0.0;
    edges[1].dest = 2;
    edges[1].prior = 1.0;
    MinMaxStats mm;
    CHECK(select_edge(edges, mm, 1.25) == 1);
  }
}

TEST_CASE("visit policy temperatures") {
  Eigen::VectorXi visits(2);
  visits << 3, 1;
  Eigen::VectorXd pi1 = visit_policy(visits, 1.0);
  CHECK(pi1[0] == doctest::Approx(0.75));
  CHECK(pi1[1] == doctest::Approx(0.25));

  Eigen::VectorXd pi_half = visit_policy(visits, 0.5);
  CHECK(pi_half[0] == doctest::Approx(0.9));
  CHECK(pi_half[1] == doctest::Approx(0.1));

  Eigen::VectorXd pi_cold = visit_policy(visits, 1e-4);
  CHECK(pi_cold[0] == 1.0);
  CHECK(pi_cold[1] == 0.0);

  // Huge 1/tau stays finite thanks to the max scaling.
  Eigen::VectorXi big(2);
  big << 1000000, 999999;
  Eigen::VectorXd pi_big = visit_policy(big, 2e-3);
  CHECK(std::isfinite(pi_big[0]));
  CHECK(pi_big.sum() == doctest::Approx(1.0));

  Eigen::VectorXi zeros = Eigen::VectorXi::Zero(4);
  Eigen::VectorXd uniform = visit_policy(zeros, 1.0);
  for (int i = 0; i < 4; ++i) CHECK(uniform[i] == doctest::Approx(0.25));

  Eigen::VectorXi tied(3);
  tied << 5, 5, 2;
  Eigen::VectorXd cold_tie = visit_policy(tied, 1e-9);
  CHECK(cold_tie[0] == 1.0);  // lowest destination wins the tie
  CHECK(cold_tie[1] == 0.0);
}

TEST_CASE("discounted backup includes the edge's own reward") {
  // Four-line chain, single segment, customer of 6 behind everything. Lines
  // 1-3 cannot be damaged; line 4 surely is (its node called, nothing else
  // explains it). Travel times 10/20/30 make the per-step rewards -1/-2/-3
  // customer-hours while the far fault stays unresolved.
  Scenario sc = testfix::make_chain({0.0, 0.0, 0.0, 0.5}, {0, 0, 0, 0}, {4}, {6}, 0.4, 0.02,
                                    {60.0, 60.0, 60.0, 60.0}, {10.0, 20.0, 30.0, 40.0});
  sc.damage = std::vector<int>{3};
  sc.calls = std::vector<int>{0};
  FaultModel model(sc.grid, UnitGranularity::Line);
  EnvConfig cfg = make_env_config(sc);
  EnvState s0 = reset(model, sc, cfg, 1);
  REQUIRE(!s0.terminal);
  REQUIRE(s0.belief.posterior[3] == doctest::Approx(1.0));
  REQUIRE(s0.belief.posterior[0] == 0.0);

  SearchConfig scfg;
  scfg.simulations = 3;
  scfg.gamma = 0.99;
  scfg.seed = 7;
  SearchResult res = search(model, cfg, s0, forward_evaluator(-4.0), scfg);

  REQUIRE(res.actions == std::vector<int>{1});
  CHECK(res.visits[0] == 3);
  // Hand-rolled: G3 = -1 + .99(-2 + .99(-3 + .99*(-4))) applies on the third
  // pass; the root mean over the three passes is -7.220632.
  const double g1 = -1.0 + 0.99 * -4.0;
  const double g2 = -1.0 + 0.99 * (-2.0 + 0.99 * -4.0);
  const double g3 = -1.0 + 0.99 * (-2.0 + 0.99 * (-3.0 + 0.99 * -4.0));
  CHECK(g3 == doctest::Approx(-9.801496).epsilon(1e-9));
  CHECK(res.q[0] == doctest::Approx((g1 + g2 + g3) / 3.0).epsilon(1e-9));
  CHECK(res.value_target == doctest::Approx(res.q[0]));

  // Down the single chance branch: the second-level edge saw two passes.
  const DecisionNode& root = *res.root;
  REQUIRE(root.edges.size() == 1);
  REQUIRE(root.edges[0].children.size() == 1);
  const DecisionNode& n1 = *root.edges[0].children.begin()->second.node;
  const EdgeStats* fwd = nullptr;
  for (const auto& e : n1.edges)
    if (e.dest == 2) fwd = &e;
  REQUIRE(fwd != nullptr);
  CHECK(fwd->n == 2);
  const double h1 = -2.0 + 0.99 * -4.0;
  const double h2 = -2.0 + 0.99 * (-3.0 + 0.99 * -4.0);
  CHECK(fwd->q == doctest::Approx((h1 + h2) / 2.0).epsilon(1e-9));
}

TEST_CASE("terminal chance children back up zero future value") {
  Scenario sc = testfix::make_chain({0.5}, {0}, {1}, {6}, 0.4, 0.02, {60.0}, {10.0});
  sc.damage = std::vector<int>{0};
  sc.calls = std::vector<int>{0};
  FaultModel model(sc.grid, UnitGranularity::Line);
  EnvConfig cfg = make_env_config(sc);
  EnvState s0 = reset(model, sc, cfg, 1);
  REQUIRE(s0.belief.posterior[0] == doctest::Approx(1.0));

  SearchConfig scfg;
  scfg.simulations = 2;
  scfg.gamma = 0.99;
  SearchResult res = search(model, cfg, s0, uniform_evaluator(), scfg);
  // Outcome is surely "damaged"; repair ends the mission, so each pass backs
  // up exactly the one-step reward: -(6 customers) * (10 + 60)/60 = -7.
  CHECK(res.visits[0] == 2);
  CHECK(res.q[0] == doctest::Approx(-7.0).epsilon(1e-12));
  CHECK(res.value_target == doctest::Approx(-7.0));
}

TEST_CASE("value target ignores unvisited edges") {
  // Crew parked mid-chain: two destinations, the forward prior keeps the
  // backward edge unvisited, whose raw q of zero must not leak into the
  // value target.
  Scenario sc = testfix::make_chain({0.0, 0.5}, {0, 0}, {2}, {6}, 0.4, 0.02,
                                    {60.0, 60.0}, {10.0, 10.0});
  sc.damage = std::vector<int>{1};
  sc.calls = std::vector<int>{0};
  sc.grid.vehicles[0].depot = 1;  // start between the two lines
  FaultModel model(sc.grid, UnitGranularity::Line);
  EnvConfig cfg = make_env_config(sc);
  EnvState s0 = reset(model, sc, cfg, 1);
  REQUIRE(!s0.terminal);

  SearchConfig scfg;
  scfg.simulations = 2;
  SearchResult res = search(model, cfg, s0, forward_evaluator(0.0), scfg);
  REQUIRE(res.actions == std::vector<int>{0, 2});
  CHECK(res.visits[0] == 0);
  CHECK(res.visits[1] == 2);
  CHECK(res.q[1] < 0.0);
  CHECK(res.value_target == doctest::Approx(res.q[1]));
  CHECK(res.value_target < 0.0);
}

TEST_CASE("search never touches the hidden truth") {
  Scenario sc = testfix::make_chain({0.3, 0.4}, {0, 0}, {2}, {8}, 0.4, 0.02);
  sc.damage = std::vector<int>{0, 1};
  sc.calls = std::vector<int>{0};
  FaultModel model(sc.grid, UnitGranularity::Line);
  EnvConfig cfg = make_env_config(sc);
  EnvState s0 = reset(model, sc, cfg, 2);
  REQUIRE(!s0.terminal);

  SearchConfig scfg;
  scfg.simulations = 16;
  SearchResult res = search(model, cfg, s0, uniform_evaluator(), scfg);
  for (std::uint8_t d : res.root->state.unit_damaged0) CHECK(d == 0);
  CHECK(res.root->state.damaged_lines0.empty());
  CHECK(res.root->state.log.empty());
  // The real state is untouched.
  CHECK(s0.unit_damaged0[0] == 1);
  CHECK(s0.log.empty());
}

TEST_CASE("bookkeeping invariants hold over random fixtures") {
  std::mt19937_64 gen(555);
  std::uniform_real_distribution<double> up(0.1, 0.5);
  int tested = 0;
  for (int trial = 0; trial < 30 && tested < 20; ++trial) {
    Scenario sc;
    if (trial % 2 == 0)
      sc = testfix::make_chain({up(gen), up(gen), up(gen)}, {0, 0, 1}, {2, 3}, {5, 7},
                               0.35, 0.02);
    else
      sc = testfix::make_star({up(gen), up(gen), up(gen)}, {4, 6, 8}, 0.35, 0.02);
    FaultModel model(sc.grid, UnitGranularity::Line);
    EnvConfig cfg = make_env_config(sc);
    EnvState s0 = reset(model, sc, cfg, 9000 + trial);
    if (s0.terminal) continue;

    SearchConfig scfg;
    scfg.simulations = 1 + static_cast<int>(gen() % 64);
    scfg.seed = trial;
    scfg.tau = 0.8;
    SearchResult res = search(model, cfg, s0, uniform_evaluator(), scfg);

    CHECK(res.visits.sum() == scfg.simulations);
    CHECK(res.pi.sum() == doctest::Approx(1.0).epsilon(1e-9));
    int nodes_seen = 0;
    check_tree(*res.root, &nodes_seen);
    CHECK(nodes_seen >= 1);

    // tau -> 0 snaps to the most visited action.
    Eigen::VectorXd cold = visit_policy(res.visits, 1e-6);
    int arg = 0;
    cold.maxCoeff(&arg);
    CHECK(res.actions[arg] == most_visited_action(res));
    ++tested;
  }
  CHECK(tested >= 15);
}

TEST_CASE("search is deterministic in its seed") {
  Scenario sc = testfix::make_star({0.3, 0.3, 0.3}, {5, 5, 5}, 0.4, 0.02);
  sc.damage = std::vector<int>{0};
  sc.calls = std::vector<int>{0};
  FaultModel model(sc.grid, UnitGranularity::Line);
  EnvConfig cfg = make_env_config(sc);
  EnvState s0 = reset(model, sc, cfg, 3);
  REQUIRE(!s0.terminal);

  SearchConfig scfg;
  scfg.simulations = 40;
  scfg.seed = 123;
  SearchResult a = search(model, cfg, s0, uniform_evaluator(), scfg);
  SearchResult b = search(model, cfg, s0, uniform_evaluator(), scfg);
  CHECK(a.visits == b.visits);
  CHECK((a.pi - b.pi).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.value_target == b.value_target);
}

TEST_CASE("root noise perturbs the prior but keeps it a distribution") {
  Scenario sc = testfix::make_star({0.3, 0.3, 0.3}, {5, 5, 5}, 0.4, 0.02);
  sc.damage = std::vector<int>{0};
  sc.calls = std::vector<int>{0};
  FaultModel model(sc.grid, UnitGranularity::Line);
  EnvConfig cfg = make_env_config(sc);
  EnvState s0 = reset(model, sc, cfg, 3);

  SearchConfig plain;
  plain.simulations = 8;
  plain.seed = 5;
  SearchConfig noisy = plain;
  noisy.root_noise = true;
  SearchResult a = search(model, cfg, s0, uniform_evaluator(), plain);
  SearchResult b = search(model, cfg, s0, uniform_evaluator(), noisy);

  double sum = 0.0;
  bool differs = false;
  for (size_t i = 0; i < b.root->edges.size(); ++i) {
    sum += b.root->edges[i].prior;
    differs = differs || std::abs(b.root->edges[i].prior - a.root->edges[i].prior) > 1e-9;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(differs);

  SearchResult b2 = search(model, cfg, s0, uniform_evaluator(), noisy);
  for (size_t i = 0; i < b.root->edges.size(); ++i)
    CHECK(b.root->edges[i].prior == doctest::Approx(b2.root->edges[i].prior).epsilon(1e-15));
}

TEST_CASE("search rejects terminal roots and zero budgets") {
  Scenario sc = testfix::make_chain({0.001}, {0}, {1}, {5}, 0.3, 0.02);
  sc.damage = std::vector<int>{};
  sc.calls = std::vector<int>{};
  FaultModel model(sc.grid, UnitGranularity::Line);
  EnvConfig cfg = make_env_config(sc);
  EnvState s0 = reset(model, sc, cfg, 1);
  REQUIRE(s0.terminal);
  SearchConfig scfg;
  CHECK_THROWS_AS((void)search(model, cfg, s0, uniform_evaluator(), scfg), std::logic_error);

  Scenario live = testfix::make_chain({0.5}, {0}, {1}, {5}, 0.5, 0.02);
  live.damage = std::vector<int>{0};
  live.calls = std::vector<int>{0};
  EnvState s1 = reset(model, live, cfg, 1);  // same shape, fresh model not needed
  SearchConfig zero;
  zero.simulations = 0;
  FaultModel model_live(live.grid, UnitGranularity::Line);
  CHECK_THROWS_AS((void)search(model_live, cfg, s1, uniform_evaluator(), zero),
                  std::invalid_argument);
}

TEST_CASE("deep search agrees with exact expectimax on a star with fast repairs") {
  // The feeder root (line 1) is certainly faulted and blacks out all 18
  // customers; repairs are quick relative to driving, so fixing it first
  // pays back well inside a three-decision horizon. The depth-3 expectimax
  // optimum and the full-horizon search optimum coincide here.
  Scenario sc = testfix::make_star({0.1, 0.1, 0.1}, {10, 2, 6}, 0.3, 0.02);
  for (auto& ln : sc.grid.lines) ln.repair_minutes = 5.0;
  sc.damage = std::vector<int>{0, 1};
  sc.calls = std::vector<int>{0, 1};
  FaultModel model(sc.grid, UnitGranularity::Line);
  EnvConfig cfg = make_env_config(sc);

  int agreements = 0;
  const int trials = 10;
  for (int t = 0; t < trials; ++t) {
    EnvState s0 = reset(model, sc, cfg, 100 + t);
    REQUIRE(!s0.terminal);
    auto exact = testoracle::expectimax_best(model, cfg, s0, 3);
    CHECK(exact.best_destination == 1);

    SearchConfig scfg;
    scfg.simulations = 400;
    scfg.seed = 1000 + t;
    scfg.tau = 1e-4;
    SearchResult res = search(model, cfg, s0, uniform_evaluator(), scfg);
    if (most_visited_action(res) == exact.best_destination) ++agreements;
  }
  CHECK(agreements >= 9);
}
