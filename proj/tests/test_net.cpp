#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gridcrew/net.hpp>

#include <cmath>
#include <cstdio>
#include <random>

#include "fixtures.hpp"

using namespace gridcrew;

namespace {

NetConfig tiny_config(std::uint64_t seed = 1, Activation act = Activation::Relu) {
  NetConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden = {8, 7};
  cfg.policy_dim = 3;
  cfg.activation = act;
  cfg.l2_coeff = 1e-3;
  cfg.seed = seed;
  return cfg;
}

std::vector<Sample> random_batch(const NetConfig& cfg, std::mt19937_64& gen, int n) {
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  std::uniform_real_distribution<double> uz(-1.5, 1.5);
  std::vector<Sample> batch;
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.x = Eigen::VectorXd::NullaryExpr(cfg.input_dim, [&]() { return ux(gen); });
    s.legal_count = 2 + static_cast<int>(gen() % 2);
    Eigen::VectorXd raw = Eigen::VectorXd::NullaryExpr(s.legal_count, [&]() {
      return std::uniform_real_distribution<double>(0.05, 1.0)(gen);
    });
    s.pi = Eigen::VectorXd::Zero(cfg.policy_dim);
    s.pi.head(s.legal_count) = raw / raw.sum();
    s.z = uz(gen);
    batch.push_back(std::move(s));
  }
  return batch;
}

// All pre-activations comfortably away from the ReLU kink so central
// differences stay on one side of it.
bool clear_of_kinks(const NetConfig& cfg, const Params& p, const std::vector<Sample>& batch,
                    double margin) {
  for (const Sample& s : batch) {
    Eigen::VectorXd h = s.x;
    for (size_t l = 0; l + 1 < p.w.size(); ++l) {
      Eigen::VectorXd pre = p.w[l] * h + p.b[l];
      for (Eigen::Index i = 0; i < pre.size(); ++i) {
        if (std::abs(pre[i]) < margin) return false;
        pre[i] = cfg.activation == Activation::Relu ? std::max(pre[i], 0.0)
                                                    : std::tanh(pre[i]);
      }
      h = std::move(pre);
    }
  }
  return true;
}

double max_relative_gradient_error(const NetConfig& cfg, Params& params,
                                   const std::vector<Sample>& batch) {
  Params grads;
  loss_and_gradients(cfg, params, batch, &grads);
  const double h = 1e-6;
  double worst = 0.0;
  auto probe = [&](double* theta, double analytic) {
    const double saved = *theta;
    *theta = saved + h;
    const double up = loss_and_gradients(cfg, params, batch, nullptr).total();
    *theta = saved - h;
    const double dn = loss_and_gradients(cfg, params, batch, nullptr).total();
    *theta = saved;
    const double numeric = (up - dn) / (2.0 * h);
    const double denom = std::max(1e-6, std::abs(analytic) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  for (size_t l = 0; l < params.w.size(); ++l) {
    for (Eigen::Index r = 0; r < params.w[l].rows(); ++r)
      for (Eigen::Index c = 0; c < params.w[l].cols(); ++c)
        probe(&params.w[l](r, c), grads.w[l](r, c));
    for (Eigen::Index i = 0; i < params.b[l].size(); ++i)
      probe(&params.b[l][i], grads.b[l][i]);
  }
  return worst;
}

}  // namespace

TEST_CASE("init builds the declared shapes deterministically") {
  NetConfig cfg = tiny_config(7);
  Params p = init_params(cfg);
  REQUIRE(p.w.size() == 3);
  CHECK(p.w[0].rows() == 8);
  CHECK(p.w[0].cols() == 6);
  CHECK(p.w[1].rows() == 7);
  CHECK(p.w[2].rows() == 4);  // 3 policy slots + value
  CHECK(p.b[2].size() == 4);
  for (const auto& b : p.b) CHECK(b.cwiseAbs().maxCoeff() == 0.0);

  Params q = init_params(cfg);
  for (size_t l = 0; l < p.w.size(); ++l) CHECK((p.w[l] - q.w[l]).cwiseAbs().maxCoeff() == 0.0);
  cfg.seed = 8;
  Params r = init_params(cfg);
  CHECK((p.w[0] - r.w[0]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("policy head is a masked softmax") {
  Eigen::VectorXd logits(4);
  logits << 1.0, 1.0, 5.0, -2.0;
  Eigen::VectorXd p = policy_head(logits, 2);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
  CHECK(p[2] == 0.0);
  CHECK(p[3] == 0.0);
  Eigen::VectorXd full = policy_head(logits, 4);
  CHECK(full.sum() == doctest::Approx(1.0));
  CHECK(full[2] > full[0]);
  CHECK(policy_head(logits, 0).cwiseAbs().maxCoeff() == 0.0);
  // Large logits stay finite.
  logits << 1000.0, 999.0, 0.0, 0.0;
  Eigen::VectorXd big = policy_head(logits, 2);
  CHECK(std::isfinite(big[0]));
  CHECK(big.sum() == doctest::Approx(1.0));
}

TEST_CASE("loss parts at zero parameters have closed forms") {
  NetConfig cfg = tiny_config();
  cfg.l2_coeff = 0.01;
  Params p = init_params(cfg);
  for (auto& w : p.w) w.setZero();
  for (auto& b : p.b) b.setZero();

  Sample s;
  s.x = Eigen::VectorXd::Ones(cfg.input_dim);
  s.legal_count = 2;
  s.pi = Eigen::VectorXd::Zero(cfg.policy_dim);
  s.pi[0] = 0.25;
  s.pi[1] = 0.75;
  s.z = 0.5;

  LossParts loss = loss_and_gradients(cfg, p, {s}, nullptr);
  CHECK(loss.value == doctest::Approx(0.25));        // (0 - 0.5)^2
  CHECK(loss.policy == doctest::Approx(std::log(2.0)));  // uniform over 2 slots
  CHECK(loss.l2 == 0.0);
  CHECK(loss.total() == doctest::Approx(0.25 + std::log(2.0)));
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 gen(20260819);

  SUBCASE("relu network, kink-cleared draws") {
    int done = 0;
    std::uint64_t seed = 100;
    while (done < 10) {
      NetConfig cfg = tiny_config(seed++, Activation::Relu);
      Params params = init_params(cfg);
      std::vector<Sample> batch = random_batch(cfg, gen, 4);
      if (!clear_of_kinks(cfg, params, batch, 1e-3)) continue;
      CHECK(max_relative_gradient_error(cfg, params, batch) < 1e-4);
      ++done;
    }
  }
  SUBCASE("tanh network, unfiltered draws") {
    for (std::uint64_t seed = 300; seed < 303; ++seed) {
      NetConfig cfg = tiny_config(seed, Activation::Tanh);
      Params params = init_params(cfg);
      std::vector<Sample> batch = random_batch(cfg, gen, 4);
      CHECK(max_relative_gradient_error(cfg, params, batch) < 1e-4);
    }
  }
}

TEST_CASE("rmsprop training drives the loss down on a fixed batch") {
  NetConfig cfg = tiny_config(5);
  cfg.learning_rate = 3e-3;
  cfg.l2_coeff = 0.0;
  Params params = init_params(cfg);
  OptState opt = init_opt(params);
  std::mt19937_64 gen(17);
  std::vector<Sample> batch = random_batch(cfg, gen, 8);

  const double first = loss_and_gradients(cfg, params, batch, nullptr).total();
  for (int i = 0; i < 200; ++i) train_step(cfg, params, opt, batch);
  const double last = loss_and_gradients(cfg, params, batch, nullptr).total();
  CHECK(last < first * 0.5);
}

TEST_CASE("state encoding is the crew position plus the posterior") {
  Scenario sc = testfix::make_two_zone(0.5, 0.5, 10, 20, 0.6, 0.02);
  sc.damage = std::vector<int>{0, 1};
  sc.calls = std::vector<int>{0, 1};
  FaultModel model(sc.grid, UnitGranularity::Line);
  EnvConfig cfg = make_env_config(sc);
  EnvState s = reset(model, sc, cfg, 2);
  REQUIRE(!s.terminal);

  Eigen::VectorXd x = encode_state(model, s);
  REQUIRE(x.size() == 1 + model.num_units());
  CHECK(x[0] == 0.0);  // crew at node index 0 of 3
  CHECK(x[1] == doctest::Approx(s.belief.posterior[0]));
  CHECK(x[2] == doctest::Approx(s.belief.posterior[1]));

  StepResult r = step(model, cfg, s, {0, 1});
  if (!r.state.terminal && next_to_dispatch(r.state) == 1) {
    Eigen::VectorXd x2 = encode_state(model, r.state);
    CHECK(x2[0] == 0.0);  // V2 still parked at node 0
  }
  CHECK(default_z_scale(model) == 30.0);
}

TEST_CASE("network evaluator yields a legal-action prior and a rescaled value") {
  Scenario sc = testfix::make_chain({0.3, 0.4}, {0, 0}, {2}, {12}, 0.4, 0.02);
  sc.damage = std::vector<int>{0};
  sc.calls = std::vector<int>{0};
  FaultModel model(sc.grid, UnitGranularity::Line);
  EnvConfig ecfg = make_env_config(sc);
  EnvState s = reset(model, sc, ecfg, 1);
  REQUIRE(!s.terminal);

  NetConfig cfg;
  cfg.input_dim = 1 + model.num_units();
  cfg.hidden = {4};
  cfg.policy_dim = model.max_actions();
  cfg.z_scale = 120.0;
  Params params = init_params(cfg);
  for (auto& w : params.w) w.setZero();
  for (auto& b : params.b) b.setZero();
  params.b.back()[cfg.policy_dim] = -0.25;  // value slot

  Evaluator eval = make_net_evaluator(model, cfg, params);
  std::vector<int> legal = legal_destinations(model, s);
  PolicyValue pv = eval(s, legal);
  REQUIRE(pv.prior.size() == static_cast<int>(legal.size()));
  CHECK(pv.prior.sum() == doctest::Approx(1.0));
  CHECK(pv.prior.minCoeff() == doctest::Approx(pv.prior.maxCoeff()));  // zero net: uniform
  CHECK(pv.value == doctest::Approx(-0.25 * 120.0));
}

TEST_CASE("replay buffer is a ring with uniform sampling") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    Sample s;
    s.x = Eigen::VectorXd::Constant(1, static_cast<double>(i));
    s.pi = Eigen::VectorXd::Ones(1);
    s.legal_count = 1;
    buf.push(std::move(s));
  }
  CHECK(buf.size() == 3);
  CHECK(buf.capacity() == 3);

  Rng rng(4);
  std::vector<Sample> got = buf.sample(64, rng);
  CHECK(got.size() == 64);
  for (const Sample& s : got) {
    const double v = s.x[0];
    CHECK(v >= 2.0);  // samples 0 and 1 were overwritten
    CHECK(v <= 4.0);
  }
  ReplayBuffer empty(3);
  CHECK_THROWS_AS((void)empty.sample(1, rng), std::logic_error);
}

TEST_CASE("checkpoints round-trip exactly") {
  NetConfig cfg = tiny_config(21, Activation::Tanh);
  cfg.z_scale = 150.0;
  Params params = init_params(cfg);
  OptState opt = init_opt(params);
  std::mt19937_64 gen(3);
  std::vector<Sample> batch = random_batch(cfg, gen, 4);
  for (int i = 0; i < 3; ++i) train_step(cfg, params, opt, batch);

  Checkpoint ckpt{cfg, params, opt, 42};
  const std::string path = "test_net_checkpoint.json";
  save_checkpoint(path, ckpt);
  Checkpoint back = load_checkpoint(path);

  CHECK(back.episodes_trained == 42);
  CHECK(back.config.input_dim == cfg.input_dim);
  CHECK(back.config.hidden == cfg.hidden);
  CHECK(back.config.policy_dim == cfg.policy_dim);
  CHECK((back.config.activation == Activation::Tanh));
  CHECK(back.config.z_scale == cfg.z_scale);
  for (size_t l = 0; l < params.w.size(); ++l) {
    CHECK((back.params.w[l] - params.w[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.opt.sw[l] - opt.sw[l]).cwiseAbs().maxCoeff() == 0.0);
  }
  std::remove(path.c_str());

  const std::string bogus = "test_net_bogus.json";
  {
    std::FILE* f = std::fopen(bogus.c_str(), "w");
    std::fputs("{\"format\":\"something-else\"}", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS((void)load_checkpoint(bogus), std::runtime_error);
  std::remove(bogus.c_str());
}
