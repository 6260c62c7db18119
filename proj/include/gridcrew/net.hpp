#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gridcrew/env.hpp"
#include "gridcrew/fault_model.hpp"
#include "gridcrew/mcts.hpp"
#include "gridcrew/rng.hpp"

namespace gridcrew {

enum class Activation : std::uint8_t { Relu, Tanh };

struct NetConfig {
  int input_dim = 0;
  std::vector<int> hidden{120, 120};
  int policy_dim = 0;             // slots for the largest feasible-action set
  Activation activation = Activation::Relu;
  double learning_rate = 1e-4;
  double l2_coeff = 1e-4;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  double z_scale = 1.0;           // value targets are trained divided by this
  std::uint64_t seed = 0;
};

// Dense parameters, layer by layer: w[l] is (out x in).
struct Params {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
};

// RMSprop accumulators, same shapes as Params.
struct OptState {
  std::vector<Eigen::MatrixXd> sw;
  std::vector<Eigen::VectorXd> sb;
};

// One training example: encoded state, visit policy over the action slots
// (zero beyond legal_count), and the normalized value target.
struct Sample {
  Eigen::VectorXd x;
  Eigen::VectorXd pi;
  double z = 0.0;
  int legal_count = 0;
};

struct LossParts {
  double value = 0.0;
  double policy = 0.0;
  double l2 = 0.0;
  double total() const { return value + policy + l2; }
};

// Glorot-uniform weights, zero biases. Deterministic in cfg.seed.
Params init_params(const NetConfig& cfg);
OptState init_opt(const Params& params);

// Policy logits (policy_dim) and value for one input.
struct NetOutput {
  Eigen::VectorXd logits;
  double value = 0.0;
};
NetOutput forward(const NetConfig& cfg, const Params& params, const Eigen::VectorXd& x);

// Softmax restricted to the first `legal_count` slots; remaining slots are 0.
Eigen::VectorXd policy_head(const Eigen::VectorXd& logits, int legal_count);

// Mean loss over the batch and, when `grads` is non-null, its gradients
// (including the L2 term) accumulated into a zero-initialized Params.
LossParts loss_and_gradients(const NetConfig& cfg, const Params& params,
                             const std::vector<Sample>& batch, Params* grads);

// One RMSprop update on the batch; returns the pre-update losses.
LossParts train_step(const NetConfig& cfg, Params& params, OptState& opt,
                     const std::vector<Sample>& batch);

// Input encoding: [normalized position of the crew owed a decision,
// per-unit posteriors]. Size 1 + num_units.
Eigen::VectorXd encode_state(const FaultModel& model, const EnvState& state);

// Scale that maps customer-hour values to trainable magnitudes.
double default_z_scale(const FaultModel& model);

// Search guidance backed by the network: prior over the (sorted) legal
// actions from the masked policy head, value rescaled to customer-hours.
Evaluator make_net_evaluator(const FaultModel& model, NetConfig cfg, Params params);

// Uniform-with-replacement experience ring.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}
  void push(Sample s);
  std::vector<Sample> sample(std::size_t n, Rng& rng) const;
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Sample> data_;
};

struct Checkpoint {
  NetConfig config;
  Params params;
  OptState opt;
  std::uint64_t episodes_trained = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gridcrew
