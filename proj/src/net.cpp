#include "gridcrew/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace gridcrew {

namespace {

std::vector<int> layer_sizes(const NetConfig& cfg) {
  std::vector<int> sizes{cfg.input_dim};
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(cfg.policy_dim + 1);
  return sizes;
}

double act(Activation a, double x) {
  return a == Activation::Relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

double act_grad(Activation a, double pre, double post) {
  return a == Activation::Relu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0 - post * post;
}

}  // namespace

Params init_params(const NetConfig& cfg) {
  if (cfg.input_dim <= 0 || cfg.policy_dim <= 0 || cfg.hidden.empty())
    throw std::invalid_argument("network dimensions must be positive");
  Params p;
  Rng rng(Rng::derive(cfg.seed, 0x17A7));
  const std::vector<int> sizes = layer_sizes(cfg);
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const double a = std::sqrt(6.0 / (in + out));
    Eigen::MatrixXd w(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) w(r, c) = rng.uniform(-a, a);
    p.w.push_back(std::move(w));
    p.b.push_back(Eigen::VectorXd::Zero(out));
  }
  return p;
}

OptState init_opt(const Params& params) {
  OptState o;
  for (const auto& w : params.w) o.sw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : params.b) o.sb.push_back(Eigen::VectorXd::Zero(b.size()));
  return o;
}

NetOutput forward(const NetConfig& cfg, const Params& params, const Eigen::VectorXd& x) {
  Eigen::VectorXd h = x;
  for (size_t l = 0; l + 1 < params.w.size(); ++l) {
    Eigen::VectorXd pre = params.w[l] * h + params.b[l];
    for (Eigen::Index i = 0; i < pre.size(); ++i) pre[i] = act(cfg.activation, pre[i]);
    h = std::move(pre);
  }
  Eigen::VectorXd out = params.w.back() * h + params.b.back();
  NetOutput res;
  res.logits = out.head(cfg.policy_dim);
  res.value = out[cfg.policy_dim];
  return res;
}

Eigen::VectorXd policy_head(const Eigen::VectorXd& logits, int legal_count) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(logits.size());
  const int k = std::min<int>(legal_count, static_cast<int>(logits.size()));
  if (k <= 0) return p;
  const double m = logits.head(k).maxCoeff();
  double denom = 0.0;
  for (int i = 0; i < k; ++i) denom += std::exp(logits[i] - m);
  for (int i = 0; i < k; ++i) p[i] = std::exp(logits[i] - m) / denom;
  return p;
}

LossParts loss_and_gradients(const NetConfig& cfg, const Params& params,
                             const std::vector<Sample>& batch, Params* grads) {
  if (batch.empty()) throw std::invalid_argument("empty training batch");
  const size_t n_layers = params.w.size();
  if (grads) {
    grads->w.assign(n_layers, {});
    grads->b.assign(n_layers, {});
    for (size_t l = 0; l < n_layers; ++l) {
      grads->w[l] = Eigen::MatrixXd::Zero(params.w[l].rows(), params.w[l].cols());
      grads->b[l] = Eigen::VectorXd::Zero(params.b[l].size());
    }
  }

  LossParts loss;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<Eigen::VectorXd> pres(n_layers), acts(n_layers + 1);
  for (const Sample& s : batch) {
    acts[0] = s.x;
    for (size_t l = 0; l < n_layers; ++l) {
      pres[l] = params.w[l] * acts[l] + params.b[l];
      if (l + 1 < n_layers) {
        acts[l + 1] = pres[l];
        for (Eigen::Index i = 0; i < acts[l + 1].size(); ++i)
          acts[l + 1][i] = act(cfg.activation, acts[l + 1][i]);
      } else {
        acts[l + 1] = pres[l];  // linear output layer
      }
    }
    const Eigen::VectorXd& out = acts[n_layers];
    const double v = out[cfg.policy_dim];
    const Eigen::VectorXd p = policy_head(out.head(cfg.policy_dim), s.legal_count);

    const double dv = v - s.z;
    loss.value += dv * dv * inv_b;
    double ce = 0.0;
    for (int i = 0; i < s.legal_count; ++i)
      if (s.pi[i] > 0.0) ce -= s.pi[i] * std::log(std::max(p[i], 1e-300));
    loss.policy += ce * inv_b;

    if (!grads) continue;
    Eigen::VectorXd g_out = Eigen::VectorXd::Zero(out.size());
    // Softmax cross-entropy over the legal slots; the target pi sums to 1.
    for (int i = 0; i < s.legal_count; ++i) g_out[i] = (p[i] - s.pi[i]) * inv_b;
    g_out[cfg.policy_dim] = 2.0 * dv * inv_b;

    Eigen::VectorXd g = std::move(g_out);
    for (size_t l = n_layers; l-- > 0;) {
      grads->w[l].noalias() += g * acts[l].transpose();
      grads->b[l] += g;
      if (l == 0) break;
      Eigen::VectorXd g_h = params.w[l].transpose() * g;
      for (Eigen::Index i = 0; i < g_h.size(); ++i)
        g_h[i] *= act_grad(cfg.activation, pres[l - 1][i], acts[l][i]);
      g = std::move(g_h);
    }
  }

  double sq = 0.0;
  for (size_t l = 0; l < n_layers; ++l)
    sq += params.w[l].squaredNorm() + params.b[l].squaredNorm();
  loss.l2 = cfg.l2_coeff * sq;
  if (grads)
    for (size_t l = 0; l < n_layers; ++l) {
      grads->w[l] += 2.0 * cfg.l2_coeff * params.w[l];
      grads->b[l] += 2.0 * cfg.l2_coeff * params.b[l];
    }
  return loss;
}

LossParts train_step(const NetConfig& cfg, Params& params, OptState& opt,
                     const std::vector<Sample>& batch) {
  Params grads;
  LossParts loss = loss_and_gradients(cfg, params, batch, &grads);
  for (size_t l = 0; l < params.w.size(); ++l) {
    opt.sw[l].array() = cfg.rms_decay * opt.sw[l].array() +
                        (1.0 - cfg.rms_decay) * grads.w[l].array().square();
    opt.sb[l].array() = cfg.rms_decay * opt.sb[l].array() +
                        (1.0 - cfg.rms_decay) * grads.b[l].array().square();
    params.w[l].array() -=
        cfg.learning_rate * grads.w[l].array() / (opt.sw[l].array().sqrt() + cfg.rms_epsilon);
    params.b[l].array() -=
        cfg.learning_rate * grads.b[l].array() / (opt.sb[l].array().sqrt() + cfg.rms_epsilon);
  }
  return loss;
}

Eigen::VectorXd encode_state(const FaultModel& model, const EnvState& state) {
  const int vi = next_to_dispatch(state);
  if (vi < 0) throw std::logic_error("no crew is owed a decision; nothing to encode");
  const DistributionGrid& grid = model.grid();
  Eigen::VectorXd x(1 + model.num_units());
  const int denom = std::max<int>(1, static_cast<int>(grid.nodes.size()) - 1);
  x[0] = static_cast<double>(grid.node_index(state.vehicles[vi].position)) / denom;
  x.tail(model.num_units()) = state.belief.posterior;
  return x;
}

double default_z_scale(const FaultModel& model) {
  return std::max(1, model.grid().total_customers());
}

Evaluator make_net_evaluator(const FaultModel& model, NetConfig cfg, Params params) {
  return [&model, cfg = std::move(cfg), params = std::move(params)](
             const EnvState& state, const std::vector<int>& legal) {
    const Eigen::VectorXd x = encode_state(model, state);
    const NetOutput out = forward(cfg, params, x);
    const int k = static_cast<int>(legal.size());
    if (k > cfg.policy_dim)
      throw std::logic_error("more legal actions than policy slots");
    const Eigen::VectorXd p = policy_head(out.logits, k);
    PolicyValue pv;
    pv.prior = p.head(k);
    pv.value = out.value * cfg.z_scale;
    return pv;
  };
}

void ReplayBuffer::push(Sample s) {
  if (capacity_ == 0) return;
  if (data_.size() < capacity_) {
    data_.push_back(std::move(s));
  } else {
    data_[next_] = std::move(s);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<Sample> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (data_.empty()) throw std::logic_error("sampling from an empty replay buffer");
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(data_[static_cast<size_t>(rng.below(data_.size()))]);
  return out;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  return m;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::json j;
  j["format"] = "gridcrew-checkpoint-1";
  j["episodes_trained"] = ckpt.episodes_trained;
  nlohmann::json cfg;
  cfg["input_dim"] = ckpt.config.input_dim;
  cfg["hidden"] = ckpt.config.hidden;
  cfg["policy_dim"] = ckpt.config.policy_dim;
  cfg["activation"] = ckpt.config.activation == Activation::Relu ? "relu" : "tanh";
  cfg["learning_rate"] = ckpt.config.learning_rate;
  cfg["l2_coeff"] = ckpt.config.l2_coeff;
  cfg["rms_decay"] = ckpt.config.rms_decay;
  cfg["rms_epsilon"] = ckpt.config.rms_epsilon;
  cfg["z_scale"] = ckpt.config.z_scale;
  cfg["seed"] = ckpt.config.seed;
  j["config"] = std::move(cfg);
  nlohmann::json pw = nlohmann::json::array(), pb = nlohmann::json::array();
  for (const auto& w : ckpt.params.w) pw.push_back(matrix_json(w));
  for (const auto& b : ckpt.params.b) pb.push_back(vector_json(b));
  j["params"] = {{"w", std::move(pw)}, {"b", std::move(pb)}};
  nlohmann::json sw = nlohmann::json::array(), sb = nlohmann::json::array();
  for (const auto& w : ckpt.opt.sw) sw.push_back(matrix_json(w));
  for (const auto& b : ckpt.opt.sb) sb.push_back(vector_json(b));
  j["opt"] = {{"sw", std::move(sw)}, {"sb", std::move(sb)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << j.dump();
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "gridcrew-checkpoint-1")
    throw std::runtime_error("'" + path + "' is not a checkpoint file");
  Checkpoint c;
  c.episodes_trained = j["episodes_trained"].get<std::uint64_t>();
  const auto& cfg = j["config"];
  c.config.input_dim = cfg["input_dim"].get<int>();
  c.config.hidden = cfg["hidden"].get<std::vector<int>>();
  c.config.policy_dim = cfg["policy_dim"].get<int>();
  c.config.activation =
      cfg["activation"].get<std::string>() == "tanh" ? Activation::Tanh : Activation::Relu;
  c.config.learning_rate = cfg["learning_rate"].get<double>();
  c.config.l2_coeff = cfg["l2_coeff"].get<double>();
  c.config.rms_decay = cfg["rms_decay"].get<double>();
  c.config.rms_epsilon = cfg["rms_epsilon"].get<double>();
  c.config.z_scale = cfg["z_scale"].get<double>();
  c.config.seed = cfg["seed"].get<std::uint64_t>();
  for (const auto& w : j["params"]["w"]) c.params.w.push_back(matrix_from_json(w));
  for (const auto& b : j["params"]["b"]) c.params.b.push_back(vector_from_json(b));
  for (const auto& w : j["opt"]["sw"]) c.opt.sw.push_back(matrix_from_json(w));
  for (const auto& b : j["opt"]["sb"]) c.opt.sb.push_back(vector_from_json(b));
  const std::vector<int> sizes = layer_sizes(c.config);
  if (c.params.w.size() + 1 != sizes.size())
    throw std::runtime_error("checkpoint layer count does not match its config");
  for (size_t l = 0; l + 1 < sizes.size(); ++l)
    if (c.params.w[l].rows() != sizes[l + 1] || c.params.w[l].cols() != sizes[l] ||
        c.params.b[l].size() != sizes[l + 1])
      throw std::runtime_error("checkpoint parameter shapes do not match its config");
  return c;
}

}  // namespace gridcrew
