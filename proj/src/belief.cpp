#include "gridcrew/belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridcrew/rng.hpp"

namespace gridcrew {

namespace {

// Work bound for the exact solver: enumeration is used only while
// 2^K * (K + groups) stays below this, so the solve cost is capped no matter
// how enum_limit is configured.
constexpr double kEnumWorkCap = 8e6;

struct GroupEvidence {
  bool called = false;
  bool base_dark = false;             // dark from pinned-damaged units alone
  bool explainable = false;           // base_dark or at least one free cut unit
  std::vector<std::uint64_t> mask;    // free cut units, bit per free slot
  double silent_factor = 1.0;         // (1-rho)^n
  double called_factor = 1.0;         // 1-(1-rho)^n
  double log_silent = 0.0;            // n*log1p(-rho); exact even when
  double log_called = 0.0;            // silent_factor underflows
};

struct CircuitSetup {
  std::vector<int> free_units;        // global unit indices, ascending
  std::vector<GroupEvidence> groups;
  int words = 0;
  bool unexplainable_call = false;    // a called group no config can darken
};

bool pinned_damaged(UnitStatus s) {
  return s == UnitStatus::ObservedDamaged || s == UnitStatus::Repaired;
}

CircuitSetup build_setup(const FaultModel& model, int circuit,
                         const std::vector<std::uint8_t>& called,
                         const std::vector<UnitStatus>& status, double rho,
                         bool drop_unexplainable) {
  CircuitSetup setup;
  std::vector<int> slot(model.num_units(), -1);
  for (int u : model.circuit_units(circuit)) {
    if (status[u] == UnitStatus::Unvisited) {
      slot[u] = static_cast<int>(setup.free_units.size());
      setup.free_units.push_back(u);
    }
  }
  setup.words = static_cast<int>((setup.free_units.size() + 63) / 64);

  for (int c : model.circuit_customers(circuit)) {
    GroupEvidence g;
    g.called = called[c] != 0;
    g.mask.assign(std::max(setup.words, 1), 0);
    for (int u : model.customer_cut_units(c)) {
      if (pinned_damaged(status[u]))
        g.base_dark = true;
      else if (slot[u] >= 0)
        g.mask[slot[u] / 64] |= 1ULL << (slot[u] % 64);
    }
    bool has_free = false;
    for (std::uint64_t w : g.mask) has_free |= w != 0;
    g.explainable = g.base_dark || has_free;
    const int n = model.grid().customers[c].count;
    g.silent_factor = std::pow(1.0 - rho, n);
    g.called_factor = 1.0 - g.silent_factor;
    g.log_silent = n * std::log1p(-rho);
    g.log_called = std::log1p(-g.silent_factor);
    if (g.called && !g.explainable) {
      setup.unexplainable_call = true;
      if (drop_unexplainable) continue;
    }
    setup.groups.push_back(std::move(g));
  }
  return setup;
}

double likelihood_of(const CircuitSetup& setup, const std::vector<std::uint64_t>& bits) {
  double like = 1.0;
  for (const GroupEvidence& g : setup.groups) {
    bool dark = g.base_dark;
    if (!dark)
      for (int w = 0; w < setup.words && !dark; ++w) dark = (g.mask[w] & bits[w]) != 0;
    if (g.called) {
      if (!dark) return 0.0;
      like *= g.called_factor;
    } else if (dark) {
      like *= g.silent_factor;
    }
  }
  return like;
}

double log_likelihood_of(const CircuitSetup& setup, const std::vector<std::uint64_t>& bits) {
  double ll = 0.0;
  for (const GroupEvidence& g : setup.groups) {
    bool dark = g.base_dark;
    if (!dark)
      for (int w = 0; w < setup.words && !dark; ++w) dark = (g.mask[w] & bits[w]) != 0;
    if (g.called) {
      if (!dark) return -std::numeric_limits<double>::infinity();
      ll += g.log_called;
    } else if (dark) {
      ll += g.log_silent;
    }
  }
  return ll;
}

struct Solve {
  Eigen::VectorXd q;   // per free slot
  double total = 0.0;  // only its sign matters to callers; the log-space
                       // rescue stores a rescaled total
};

Solve solve_exact(const FaultModel& model, const CircuitSetup& setup) {
  const int k = static_cast<int>(setup.free_units.size());
  Solve out;
  out.q = Eigen::VectorXd::Zero(k);
  std::vector<std::uint64_t> bits(std::max(setup.words, 1), 0);
  const std::uint64_t n_cfg = 1ULL << k;
  for (std::uint64_t cfg = 0; cfg < n_cfg; ++cfg) {
    bits[0] = cfg;
    double w = 1.0;
    for (int i = 0; i < k; ++i) {
      const double p = model.unit_prior(setup.free_units[i]);
      w *= (cfg >> i) & 1 ? p : 1.0 - p;
    }
    if (w == 0.0) continue;
    w *= likelihood_of(setup, bits);
    if (w == 0.0) continue;
    out.total += w;
    for (int i = 0; i < k; ++i)
      if ((cfg >> i) & 1) out.q[i] += w;
  }
  if (out.total > 0.0) {
    out.q /= out.total;
    return out;
  }

  // Every configuration's raw weight vanished. That is either structural
  // (some call no configuration can explain) or an underflow: with many
  // silent-but-dark customers the weights drop below double range while the
  // posterior itself is perfectly well defined. Retry in log space; the
  // raw path above stays bit-identical whenever it succeeds.
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> log_p(k), log_1mp(k);
  for (int i = 0; i < k; ++i) {
    const double p = model.unit_prior(setup.free_units[i]);
    log_p[i] = std::log(p);
    log_1mp[i] = std::log1p(-p);
  }
  auto log_weight = [&](std::uint64_t cfg) {
    bits[0] = cfg;
    double lw = 0.0;
    for (int i = 0; i < k; ++i) lw += (cfg >> i) & 1 ? log_p[i] : log_1mp[i];
    return lw == ninf ? ninf : lw + log_likelihood_of(setup, bits);
  };
  double max_lw = ninf;
  for (std::uint64_t cfg = 0; cfg < n_cfg; ++cfg) max_lw = std::max(max_lw, log_weight(cfg));
  if (max_lw == ninf) return out;  // genuinely zero evidence
  for (std::uint64_t cfg = 0; cfg < n_cfg; ++cfg) {
    const double w = std::exp(log_weight(cfg) - max_lw);
    if (w == 0.0) continue;
    out.total += w;
    for (int i = 0; i < k; ++i)
      if ((cfg >> i) & 1) out.q[i] += w;
  }
  out.q /= out.total;
  return out;
}

Solve solve_mc(const FaultModel& model, const CircuitSetup& setup, int samples,
               std::uint64_t seed) {
  const int k = static_cast<int>(setup.free_units.size());
  Solve out;
  out.q = Eigen::VectorXd::Zero(k);
  Rng rng(seed);
  std::vector<std::uint64_t> bits(std::max(setup.words, 1), 0);
  std::vector<double> priors(k);
  for (int i = 0; i < k; ++i) priors[i] = model.unit_prior(setup.free_units[i]);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(k);
  for (int s = 0; s < samples; ++s) {
    std::fill(bits.begin(), bits.end(), 0);
    for (int i = 0; i < k; ++i)
      if (rng.bernoulli(priors[i])) bits[i / 64] |= 1ULL << (i % 64);
    const double w = likelihood_of(setup, bits);
    if (w == 0.0) continue;
    out.total += w;
    for (int i = 0; i < k; ++i)
      if ((bits[i / 64] >> (i % 64)) & 1) acc[i] += w;
  }
  if (out.total > 0.0) out.q = acc / out.total;
  return out;
}

bool exact_feasible(const CircuitSetup& setup, int enum_limit) {
  const int k = static_cast<int>(setup.free_units.size());
  if (k > enum_limit || k >= 63) return false;
  const double work =
      std::ldexp(static_cast<double>(k + std::max<size_t>(setup.groups.size(), 1)), k);
  return work <= kEnumWorkCap;
}

// Writes a solve back into a global-sized vector: free slots get q, pinned
// units get their pin. `present_time` maps repaired units to 0 instead of 1.
void scatter(const FaultModel& model, int circuit, const CircuitSetup& setup,
             const Eigen::VectorXd& q, const std::vector<UnitStatus>& status, bool present_time,
             Eigen::VectorXd* out) {
  for (int u : model.circuit_units(circuit)) {
    switch (status[u]) {
      case UnitStatus::Unvisited:
        break;  // filled below
      case UnitStatus::ObservedIntact:
        (*out)[u] = 0.0;
        break;
      case UnitStatus::ObservedDamaged:
        (*out)[u] = 1.0;
        break;
      case UnitStatus::Repaired:
        (*out)[u] = present_time ? 0.0 : 1.0;
        break;
    }
  }
  for (size_t i = 0; i < setup.free_units.size(); ++i) (*out)[setup.free_units[i]] = q[i];
}

}  // namespace

double call_likelihood(const FaultModel& model, int circuit,
                       const std::vector<std::uint8_t>& unit_faults,
                       const std::vector<std::uint8_t>& called, double rho) {
  double like = 1.0;
  for (int c : model.circuit_customers(circuit)) {
    bool dark = false;
    for (int u : model.customer_cut_units(c))
      if (unit_faults[u]) {
        dark = true;
        break;
      }
    const int n = model.grid().customers[c].count;
    const double silent = std::pow(1.0 - rho, n);
    if (called[c]) {
      if (!dark) return 0.0;
      like *= 1.0 - silent;
    } else if (dark) {
      like *= silent;
    }
  }
  return like;
}

Eigen::VectorXd posterior_exact(const FaultModel& model, int circuit,
                                const std::vector<std::uint8_t>& called,
                                const std::vector<UnitStatus>& status, double rho) {
  CircuitSetup setup = build_setup(model, circuit, called, status, rho, false);
  if (setup.free_units.size() >= 63)
    throw std::invalid_argument("too many free units for exact enumeration");
  Solve s = solve_exact(model, setup);
  if (s.total <= 0.0)
    throw ZeroEvidenceError("no fault configuration explains the call pattern on circuit '" +
                            model.grid().circuits[circuit] + "'");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(model.num_units());
  scatter(model, circuit, setup, s.q, status, /*present_time=*/false, &out);
  return out;
}

Eigen::VectorXd posterior_mc(const FaultModel& model, int circuit,
                             const std::vector<std::uint8_t>& called,
                             const std::vector<UnitStatus>& status, double rho, int samples,
                             std::uint64_t seed) {
  CircuitSetup setup = build_setup(model, circuit, called, status, rho, false);
  Solve s = solve_mc(model, setup, samples, seed);
  if (s.total <= 0.0)
    throw ZeroEvidenceError("all Monte Carlo samples carry zero likelihood on circuit '" +
                            model.grid().circuits[circuit] + "'");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(model.num_units());
  scatter(model, circuit, setup, s.q, status, /*present_time=*/false, &out);
  return out;
}

void recompute_circuit(const FaultModel& model, BeliefState& belief, int circuit,
                       const BeliefConfig& cfg) {
  CircuitSetup setup =
      build_setup(model, circuit, belief.called, belief.status, cfg.rho, false);
  // Called groups whose every explaining unit is pinned intact can only arise
  // inside hypothetical search branches; their evidence is vacuous there.
  if (setup.unexplainable_call)
    setup = build_setup(model, circuit, belief.called, belief.status, cfg.rho, true);

  Solve s;
  if (exact_feasible(setup, cfg.enum_limit)) {
    s = solve_exact(model, setup);
  } else {
    s = solve_mc(model, setup, cfg.mc_samples,
                 Rng::derive(cfg.seed, belief.draw_counter++));
    if (s.total <= 0.0)
      s = solve_mc(model, setup, cfg.mc_samples,
                   Rng::derive(cfg.seed, belief.draw_counter++));
    if (s.total <= 0.0) {
      // Weight collapse: keep the episode alive by reverting to the priors.
      for (size_t i = 0; i < setup.free_units.size(); ++i)
        s.q[i] = model.unit_prior(setup.free_units[i]);
      s.total = 1.0;
    }
  }
  scatter(model, circuit, setup, s.q, belief.status, /*present_time=*/true, &belief.posterior);
}

BeliefState init_belief(const FaultModel& model, const std::vector<std::uint8_t>& called,
                        const BeliefConfig& cfg) {
  BeliefState b;
  b.posterior = Eigen::VectorXd::Zero(model.num_units());
  b.status.assign(model.num_units(), UnitStatus::Unvisited);
  b.called = called;
  for (int c = 0; c < model.num_circuits(); ++c) recompute_circuit(model, b, c, cfg);
  return b;
}

void update_on_observation(const FaultModel& model, BeliefState& belief,
                           const std::vector<int>& units,
                           const std::vector<std::uint8_t>& damaged, bool repair_damaged,
                           const BeliefConfig& cfg) {
  std::vector<int> circuits;
  for (size_t i = 0; i < units.size(); ++i) {
    const int u = units[i];
    const bool dmg = damaged[i] != 0;
    switch (belief.status[u]) {
      case UnitStatus::Unvisited:
        belief.status[u] = dmg ? (repair_damaged ? UnitStatus::Repaired
                                                 : UnitStatus::ObservedDamaged)
                               : UnitStatus::ObservedIntact;
        break;
      case UnitStatus::ObservedIntact:
        if (dmg)
          throw std::logic_error("unit '" + model.unit_id(u) +
                                 "' observed intact cannot later be damaged");
        break;
      case UnitStatus::ObservedDamaged:
        if (!dmg)
          throw std::logic_error("unit '" + model.unit_id(u) +
                                 "' observed damaged cannot later be intact");
        if (repair_damaged) belief.status[u] = UnitStatus::Repaired;
        break;
      case UnitStatus::Repaired:
        break;  // a repaired unit just looks intact
    }
    circuits.push_back(model.unit_circuit(u));
  }
  std::sort(circuits.begin(), circuits.end());
  circuits.erase(std::unique(circuits.begin(), circuits.end()), circuits.end());
  for (int c : circuits) recompute_circuit(model, belief, c, cfg);
}

void update_on_calls(const FaultModel& model, BeliefState& belief,
                     const std::vector<std::uint8_t>& called, const BeliefConfig& cfg) {
  belief.called = called;
  for (int c = 0; c < model.num_circuits(); ++c) recompute_circuit(model, belief, c, cfg);
}

}  // namespace gridcrew
