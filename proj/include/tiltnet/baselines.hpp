#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "tiltnet/learner.hpp"

namespace tiltnet::baselines {

enum class DqnMode { independent, shared };

// Per-cell Q-learning on the cell's own observation and reward. Independent
// mode: one network and one buffer per cell. Shared mode: one network and one
// buffer pooling every cell's samples.
struct CellQPolicy {
  DqnMode mode = DqnMode::independent;
  int n_cells = 0;
  int obs_dim = 4;
  int n_actions = 16;
  std::vector<neural::Mlp> online;
  std::vector<neural::Mlp> target;
  std::vector<neural::AdamState> opt;

  int net_index(int cell) const { return mode == DqnMode::shared ? 0 : cell; }
};

struct CellTransition {
  std::array<double, 4> obs{};
  int action = 0;
  double reward = 0.0;
  std::array<double, 4> next_obs{};
};

struct DqnConfig {
  const netsim::Deployment* deployment = nullptr;
  learner::Normalizer normalizer;
  learner::Hyper hyper;
  DqnMode mode = DqnMode::independent;
  int n_users = 1000;
  int budget = 10000;
  int eval_every = 250;
  int eval_drops = 10;
  int default_tilt = 8;
  std::uint64_t seed = 1;
  std::uint64_t eval_seed = 900001;
};

struct DqnResult {
  std::vector<learner::MetricsRow> rows;
  CellQPolicy final_policy;
  CellQPolicy best_policy;
  double final_eval = 0.0;
  double best_eval = 0.0;
  long train_steps = 0;
};

CellQPolicy make_cell_q(DqnMode mode, int n_cells, const learner::Hyper& hyper, std::uint64_t seed,
                        int obs_dim = 4, int n_actions = 16);

// Greedy per-cell actions (argmax over the cell's Q values, ties low).
JointAction dqn_greedy(const CellQPolicy& p, const std::vector<double>& norm_obs);

DqnResult train_dqn(const DqnConfig& cfg);

learner::Policy dqn_policy(const CellQPolicy& p);

// --- non-learning baselines -------------------------------------------------

struct SweepResult {
  JointAction tilts;
  double value = 0.0;  // objective at the returned tilts
};

// Cell-by-cell tilt sweep in a seeded random visit order; each cell keeps the
// argmax of the objective over its tilts with other cells held fixed. Ties go
// to the lowest tilt index.
SweepResult sweep(const std::function<double(const JointAction&)>& objective, int n_cells,
                  int n_tilts, int passes, std::uint64_t seed, const JointAction& initial);

struct CsweepResult {
  JointAction tilts;
  maxplus::EdgePayoffSet tables;
  maxplus::MpDiagnostics diag;
};

// Pairwise tilt sweep per graph edge with the rest of the network at the
// default tilt; tables hold the credit-split local rewards and are maximized
// with message passing. cell_rewards_fn must be safe to call concurrently.
CsweepResult coordinated_sweep(
    const std::function<std::vector<double>(const JointAction&)>& cell_rewards_fn,
    const graph::CoordinationGraph& g, int n_tilts, int default_tilt, int mp_max_iters);

struct BaselineStats {
  std::vector<double> values;  // standardized reward per cell, one per config
  double mean = 0.0;
  double stddev = 0.0;  // population std over configs
};

// Uniform random joint tilts on fresh drops; the floor every learner must beat.
BaselineStats random_policy_baseline(const netsim::Deployment& d,
                                     const learner::Normalizer& norm, int n_configs, int n_users,
                                     std::uint64_t seed);

}  // namespace tiltnet::baselines
