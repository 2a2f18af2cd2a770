#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiltnet/graph.hpp"
#include "tiltnet/maxplus.hpp"
#include "tiltnet/netsim.hpp"
#include "tiltnet/neural.hpp"
#include "tiltnet/rng.hpp"

namespace tiltnet::learner {

// Observation and reward scaling estimated from random tilt configurations.
struct Normalizer {
  double max_sinr_db = 1.0;
  double reward_mean = 0.0;
  double reward_std = 1.0;
  bool calibrated = false;

  double standardize(double reward) const { return (reward - reward_mean) / reward_std; }
  std::vector<double> normalize_observations(const std::vector<double>& raw) const;
};

// Moments from an explicit sample of per-cell rewards (population std).
Normalizer normalizer_from_samples(double max_sinr_db, const std::vector<double>& reward_samples);

Normalizer calibrate(const netsim::Deployment& d, int n_random_configs, int n_users,
                     std::uint64_t seed);

struct Hyper {
  double gamma = 0.0;
  double learning_rate = 1e-4;
  double epsilon_initial = 1.0;
  double epsilon_final = 0.01;
  int epsilon_decay_steps = 5000;
  int hidden_width = 32;
  int batch_size = 32;
  int replay_capacity = 5000;
  int learning_starts = 1000;  // env steps collected before the first update
  int target_update_crl = 500;
  int target_update_dqn = 2000;
  int mp_max_iters = 40;
  double grad_clip_norm = 10.0;
};

double epsilon_at(const Hyper& h, int step);

struct Transition {
  std::vector<double> obs;       // n_cells * 4, normalized
  JointAction action;
  std::vector<double> rewards;   // per cell, standardized
  std::vector<double> next_obs;  // n_cells * 4, normalized
  JointAction next_greedy;       // message-passing action at the next step, pre-epsilon
};

// Fixed-capacity ring with uniform sampling (with replacement).
template <class T>
class ReplayRing {
 public:
  explicit ReplayRing(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw std::invalid_argument("replay capacity must be >= 1");
  }
  void push(T item) {
    if (static_cast<int>(data_.size()) < capacity_) {
      data_.push_back(std::move(item));
    } else {
      data_[next_] = std::move(item);
      next_ = (next_ + 1) % capacity_;
    }
  }
  int size() const { return static_cast<int>(data_.size()); }
  int capacity() const { return capacity_; }
  const T& at(int i) const { return data_[i]; }
  T& at(int i) { return data_[i]; }
  std::vector<int> sample_indices(int batch, Rng& rng) const {
    if (size() < batch) throw std::logic_error("replay: sampling before the buffer is full enough");
    std::vector<int> idx(batch);
    for (int k = 0; k < batch; ++k) idx[k] = rng.uniform_int(size());
    return idx;
  }

 private:
  int capacity_;
  std::vector<T> data_;
  int next_ = 0;
};

using ReplayBuffer = ReplayRing<Transition>;

enum class QMode { shared, per_edge };

// Edge value networks: input concat(obs_i, obs_j) with i < j, output one
// payoff per joint (a_i, a_j) pair, row-major in a_i.
struct EdgeQ {
  QMode mode = QMode::shared;
  int obs_dim = 4;
  int n_actions = 16;
  std::vector<neural::Mlp> online;
  std::vector<neural::Mlp> target;
  std::vector<neural::AdamState> opt;

  int n_nets() const { return static_cast<int>(online.size()); }
  int net_index(int edge) const { return mode == QMode::shared ? 0 : edge; }
};

EdgeQ make_edge_q(QMode mode, int n_edges, const Hyper& hyper, std::uint64_t seed, int obs_dim = 4,
                  int n_actions = 16);

void sync_targets(EdgeQ& q);

maxplus::EdgePayoffSet edge_payoffs(const EdgeQ& q, const graph::CoordinationGraph& g,
                                    const std::vector<double>& norm_obs, bool use_target = false);

struct ActResult {
  JointAction action;  // after exploration
  JointAction greedy;  // raw message-passing output
  maxplus::MpDiagnostics diag;
};

ActResult act(const EdgeQ& q, const graph::CoordinationGraph& g,
              const std::vector<double>& norm_obs, double epsilon, Rng& rng, int mp_max_iters);

// Credit split r_i/|N(i)| + r_j/|N(j)| for one edge.
double edge_reward(const std::vector<double>& rewards, const graph::CoordinationGraph& g,
                   int edge);

struct TrainStepStats {
  double mean_sq_td = 0.0;
  int batch = 0;
  double grad_norm = 0.0;
};

TrainStepStats train_step(EdgeQ& q, const ReplayBuffer& buffer, const graph::CoordinationGraph& g,
                          const Hyper& hyper, Rng& rng);

// --- environment loop -----------------------------------------------------

struct TrainConfig {
  const netsim::Deployment* deployment = nullptr;
  const graph::CoordinationGraph* graph = nullptr;
  Normalizer normalizer;
  Hyper hyper;
  QMode mode = QMode::shared;
  int n_users = 1000;
  int budget = 10000;
  int eval_every = 250;
  int eval_drops = 10;
  int default_tilt = 8;
  std::uint64_t seed = 1;
  std::uint64_t eval_seed = 900001;
};

struct MetricsRow {
  int step = 0;
  double epsilon = 0.0;
  double loss = 0.0;       // mean squared TD error since the previous row
  bool has_loss = false;
  double eval_mean = 0.0;  // standardized reward per cell, mean over eval drops
  double mp_iters = 0.0;   // mean message-passing iterations since the previous row
};

struct TrainResult {
  std::vector<MetricsRow> rows;
  EdgeQ final_q;
  EdgeQ best_q;
  double final_eval = 0.0;
  double best_eval = 0.0;
  long train_steps = 0;
};

TrainResult run_training(const TrainConfig& cfg);

// --- evaluation -------------------------------------------------------------

// Maps the normalized joint observation at the pre-action state to an action.
using Policy = std::function<JointAction(const std::vector<double>& norm_obs)>;

struct EvalResult {
  std::vector<double> per_drop;  // standardized reward per cell, one value per drop
  double mean = 0.0;
  double stddev = 0.0;  // population std over drops
};

EvalResult evaluate(const netsim::Deployment& d, const Normalizer& norm, const Policy& policy,
                    int n_drops, std::uint64_t eval_seed, int n_users, int default_tilt);

// Evaluation with per-drop detail kept for reporting.
struct EvalDrop {
  JointAction action;
  double reward = 0.0;                  // standardized, per cell
  std::vector<double> cell_rewards;     // standardized per cell
  std::vector<double> user_throughput;  // bit/s
};

std::vector<EvalDrop> evaluate_detailed(const netsim::Deployment& d, const Normalizer& norm,
                                        const Policy& policy, int n_drops, std::uint64_t eval_seed,
                                        int n_users, int default_tilt);

Policy greedy_policy(const EdgeQ& q, const graph::CoordinationGraph& g, int mp_max_iters);

}  // namespace tiltnet::learner
