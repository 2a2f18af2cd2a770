#include "tiltnet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tiltnet::baselines {

namespace {

using learner::ReplayRing;

std::array<double, 4> cell_obs(const std::vector<double>& norm_obs, int cell) {
  return {norm_obs[static_cast<std::size_t>(cell) * 4 + 0],
          norm_obs[static_cast<std::size_t>(cell) * 4 + 1],
          norm_obs[static_cast<std::size_t>(cell) * 4 + 2],
          norm_obs[static_cast<std::size_t>(cell) * 4 + 3]};
}

int argmax_low_tie(const std::vector<double>& v) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(v.size()); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

}  // namespace

CellQPolicy make_cell_q(DqnMode mode, int n_cells, const learner::Hyper& hyper, std::uint64_t seed,
                        int obs_dim, int n_actions) {
  if (n_cells < 1) throw std::invalid_argument("make_cell_q: need at least one cell");
  CellQPolicy p;
  p.mode = mode;
  p.n_cells = n_cells;
  p.obs_dim = obs_dim;
  p.n_actions = n_actions;
  const int n_nets = mode == DqnMode::shared ? 1 : n_cells;
  const std::vector<int> dims{obs_dim, hyper.hidden_width, hyper.hidden_width, n_actions};
  for (int k = 0; k < n_nets; ++k) {
    p.online.push_back(neural::make_mlp(dims, derive_seed(seed, Stream::net_init, k)));
    p.opt.push_back(neural::make_adam(p.online.back(), hyper.learning_rate));
  }
  for (const auto& net : p.online) p.target.push_back(neural::clone_into_target(net));
  return p;
}

JointAction dqn_greedy(const CellQPolicy& p, const std::vector<double>& norm_obs) {
  if (static_cast<int>(norm_obs.size()) != p.n_cells * p.obs_dim)
    throw std::invalid_argument("dqn_greedy: observation size mismatch");
  JointAction a(p.n_cells, 0);
  for (int c = 0; c < p.n_cells; ++c) {
    const std::array<double, 4> obs = cell_obs(norm_obs, c);
    const std::vector<double> qv = neural::forward(p.online[p.net_index(c)], obs);
    a[c] = argmax_low_tie(qv);
  }
  return a;
}

learner::Policy dqn_policy(const CellQPolicy& p) {
  CellQPolicy frozen = p;
  return [frozen](const std::vector<double>& norm_obs) { return dqn_greedy(frozen, norm_obs); };
}

DqnResult train_dqn(const DqnConfig& cfg) {
  if (cfg.deployment == nullptr) throw std::invalid_argument("train_dqn: deployment required");
  if (!cfg.normalizer.calibrated) throw std::invalid_argument("train_dqn: normalizer required");
  const netsim::Deployment& d = *cfg.deployment;
  const int n_cells = d.n_cells();
  const int n_actions = d.params.n_tilts;

  DqnResult result;
  result.final_policy = make_cell_q(cfg.mode, n_cells, cfg.hyper, cfg.seed, 4, n_actions);
  if (cfg.budget <= 0) {
    result.best_policy = result.final_policy;
    return result;
  }

  CellQPolicy& p = result.final_policy;
  const int n_buffers = cfg.mode == DqnMode::shared ? 1 : n_cells;
  std::vector<ReplayRing<CellTransition>> buffers(
      static_cast<std::size_t>(n_buffers), ReplayRing<CellTransition>(cfg.hyper.replay_capacity));
  Rng explore_rng(derive_seed(cfg.seed, Stream::exploration));
  Rng replay_rng(derive_seed(cfg.seed, Stream::replay));

  const double obs_floor = d.params.empty_cell_obs_db;
  JointAction tilts(n_cells, cfg.default_tilt);
  netsim::UserDrop drop = netsim::drop_users(d, cfg.n_users, derive_seed(cfg.seed, Stream::user_drop, 0));
  netsim::RadioSnapshot snap = netsim::compute_snapshot(d, drop, tilts);
  std::vector<double> obs =
      cfg.normalizer.normalize_observations(netsim::all_observations(snap, obs_floor));

  long train_steps = 0;
  double loss_sum = 0.0;
  long loss_count = 0;
  result.best_eval = -1e300;

  const auto log_row = [&](int step) {
    learner::MetricsRow row;
    row.step = step;
    row.epsilon = learner::epsilon_at(cfg.hyper, step);
    row.has_loss = loss_count > 0;
    row.loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
    const learner::EvalResult ev =
        learner::evaluate(d, cfg.normalizer, dqn_policy(p), cfg.eval_drops, cfg.eval_seed,
                          cfg.n_users, cfg.default_tilt);
    row.eval_mean = ev.mean;
    result.rows.push_back(row);
    loss_sum = 0.0;
    loss_count = 0;
    if (ev.mean > result.best_eval) {
      result.best_eval = ev.mean;
      result.best_policy = p;
    }
    result.final_eval = ev.mean;
  };

  neural::ForwardCache cache;
  std::vector<double> gout(n_actions, 0.0);

  const auto train_from = [&](ReplayRing<CellTransition>& buffer, int net) {
    const std::vector<int> batch = buffer.sample_indices(cfg.hyper.batch_size, replay_rng);
    neural::Gradients grads = neural::make_gradients(p.online[net]);
    const double inv_batch = 1.0 / static_cast<double>(cfg.hyper.batch_size);
    double sq = 0.0;
    for (const int idx : batch) {
      const CellTransition& tr = buffer.at(idx);
      const std::vector<double>& out = neural::forward(p.online[net], tr.obs, cache);
      double target = tr.reward;
      if (cfg.hyper.gamma != 0.0) {
        const std::vector<double> out2 = neural::forward(p.target[net], tr.next_obs);
        target += cfg.hyper.gamma * *std::max_element(out2.begin(), out2.end());
      }
      const double delta = target - out[tr.action];
      if (!std::isfinite(delta)) throw std::runtime_error("train_dqn: non-finite TD error");
      sq += delta * delta;
      gout[tr.action] = -delta * inv_batch;
      neural::backward_into(p.online[net], cache, gout, 1.0, grads);
      gout[tr.action] = 0.0;
    }
    neural::clip_global_norm(grads, cfg.hyper.grad_clip_norm);
    neural::adam_step(p.online[net], p.opt[net], grads);
    return sq / static_cast<double>(cfg.hyper.batch_size);
  };

  std::vector<CellTransition> pending(n_cells);
  bool have_pending = false;

  for (int t = 0; t < cfg.budget; ++t) {
    if (t % cfg.eval_every == 0) log_row(t);

    const double eps = learner::epsilon_at(cfg.hyper, t);
    JointAction action = dqn_greedy(p, obs);
    for (int c = 0; c < n_cells; ++c)
      if (explore_rng.bernoulli(eps)) action[c] = explore_rng.uniform_int(n_actions);

    if (have_pending) {
      for (int c = 0; c < n_cells; ++c) {
        pending[c].next_obs = cell_obs(obs, c);
        buffers[cfg.mode == DqnMode::shared ? 0 : c].push(pending[c]);
      }
    }

    tilts = action;
    drop = netsim::drop_users(d, cfg.n_users, derive_seed(cfg.seed, Stream::user_drop, t + 1));
    snap = netsim::compute_snapshot(d, drop, tilts);
    for (int c = 0; c < n_cells; ++c) {
      pending[c].obs = cell_obs(obs, c);
      pending[c].action = action[c];
      pending[c].reward = cfg.normalizer.standardize(snap.cell_rewards[c]);
    }
    have_pending = true;
    obs = cfg.normalizer.normalize_observations(netsim::all_observations(snap, obs_floor));

    bool trained = false;
    const bool warm = t + 1 >= cfg.hyper.learning_starts;
    if (cfg.mode == DqnMode::shared) {
      if (warm && buffers[0].size() >= cfg.hyper.batch_size) {
        loss_sum += train_from(buffers[0], 0);
        loss_count++;
        trained = true;
      }
    } else {
      double step_loss = 0.0;
      int step_nets = 0;
      for (int c = 0; c < n_cells; ++c) {
        if (warm && buffers[c].size() >= cfg.hyper.batch_size) {
          step_loss += train_from(buffers[c], c);
          step_nets++;
        }
      }
      if (step_nets > 0) {
        loss_sum += step_loss / step_nets;
        loss_count++;
        trained = true;
      }
    }
    if (trained) {
      train_steps++;
      if (train_steps % cfg.hyper.target_update_dqn == 0)
        for (int k = 0; k < static_cast<int>(p.online.size()); ++k)
          p.target[k] = neural::clone_into_target(p.online[k]);
    }
  }

  if (have_pending)
    for (int c = 0; c < n_cells; ++c) {
      pending[c].next_obs = cell_obs(obs, c);
      buffers[cfg.mode == DqnMode::shared ? 0 : c].push(pending[c]);
    }

  log_row(cfg.budget);
  result.train_steps = train_steps;
  return result;
}

SweepResult sweep(const std::function<double(const JointAction&)>& objective, int n_cells,
                  int n_tilts, int passes, std::uint64_t seed, const JointAction& initial) {
  if (passes < 1) throw std::invalid_argument("sweep: passes must be >= 1");
  if (static_cast<int>(initial.size()) != n_cells)
    throw std::invalid_argument("sweep: initial tilts size mismatch");

  SweepResult r;
  r.tilts = initial;
  std::vector<double> values(n_tilts);
  for (int pass = 0; pass < passes; ++pass) {
    std::vector<int> order(n_cells);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, Stream::sweep, pass));
    for (int k = n_cells - 1; k > 0; --k) std::swap(order[k], order[rng.uniform_int(k + 1)]);

    for (const int cell : order) {
      JointAction probe = r.tilts;
      for (int t = 0; t < n_tilts; ++t) {
        probe[cell] = t;
        values[t] = objective(probe);
      }
      const int best = argmax_low_tie(values);
      r.tilts[cell] = best;
      r.value = values[best];
    }
  }
  return r;
}

CsweepResult coordinated_sweep(
    const std::function<std::vector<double>(const JointAction&)>& cell_rewards_fn,
    const graph::CoordinationGraph& g, int n_tilts, int default_tilt, int mp_max_iters) {
  CsweepResult r;
  r.tables = maxplus::make_payoffs(g, n_tilts);

#pragma omp parallel for schedule(dynamic)
  for (int e = 0; e < g.n_edges(); ++e) {
    const auto [i, j] = g.edges[e];
    const double deg_i = static_cast<double>(g.adjacency[i].size());
    const double deg_j = static_cast<double>(g.adjacency[j].size());
    std::vector<double>& table = r.tables.matrices[e];
    JointAction probe(g.n_nodes, default_tilt);
    for (int ai = 0; ai < n_tilts; ++ai)
      for (int aj = 0; aj < n_tilts; ++aj) {
        probe[i] = ai;
        probe[j] = aj;
        const std::vector<double> rewards = cell_rewards_fn(probe);
        table[static_cast<std::size_t>(ai) * n_tilts + aj] = rewards[i] / deg_i + rewards[j] / deg_j;
      }
  }

  auto [tilts, diag] = maxplus::select_actions(g, r.tables, mp_max_iters);
  r.tilts = std::move(tilts);
  r.diag = diag;
  return r;
}

BaselineStats random_policy_baseline(const netsim::Deployment& d,
                                     const learner::Normalizer& norm, int n_configs, int n_users,
                                     std::uint64_t seed) {
  if (n_configs < 2) throw std::invalid_argument("random_policy_baseline: need >= 2 configs");
  if (!norm.calibrated) throw std::invalid_argument("random_policy_baseline: normalizer required");
  const int n_cells = d.n_cells();

  BaselineStats stats;
  stats.values.resize(n_configs);
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n_configs; ++k) {
    Rng rng(derive_seed(seed, Stream::calibration, k));
    JointAction tilts(n_cells);
    for (int& t : tilts) t = rng.uniform_int(d.params.n_tilts);
    const netsim::UserDrop drop =
        netsim::drop_users(d, n_users, derive_seed(seed, Stream::eval_drop, k));
    const netsim::RadioSnapshot snap = netsim::compute_snapshot(d, drop, tilts);
    double mean = 0.0;
    for (int c = 0; c < n_cells; ++c) mean += norm.standardize(snap.cell_rewards[c]);
    stats.values[k] = mean / static_cast<double>(n_cells);
  }

  for (double v : stats.values) stats.mean += v;
  stats.mean /= static_cast<double>(n_configs);
  double sq = 0.0;
  for (double v : stats.values) sq += (v - stats.mean) * (v - stats.mean);
  stats.stddev = std::sqrt(sq / static_cast<double>(n_configs));
  return stats;
}

}  // namespace tiltnet::baselines
