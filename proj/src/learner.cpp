#include "tiltnet/learner.hpp"

#include <cmath>
#include <stdexcept>

namespace tiltnet::learner {

namespace {

double population_std(const std::vector<double>& xs, double mean) {
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return std::sqrt(sq / static_cast<double>(xs.size()));
}

std::vector<double> concat_edge_obs(const std::vector<double>& obs, int obs_dim, int i, int j) {
  std::vector<double> x(static_cast<std::size_t>(2) * obs_dim);
  for (int k = 0; k < obs_dim; ++k) {
    x[k] = obs[static_cast<std::size_t>(i) * obs_dim + k];
    x[obs_dim + k] = obs[static_cast<std::size_t>(j) * obs_dim + k];
  }
  return x;
}

}  // namespace

std::vector<double> Normalizer::normalize_observations(const std::vector<double>& raw) const {
  if (!calibrated) throw std::logic_error("normalizer used before calibration");
  std::vector<double> out(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) out[k] = raw[k] / max_sinr_db;
  return out;
}

Normalizer normalizer_from_samples(double max_sinr_db, const std::vector<double>& reward_samples) {
  if (reward_samples.size() < 2)
    throw std::invalid_argument("normalizer_from_samples: need at least two samples");
  if (max_sinr_db <= 0.0)
    throw std::invalid_argument("normalizer_from_samples: max SINR must be positive in dB");
  double mean = 0.0;
  for (double r : reward_samples) mean += r;
  mean /= static_cast<double>(reward_samples.size());
  const double std = population_std(reward_samples, mean);
  if (std < 1e-12)
    throw std::invalid_argument("normalizer_from_samples: degenerate reward sample (zero variance)");
  Normalizer n;
  n.max_sinr_db = max_sinr_db;
  n.reward_mean = mean;
  n.reward_std = std;
  n.calibrated = true;
  return n;
}

Normalizer calibrate(const netsim::Deployment& d, int n_random_configs, int n_users,
                     std::uint64_t seed) {
  if (n_random_configs < 2) throw std::invalid_argument("calibrate: need at least two configs");
  const int n_cells = d.n_cells();

  std::vector<double> config_max_sinr(n_random_configs);
  std::vector<std::vector<double>> config_rewards(n_random_configs);

#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n_random_configs; ++k) {
    Rng rng(derive_seed(seed, Stream::calibration, 2 * static_cast<std::uint64_t>(k)));
    JointAction tilts(n_cells);
    for (int& t : tilts) t = rng.uniform_int(d.params.n_tilts);
    const netsim::UserDrop drop = netsim::drop_users(
        d, n_users, derive_seed(seed, Stream::calibration, 2 * static_cast<std::uint64_t>(k) + 1));
    const netsim::RadioSnapshot snap = netsim::compute_snapshot(d, drop, tilts);
    double mx = -1e300;
    for (double s : snap.sinr) mx = std::max(mx, netsim::linear_to_db(s));
    config_max_sinr[k] = mx;
    config_rewards[k] = snap.cell_rewards;
  }

  double max_sinr = -1e300;
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(n_random_configs) * n_cells);
  for (int k = 0; k < n_random_configs; ++k) {
    max_sinr = std::max(max_sinr, config_max_sinr[k]);
    samples.insert(samples.end(), config_rewards[k].begin(), config_rewards[k].end());
  }
  return normalizer_from_samples(max_sinr, samples);
}

double epsilon_at(const Hyper& h, int step) {
  if (step >= h.epsilon_decay_steps) return h.epsilon_final;
  return h.epsilon_initial +
         (h.epsilon_final - h.epsilon_initial) * static_cast<double>(step) / h.epsilon_decay_steps;
}

EdgeQ make_edge_q(QMode mode, int n_edges, const Hyper& hyper, std::uint64_t seed, int obs_dim,
                  int n_actions) {
  if (n_edges < 1) throw std::invalid_argument("make_edge_q: need at least one edge");
  EdgeQ q;
  q.mode = mode;
  q.obs_dim = obs_dim;
  q.n_actions = n_actions;
  const int n_nets = mode == QMode::shared ? 1 : n_edges;
  const std::vector<int> dims{2 * obs_dim, hyper.hidden_width, hyper.hidden_width,
                              n_actions * n_actions};
  for (int k = 0; k < n_nets; ++k) {
    q.online.push_back(neural::make_mlp(dims, derive_seed(seed, Stream::net_init, k)));
    q.opt.push_back(neural::make_adam(q.online.back(), hyper.learning_rate));
  }
  for (const auto& net : q.online) q.target.push_back(neural::clone_into_target(net));
  return q;
}

void sync_targets(EdgeQ& q) {
  for (int k = 0; k < q.n_nets(); ++k) q.target[k] = neural::clone_into_target(q.online[k]);
}

maxplus::EdgePayoffSet edge_payoffs(const EdgeQ& q, const graph::CoordinationGraph& g,
                                    const std::vector<double>& norm_obs, bool use_target) {
  if (static_cast<int>(norm_obs.size()) != g.n_nodes * q.obs_dim)
    throw std::invalid_argument("edge_payoffs: observation size mismatch");
  maxplus::EdgePayoffSet p = maxplus::make_payoffs(g, q.n_actions);
  const auto& nets = use_target ? q.target : q.online;
  for (int e = 0; e < g.n_edges(); ++e) {
    const auto [i, j] = g.edges[e];
    const std::vector<double> x = concat_edge_obs(norm_obs, q.obs_dim, i, j);
    p.matrices[e] = neural::forward(nets[q.net_index(e)], x);
  }
  return p;
}

ActResult act(const EdgeQ& q, const graph::CoordinationGraph& g,
              const std::vector<double>& norm_obs, double epsilon, Rng& rng, int mp_max_iters) {
  const maxplus::EdgePayoffSet p = edge_payoffs(q, g, norm_obs);
  auto [greedy, diag] = maxplus::select_actions(g, p, mp_max_iters);
  ActResult r;
  r.greedy = greedy;
  r.action = maxplus::epsilon_greedy(greedy, epsilon, p.action_counts, rng);
  r.diag = diag;
  return r;
}

double edge_reward(const std::vector<double>& rewards, const graph::CoordinationGraph& g,
                   int edge) {
  const auto [i, j] = g.edges[edge];
  return rewards[i] / static_cast<double>(g.adjacency[i].size()) +
         rewards[j] / static_cast<double>(g.adjacency[j].size());
}

TrainStepStats train_step(EdgeQ& q, const ReplayBuffer& buffer, const graph::CoordinationGraph& g,
                          const Hyper& hyper, Rng& rng) {
  if (buffer.size() < hyper.batch_size)
    throw std::logic_error("train_step: buffer smaller than batch size");
  const std::vector<int> batch = buffer.sample_indices(hyper.batch_size, rng);

  std::vector<neural::Gradients> grads;
  grads.reserve(q.n_nets());
  for (int k = 0; k < q.n_nets(); ++k) grads.push_back(neural::make_gradients(q.online[k]));

  const int A = q.n_actions;
  const double inv_batch = 1.0 / static_cast<double>(hyper.batch_size);
  neural::ForwardCache cache;
  std::vector<double> gout(static_cast<std::size_t>(A) * A, 0.0);

  double sq_sum = 0.0;
  long count = 0;
  for (const int idx : batch) {
    const Transition& tr = buffer.at(idx);
    for (int e = 0; e < g.n_edges(); ++e) {
      const auto [i, j] = g.edges[e];
      const int net = q.net_index(e);
      const std::vector<double> x = concat_edge_obs(tr.obs, q.obs_dim, i, j);
      const std::vector<double>& out = neural::forward(q.online[net], x, cache);
      const std::size_t a_idx = static_cast<std::size_t>(tr.action[i]) * A + tr.action[j];
      const double q_sa = out[a_idx];

      double target = edge_reward(tr.rewards, g, e);
      if (hyper.gamma != 0.0) {
        const std::vector<double> x2 = concat_edge_obs(tr.next_obs, q.obs_dim, i, j);
        const std::vector<double> out2 = neural::forward(q.target[net], x2);
        target += hyper.gamma *
                  out2[static_cast<std::size_t>(tr.next_greedy[i]) * A + tr.next_greedy[j]];
      }
      const double delta = target - q_sa;
      if (!std::isfinite(delta)) throw std::runtime_error("train_step: non-finite TD error");
      sq_sum += delta * delta;
      count++;

      // d/dtheta of mean over the batch of 1/2 delta^2, summed over edges.
      gout[a_idx] = -delta * inv_batch;
      neural::backward_into(q.online[net], cache, gout, 1.0, grads[net]);
      gout[a_idx] = 0.0;
    }
  }

  TrainStepStats stats;
  stats.batch = hyper.batch_size;
  stats.mean_sq_td = sq_sum / static_cast<double>(count);
  for (int k = 0; k < q.n_nets(); ++k) {
    stats.grad_norm = std::max(stats.grad_norm, neural::clip_global_norm(grads[k], hyper.grad_clip_norm));
    neural::adam_step(q.online[k], q.opt[k], grads[k]);
  }
  return stats;
}

Policy greedy_policy(const EdgeQ& q, const graph::CoordinationGraph& g, int mp_max_iters) {
  // The copy keeps evaluation independent of later training updates.
  EdgeQ frozen = q;
  const graph::CoordinationGraph* gp = &g;
  return [frozen, gp, mp_max_iters](const std::vector<double>& norm_obs) {
    Rng unused(0);
    return act(frozen, *gp, norm_obs, 0.0, unused, mp_max_iters).greedy;
  };
}

EvalResult evaluate(const netsim::Deployment& d, const Normalizer& norm, const Policy& policy,
                    int n_drops, std::uint64_t eval_seed, int n_users, int default_tilt) {
  if (n_drops < 1) throw std::invalid_argument("evaluate: n_drops must be >= 1");
  EvalResult r;
  const std::vector<EvalDrop> drops =
      evaluate_detailed(d, norm, policy, n_drops, eval_seed, n_users, default_tilt);
  for (const auto& ed : drops) r.per_drop.push_back(ed.reward);
  for (double v : r.per_drop) r.mean += v;
  r.mean /= static_cast<double>(n_drops);
  r.stddev = population_std(r.per_drop, r.mean);
  return r;
}

std::vector<EvalDrop> evaluate_detailed(const netsim::Deployment& d, const Normalizer& norm,
                                        const Policy& policy, int n_drops, std::uint64_t eval_seed,
                                        int n_users, int default_tilt) {
  std::vector<EvalDrop> out(n_drops);
  const int n_cells = d.n_cells();
  const JointAction ref_tilts(n_cells, default_tilt);
  for (int k = 0; k < n_drops; ++k) {
    const netsim::UserDrop drop =
        netsim::drop_users(d, n_users, derive_seed(eval_seed, Stream::eval_drop, k));
    const netsim::LinkGeometry geo = netsim::compute_geometry(d, drop);
    const netsim::RadioSnapshot before = netsim::compute_snapshot(d, geo, drop, ref_tilts);
    const std::vector<double> norm_obs = norm.normalize_observations(
        netsim::all_observations(before, d.params.empty_cell_obs_db));
    EvalDrop& ed = out[k];
    ed.action = policy(norm_obs);
    const netsim::RadioSnapshot after = netsim::compute_snapshot(d, geo, drop, ed.action);
    ed.cell_rewards.resize(n_cells);
    double mean = 0.0;
    for (int c = 0; c < n_cells; ++c) {
      ed.cell_rewards[c] = norm.standardize(after.cell_rewards[c]);
      mean += ed.cell_rewards[c];
    }
    ed.reward = mean / static_cast<double>(n_cells);
    ed.user_throughput = after.throughput;
  }
  return out;
}

TrainResult run_training(const TrainConfig& cfg) {
  if (cfg.deployment == nullptr || cfg.graph == nullptr)
    throw std::invalid_argument("run_training: deployment and graph required");
  if (!cfg.normalizer.calibrated) throw std::invalid_argument("run_training: normalizer required");
  const netsim::Deployment& d = *cfg.deployment;
  const graph::CoordinationGraph& g = *cfg.graph;
  if (g.n_nodes != d.n_cells())
    throw std::invalid_argument("run_training: graph does not match deployment");

  TrainResult result;
  result.final_q = make_edge_q(cfg.mode, g.n_edges(), cfg.hyper, cfg.seed, 4, d.params.n_tilts);
  if (cfg.budget <= 0) {
    result.best_q = result.final_q;
    return result;
  }

  EdgeQ& q = result.final_q;
  ReplayBuffer buffer(cfg.hyper.replay_capacity);
  Rng explore_rng(derive_seed(cfg.seed, Stream::exploration));
  Rng replay_rng(derive_seed(cfg.seed, Stream::replay));

  const double obs_floor = d.params.empty_cell_obs_db;
  JointAction tilts(d.n_cells(), cfg.default_tilt);
  netsim::UserDrop drop = netsim::drop_users(d, cfg.n_users, derive_seed(cfg.seed, Stream::user_drop, 0));
  netsim::RadioSnapshot snap = netsim::compute_snapshot(d, drop, tilts);
  std::vector<double> obs =
      cfg.normalizer.normalize_observations(netsim::all_observations(snap, obs_floor));

  bool have_pending = false;
  Transition pending;

  long train_steps = 0;
  double loss_sum = 0.0;
  long loss_count = 0;
  double iters_sum = 0.0;
  long iters_count = 0;
  result.best_eval = -1e300;

  const auto log_row = [&](int step) {
    MetricsRow row;
    row.step = step;
    row.epsilon = epsilon_at(cfg.hyper, step);
    row.has_loss = loss_count > 0;
    row.loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
    row.mp_iters = iters_count > 0 ? iters_sum / static_cast<double>(iters_count) : 0.0;
    const EvalResult ev = evaluate(d, cfg.normalizer, greedy_policy(q, g, cfg.hyper.mp_max_iters),
                                   cfg.eval_drops, cfg.eval_seed, cfg.n_users, cfg.default_tilt);
    row.eval_mean = ev.mean;
    result.rows.push_back(row);
    loss_sum = 0.0;
    loss_count = 0;
    iters_sum = 0.0;
    iters_count = 0;
    if (ev.mean > result.best_eval) {
      result.best_eval = ev.mean;
      result.best_q = q;
    }
    result.final_eval = ev.mean;
  };

  for (int t = 0; t < cfg.budget; ++t) {
    if (t % cfg.eval_every == 0) log_row(t);

    const double eps = epsilon_at(cfg.hyper, t);
    const ActResult acted = act(q, g, obs, eps, explore_rng, cfg.hyper.mp_max_iters);
    iters_sum += acted.diag.iterations;
    iters_count++;

    if (have_pending) {
      pending.next_obs = obs;
      pending.next_greedy = acted.greedy;
      buffer.push(std::move(pending));
    }

    tilts = acted.action;
    drop = netsim::drop_users(d, cfg.n_users, derive_seed(cfg.seed, Stream::user_drop, t + 1));
    snap = netsim::compute_snapshot(d, drop, tilts);

    pending = Transition{};
    pending.obs = obs;
    pending.action = acted.action;
    pending.rewards.resize(d.n_cells());
    for (int c = 0; c < d.n_cells(); ++c)
      pending.rewards[c] = cfg.normalizer.standardize(snap.cell_rewards[c]);
    have_pending = true;

    obs = cfg.normalizer.normalize_observations(netsim::all_observations(snap, obs_floor));

    if (buffer.size() >= cfg.hyper.batch_size && t + 1 >= cfg.hyper.learning_starts) {
      const TrainStepStats stats = train_step(q, buffer, g, cfg.hyper, replay_rng);
      loss_sum += stats.mean_sq_td;
      loss_count++;
      train_steps++;
      if (train_steps % cfg.hyper.target_update_crl == 0) sync_targets(q);
    }
  }

  // Complete the trailing transition with one final greedy decode.
  if (have_pending) {
    Rng unused(0);
    const ActResult last = act(q, g, obs, 0.0, unused, cfg.hyper.mp_max_iters);
    pending.next_obs = obs;
    pending.next_greedy = last.greedy;
    buffer.push(std::move(pending));
  }

  log_row(cfg.budget);
  result.train_steps = train_steps;
  return result;
}

}  // namespace tiltnet::learner
