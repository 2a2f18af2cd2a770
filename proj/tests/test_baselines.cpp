#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "tiltnet/baselines.hpp"

using namespace tiltnet;
using namespace tiltnet::baselines;
using graph::graph_from_edges;

TEST_CASE("sweep") {
  SUBCASE("single cell: exhaustive optimum over the tilts") {
    // Objective with a unique maximum at tilt 11.
    const auto objective = [](const JointAction& a) {
      return -std::abs(a[0] - 11.0);
    };
    const SweepResult r = sweep(objective, 1, 16, 1, 3, {0});
    CHECK(r.tilts == JointAction{11});
    CHECK(r.value == 0.0);
  }
  SUBCASE("cell with no influence keeps the lowest tilt") {
    // Cell 1's entry is ignored by the objective.
    const auto objective = [](const JointAction& a) {
      return -std::abs(a[0] - 5.0);
    };
    const SweepResult r = sweep(objective, 2, 16, 1, 3, {7, 7});
    CHECK(r.tilts[0] == 5);
    CHECK(r.tilts[1] == 0);  // all 16 values tie; lowest index wins
  }
  SUBCASE("visit order does not change the per-cell argmax rule") {
    const auto objective = [](const JointAction& a) {
      return -std::abs(a[0] - 3.0) - std::abs(a[1] - 9.0);
    };
    // Separable objective: any visit order finds the same optimum.
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
      const SweepResult r = sweep(objective, 2, 16, 1, seed, {8, 8});
      CHECK(r.tilts == JointAction{3, 9});
    }
  }
  SUBCASE("one pass can be suboptimal on a coupled toy; gap reported") {
    // Payoff prefers (0,0) and (15,15); starting at (15,0) a single greedy
    // pass may settle short of the 256-configuration optimum.
    const auto objective = [](const JointAction& a) {
      return a[0] * a[1] + (15 - a[0]) * (15 - a[1]);
    };
    double best = -1e300;
    JointAction best_a;
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) {
        const double v = objective({i, j});
        if (v > best) {
          best = v;
          best_a = {i, j};
        }
      }
    CHECK(best == 225.0);
    const SweepResult r = sweep(objective, 2, 16, 1, 11, {8, 8});
    CHECK(r.value <= best);
    // The sweep reaches a coordinate-wise local optimum.
    for (int t = 0; t < 16; ++t) {
      JointAction probe = r.tilts;
      probe[0] = t;
      CHECK(objective(probe) <= r.value + 1e-12);
    }
  }
  SUBCASE("multiple passes never hurt") {
    const auto objective = [](const JointAction& a) {
      return a[0] * a[1] + (15 - a[0]) * (15 - a[1]);
    };
    const SweepResult one = sweep(objective, 2, 16, 1, 11, {8, 8});
    const SweepResult three = sweep(objective, 2, 16, 3, 11, {8, 8});
    CHECK(three.value >= one.value);
  }
  SUBCASE("invalid arguments") {
    const auto objective = [](const JointAction&) { return 0.0; };
    CHECK_THROWS(sweep(objective, 2, 16, 0, 1, {0, 0}));
    CHECK_THROWS(sweep(objective, 2, 16, 1, 1, {0}));
  }
}

TEST_CASE("coordinated sweep") {
  SUBCASE("single edge: table argmax equals the exhaustive pair optimum") {
    const auto g = graph_from_edges(2, {{0, 1}});
    const auto rewards_fn = [](const JointAction& a) {
      // Smooth coupled objective split into per-cell rewards.
      const double r0 = -std::abs(a[0] - 4.0) - 0.5 * std::abs(a[0] - a[1]);
      const double r1 = -std::abs(a[1] - 12.0) - 0.5 * std::abs(a[0] - a[1]);
      return std::vector<double>{r0, r1};
    };
    const CsweepResult r = coordinated_sweep(rewards_fn, g, 16, 8, 40);

    double best = -1e300;
    JointAction best_a;
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) {
        const std::vector<double> rw = rewards_fn({i, j});
        const double v = rw[0] + rw[1];  // degree 1 on both ends
        if (v > best) {
          best = v;
          best_a = {i, j};
        }
      }
    CHECK(r.tilts == best_a);
  }
  SUBCASE("constant tables give the lexicographically smallest action") {
    const auto g = graph_from_edges(3, {{0, 1}, {1, 2}});
    const auto rewards_fn = [](const JointAction&) {
      return std::vector<double>{1.0, 1.0, 1.0};
    };
    const CsweepResult r = coordinated_sweep(rewards_fn, g, 16, 8, 40);
    CHECK(r.tilts == JointAction{0, 0, 0});
  }
  SUBCASE("tables hold the credit-split local rewards") {
    const auto g = graph_from_edges(3, {{0, 1}, {1, 2}});
    const auto rewards_fn = [](const JointAction& a) {
      return std::vector<double>{static_cast<double>(a[0]), static_cast<double>(a[1]),
                                 static_cast<double>(a[2])};
    };
    const CsweepResult r = coordinated_sweep(rewards_fn, g, 4, 2, 40);
    // Edge (0,1): deg(0)=1, deg(1)=2 -> table[ai][aj] = ai + aj/2.
    for (int ai = 0; ai < 4; ++ai)
      for (int aj = 0; aj < 4; ++aj)
        CHECK(r.tables.matrices[0][static_cast<std::size_t>(ai) * 4 + aj] ==
              doctest::Approx(ai + aj / 2.0));
  }
}

TEST_CASE("dqn") {
  learner::Hyper hyper;
  hyper.batch_size = 8;
  hyper.replay_capacity = 500;
  hyper.epsilon_decay_steps = 60;

  // A true single-cell deployment (one station, one sector).
  const netsim::Deployment d1 = netsim::make_deployment({{0.0, 0.0}}, {{0.0}});
  const learner::Normalizer norm1 = learner::calibrate(d1, 40, 120, 7);

  SUBCASE("single cell: independent and shared modes coincide") {
    DqnConfig cfg;
    cfg.deployment = &d1;
    cfg.normalizer = norm1;
    cfg.hyper = hyper;
    cfg.n_users = 120;
    cfg.budget = 40;
    cfg.eval_every = 20;
    cfg.eval_drops = 2;
    cfg.seed = 5;
    cfg.mode = DqnMode::independent;
    const DqnResult a = train_dqn(cfg);
    cfg.mode = DqnMode::shared;
    const DqnResult b = train_dqn(cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
      CHECK(a.rows[k].eval_mean == b.rows[k].eval_mean);
      CHECK(a.rows[k].loss == b.rows[k].loss);
    }
    CHECK(a.final_policy.online[0].weights == b.final_policy.online[0].weights);
  }

  SUBCASE("deterministic for a fixed seed") {
    DqnConfig cfg;
    cfg.deployment = &d1;
    cfg.normalizer = norm1;
    cfg.hyper = hyper;
    cfg.n_users = 120;
    cfg.budget = 30;
    cfg.eval_every = 15;
    cfg.eval_drops = 2;
    cfg.seed = 9;
    const DqnResult a = train_dqn(cfg);
    const DqnResult b = train_dqn(cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k)
      CHECK(a.rows[k].eval_mean == b.rows[k].eval_mean);
  }

  SUBCASE("budget 0: empty metrics") {
    DqnConfig cfg;
    cfg.deployment = &d1;
    cfg.normalizer = norm1;
    cfg.hyper = hyper;
    cfg.budget = 0;
    const DqnResult r = train_dqn(cfg);
    CHECK(r.rows.empty());
  }
}

TEST_CASE("dqn bandit fixed point") {
  // Frozen single state, reward depends only on the own action with a unique
  // optimum: the greedy action converges to it.
  learner::Hyper hyper;
  hyper.batch_size = 8;
  hyper.learning_rate = 1e-3;
  CellQPolicy p = make_cell_q(DqnMode::shared, 1, hyper, 3, 4, 16);
  learner::ReplayRing<CellTransition> buffer(256);
  const std::array<double, 4> obs{0.1, -0.2, 0.3, 0.5};
  const int optimum = 6;
  Rng rng(4);
  Rng replay(5);
  neural::ForwardCache cache;
  std::vector<double> gout(16, 0.0);
  for (int it = 0; it < 3000; ++it) {
    CellTransition tr;
    tr.obs = obs;
    tr.next_obs = obs;
    tr.action = rng.uniform_int(16);
    tr.reward = tr.action == optimum ? 1.0 : -0.1 * std::abs(tr.action - optimum);
    buffer.push(tr);
    if (buffer.size() < hyper.batch_size) continue;
    const std::vector<int> batch = buffer.sample_indices(hyper.batch_size, replay);
    neural::Gradients grads = neural::make_gradients(p.online[0]);
    for (int idx : batch) {
      const CellTransition& t = buffer.at(idx);
      const std::vector<double>& out = neural::forward(p.online[0], t.obs, cache);
      const double delta = t.reward - out[t.action];
      gout[t.action] = -delta / hyper.batch_size;
      neural::backward_into(p.online[0], cache, gout, 1.0, grads);
      gout[t.action] = 0.0;
    }
    neural::clip_global_norm(grads, hyper.grad_clip_norm);
    neural::adam_step(p.online[0], p.opt[0], grads);
  }
  const JointAction greedy = dqn_greedy(p, {0.1, -0.2, 0.3, 0.5});
  CHECK(greedy[0] == optimum);
}

TEST_CASE("random policy baseline") {
  const netsim::Deployment d = netsim::generate_deployment(2, 42);
  const learner::Normalizer norm = learner::calibrate(d, 200, 400, 7);

  SUBCASE("post-calibration mean is near zero, std positive") {
    const BaselineStats stats = random_policy_baseline(d, norm, 200, 400, 31);
    // Standard error of the mean of per-cell z-scores.
    CHECK(std::abs(stats.mean) < 4.0 * stats.stddev / std::sqrt(200.0) + 0.05);
    CHECK(stats.stddev > 0.0);
  }
  SUBCASE("deterministic per seed") {
    const BaselineStats a = random_policy_baseline(d, norm, 16, 200, 5);
    const BaselineStats b = random_policy_baseline(d, norm, 16, 200, 5);
    CHECK(a.values == b.values);
  }
  SUBCASE("needs at least two configs") {
    CHECK_THROWS(random_policy_baseline(d, norm, 1, 100, 5));
  }
}

TEST_CASE("random-weights value networks evaluate near the random baseline") {
  const netsim::Deployment d = netsim::generate_deployment(2, 42);
  const auto g = graph_from_edges(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 5}});
  const learner::Normalizer norm = learner::calibrate(d, 200, 400, 7);
  const BaselineStats rb = random_policy_baseline(d, norm, 200, 400, 31);

  learner::Hyper hyper;
  learner::EdgeQ q = learner::make_edge_q(learner::QMode::shared, g.n_edges(), hyper, 99);
  Rng wrng(100);
  const double limit = std::sqrt(6.0 / hyper.hidden_width);
  for (double& w : q.online[0].weights.back()) w = wrng.uniform(-limit, limit);
  const learner::EvalResult ev =
      learner::evaluate(d, norm, learner::greedy_policy(q, g, 40), 10, 900001, 400, 8);
  // An arbitrary untrained policy scores near the random-action mean, well
  // inside the random baseline's dispersion.
  CHECK(std::abs(ev.mean - rb.mean) < 3.0 * rb.stddev);
}

TEST_CASE("evaluate of a random policy is consistent with calibration moments") {
  const netsim::Deployment d = netsim::generate_deployment(2, 42);
  const learner::Normalizer norm = learner::calibrate(d, 300, 500, 7);
  Rng rng(77);
  const learner::Policy random_policy = [&](const std::vector<double>&) {
    JointAction a(d.n_cells());
    for (int& t : a) t = rng.uniform_int(16);
    return a;
  };
  const learner::EvalResult r = learner::evaluate(d, norm, random_policy, 10, 55, 500, 8);
  // Mean per-cell z-score over 10 drops x 6 cells: near 0 within a few
  // standard errors (cells within a drop are correlated; be generous).
  CHECK(std::abs(r.mean) < 3.0 / std::sqrt(10.0 * d.n_cells()) + 0.3);
}
