#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "tiltnet/maxplus.hpp"

using namespace tiltnet;
using namespace tiltnet::maxplus;
using graph::CoordinationGraph;
using graph::graph_from_edges;

namespace {

EdgePayoffSet random_payoffs(const CoordinationGraph& g, int n_actions, Rng& rng, double lo = 0.0,
                             double hi = 1.0) {
  EdgePayoffSet p = make_payoffs(g, n_actions);
  for (auto& m : p.matrices)
    for (double& v : m) v = rng.uniform(lo, hi);
  return p;
}

// Random spanning tree over n nodes (random parent for each non-root).
CoordinationGraph random_tree(int n, Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) edges.push_back({rng.uniform_int(v), v});
  return graph_from_edges(n, std::move(edges), "tree");
}

// Connected graph with cycles: spanning tree plus extra distinct edges.
CoordinationGraph random_cyclic(int n, int n_edges, Rng& rng) {
  while (true) {
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v < n; ++v) edges.push_back({rng.uniform_int(v), v});
    std::set<std::pair<int, int>> have;
    for (auto [i, j] : edges) have.insert({std::min(i, j), std::max(i, j)});
    int guard = 0;
    while (static_cast<int>(have.size()) < n_edges && guard++ < 1000) {
      int i = rng.uniform_int(n);
      int j = rng.uniform_int(n);
      if (i == j) continue;
      have.insert({std::min(i, j), std::max(i, j)});
    }
    if (static_cast<int>(have.size()) == n_edges)
      return graph_from_edges(n, {have.begin(), have.end()}, "cyclic");
  }
}

}  // namespace

TEST_CASE("global_value") {
  SUBCASE("single edge reads the matrix entry") {
    const CoordinationGraph g = graph_from_edges(2, {{0, 1}});
    EdgePayoffSet p = make_payoffs(g, 16);
    p.matrices[0][2 * 16 + 5] = 3.25;
    CHECK(global_value(g, p, {2, 5}) == 3.25);
  }
  SUBCASE("all-zero payoffs give zero everywhere") {
    const CoordinationGraph g = graph_from_edges(3, {{0, 1}, {1, 2}});
    const EdgePayoffSet p = make_payoffs(g, 4);
    Rng rng(3);
    for (int k = 0; k < 10; ++k) {
      JointAction a{rng.uniform_int(4), rng.uniform_int(4), rng.uniform_int(4)};
      CHECK(global_value(g, p, a) == 0.0);
    }
  }
  SUBCASE("matches an independent re-summation on a random chain") {
    const CoordinationGraph g = graph_from_edges(3, {{0, 1}, {1, 2}});
    Rng rng(17);
    const EdgePayoffSet p = random_payoffs(g, 16, rng);
    const auto [a, v] = brute_force_argmax(g, p);
    double oracle = 0.0;
    oracle += p.matrices[0][static_cast<std::size_t>(a[0]) * 16 + a[1]];
    oracle += p.matrices[1][static_cast<std::size_t>(a[1]) * 16 + a[2]];
    CHECK(global_value(g, p, a) == doctest::Approx(oracle).epsilon(1e-12));
  }
  SUBCASE("dimension mismatch rejected") {
    const CoordinationGraph g = graph_from_edges(2, {{0, 1}});
    EdgePayoffSet p = make_payoffs(g, 4);
    CHECK_THROWS(global_value(g, p, {0}));
    p.matrices[0].pop_back();
    CHECK_THROWS(global_value(g, p, {0, 0}));
  }
}

TEST_CASE("message passing mechanics") {
  SUBCASE("leaf message is the row max plus the normalizer") {
    const CoordinationGraph g = graph_from_edges(2, {{0, 1}});
    Rng rng(5);
    const EdgePayoffSet p = random_payoffs(g, 4, rng);
    MessageState s = init_messages(g, p);
    pass_messages_once(g, p, s);
    // mu[0] is 0 -> 1; with zero incoming messages it is the column max of Q.
    std::vector<double> expect(4, -1e300);
    for (int a0 = 0; a0 < 4; ++a0)
      for (int a1 = 0; a1 < 4; ++a1)
        expect[a1] = std::max(expect[a1], p.matrices[0][static_cast<std::size_t>(a0) * 4 + a1]);
    double mean = std::accumulate(expect.begin(), expect.end(), 0.0) / 4.0;
    for (int a1 = 0; a1 < 4; ++a1)
      CHECK(s.mu[0][a1] == doctest::Approx(expect[a1] - mean).epsilon(1e-12));
  }
  SUBCASE("all-zero payoffs keep all messages zero") {
    const CoordinationGraph g = graph_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    const EdgePayoffSet p = make_payoffs(g, 4);
    MessageState s = init_messages(g, p);
    const double change = pass_messages_once(g, p, s);
    CHECK(change == 0.0);
    for (const auto& m : s.mu)
      for (double v : m) CHECK(v == 0.0);
  }
  SUBCASE("messages are zero-sum after normalization") {
    const CoordinationGraph g = graph_from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}});
    Rng rng(11);
    const EdgePayoffSet p = random_payoffs(g, 6, rng, -5.0, 5.0);
    MessageState s = init_messages(g, p);
    for (int it = 0; it < 10; ++it) {
      pass_messages_once(g, p, s);
      for (const auto& m : s.mu) {
        double sum = 0.0;
        for (double v : m) sum += v;
        CHECK(std::abs(sum) < 1e-9);
      }
    }
  }
  SUBCASE("3-node tree decodes the optimum after two synchronous rounds") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
      const CoordinationGraph g = graph_from_edges(3, {{0, 1}, {1, 2}});
      const EdgePayoffSet p = random_payoffs(g, 16, rng);
      MessageState s = init_messages(g, p);
      pass_messages_once(g, p, s);
      pass_messages_once(g, p, s);
      const JointAction decoded = decode_greedy(g, p, s);
      const auto [best, value] = brute_force_argmax(g, p);
      CHECK(decoded == best);
    }
  }
}

TEST_CASE("select_actions") {
  SUBCASE("no-edge graphs are rejected") {
    const CoordinationGraph g = graph_from_edges(1, {});
    const EdgePayoffSet p = make_payoffs(g, 4);
    CHECK_THROWS(select_actions(g, p));
  }
  SUBCASE("single edge reduces to the matrix argmax") {
    const CoordinationGraph g = graph_from_edges(2, {{0, 1}});
    Rng rng(31);
    const EdgePayoffSet p = random_payoffs(g, 16, rng);
    const auto [a, diag] = select_actions(g, p);
    const auto [ba, bv] = brute_force_argmax(g, p);
    CHECK(a == ba);
    CHECK(diag.best_value == doctest::Approx(bv).epsilon(1e-12));
  }
  SUBCASE("exact on random trees") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + rng.uniform_int(7);
      const CoordinationGraph g = random_tree(n, rng);
      const EdgePayoffSet p = random_payoffs(g, 4, rng);
      const auto [a, diag] = select_actions(g, p, 40);
      const auto [ba, bv] = brute_force_argmax(g, p);
      CHECK(std::abs(diag.best_value - bv) <= 1e-9);
      CHECK(global_value(g, p, a) == doctest::Approx(bv).epsilon(1e-9));
    }
  }
  SUBCASE("anytime value is monotone and termination is bounded") {
    Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
      const CoordinationGraph g = random_cyclic(6, 9, rng);
      const EdgePayoffSet p = random_payoffs(g, 4, rng);
      MessageState s = init_messages(g, p);
      double prev_best = s.best_value;
      for (int it = 0; it < 25; ++it) {
        pass_messages_once(g, p, s);
        CHECK(s.best_value >= prev_best);
        prev_best = s.best_value;
        const double recomputed = global_value(g, p, s.best_action);
        CHECK(recomputed == doctest::Approx(s.best_value).epsilon(1e-12));
      }
      const auto [a, diag] = select_actions(g, p, 40);
      CHECK(diag.iterations <= 40);
    }
  }
  SUBCASE("payoff shift moves every value by the same constant") {
    Rng rng(59);
    const CoordinationGraph g = random_cyclic(6, 9, rng);
    EdgePayoffSet p = random_payoffs(g, 4, rng);
    const auto [a1, d1] = select_actions(g, p, 40);
    const double kappa = 2.5;
    for (double& v : p.matrices[3]) v += kappa;
    const auto [a2, d2] = select_actions(g, p, 40);
    CHECK(a1 == a2);
    CHECK(d2.best_value == doctest::Approx(d1.best_value + kappa).epsilon(1e-9));
  }
  SUBCASE("cyclic instances stay close to the optimum") {
    Rng rng(61);
    double ratio_sum = 0.0;
    int n_inst = 40;
    for (int trial = 0; trial < n_inst; ++trial) {
      const CoordinationGraph g = random_cyclic(6, 9, rng);
      const EdgePayoffSet p = random_payoffs(g, 4, rng);
      const auto [a, diag] = select_actions(g, p, 40);
      const auto [ba, bv] = brute_force_argmax(g, p);
      ratio_sum += diag.best_value / bv;
      CHECK(diag.best_value <= bv + 1e-9);
    }
    CHECK(ratio_sum / n_inst >= 0.9);
  }
}

TEST_CASE("brute force oracle") {
  SUBCASE("unique maximum found") {
    const CoordinationGraph g = graph_from_edges(2, {{0, 1}});
    EdgePayoffSet p = make_payoffs(g, 16);
    p.matrices[0][3 * 16 + 7] = 9.0;
    const auto [a, v] = brute_force_argmax(g, p);
    CHECK(a == JointAction{3, 7});
    CHECK(v == 9.0);
  }
  SUBCASE("ties go to the lexicographically smallest action") {
    const CoordinationGraph g = graph_from_edges(3, {{0, 1}, {1, 2}});
    const EdgePayoffSet p = make_payoffs(g, 4);
    const auto [a, v] = brute_force_argmax(g, p);
    CHECK(a == JointAction{0, 0, 0});
    CHECK(v == 0.0);
  }
  SUBCASE("dominates random sampling") {
    const CoordinationGraph g = graph_from_edges(3, {{0, 1}, {1, 2}});
    Rng rng(73);
    const EdgePayoffSet p = random_payoffs(g, 16, rng, -2.0, 2.0);
    const auto [a, v] = brute_force_argmax(g, p);
    for (int k = 0; k < 1000; ++k) {
      const JointAction r{rng.uniform_int(16), rng.uniform_int(16), rng.uniform_int(16)};
      CHECK(v >= global_value(g, p, r));
    }
  }
  SUBCASE("guard against oversized instances") {
    const CoordinationGraph g = graph_from_edges(8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}});
    const EdgePayoffSet p = make_payoffs(g, 16);  // 16^8 > 1e7
    CHECK_THROWS(brute_force_argmax(g, p));
  }
}

TEST_CASE("epsilon_greedy") {
  const std::vector<int> counts(8, 16);
  const JointAction base{0, 1, 2, 3, 4, 5, 6, 7};
  SUBCASE("epsilon 0 is the identity") {
    Rng rng(1);
    CHECK(epsilon_greedy(base, 0.0, counts, rng) == base);
  }
  SUBCASE("epsilon 1 resamples every agent uniformly (chi-squared)") {
    Rng rng(2);
    std::vector<long> hist(16, 0);
    const int draws = 10000;
    for (int k = 0; k < draws; ++k) {
      const JointAction a = epsilon_greedy(base, 1.0, counts, rng);
      for (int v : a) hist[v]++;
    }
    const double expected = static_cast<double>(draws) * 8 / 16.0;
    double chi2 = 0.0;
    for (long h : hist) chi2 += (h - expected) * (h - expected) / expected;
    // 15 dof: critical value at p = 0.01 is 30.58.
    CHECK(chi2 < 30.58);
  }
  SUBCASE("epsilon 0.5 replaces about half the entries") {
    Rng rng(3);
    long replaced = 0;
    const int draws = 4000;
    for (int k = 0; k < draws; ++k) {
      const JointAction a = epsilon_greedy(base, 0.5, counts, rng);
      for (int i = 0; i < 8; ++i)
        if (a[i] != base[i]) replaced++;
    }
    // Replacement may redraw the original value: P(change) = eps * 15/16.
    const double mean = draws * 8 * 0.5 * 15.0 / 16.0;
    const double sd = std::sqrt(draws * 8 * 0.5 * (15.0 / 16.0) * (1 - 0.5 * 15.0 / 16.0));
    CHECK(std::abs(replaced - mean) < 5 * sd);
  }
  SUBCASE("out-of-range epsilon rejected") {
    Rng rng(4);
    CHECK_THROWS(epsilon_greedy(base, 1.5, counts, rng));
    CHECK_THROWS(epsilon_greedy(base, -0.1, counts, rng));
  }
}
