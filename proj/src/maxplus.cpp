#include "tiltnet/maxplus.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace tiltnet::maxplus {

namespace {

void check_dims(const graph::CoordinationGraph& g, const EdgePayoffSet& p) {
  if (static_cast<int>(p.action_counts.size()) != g.n_nodes)
    throw std::invalid_argument("maxplus: action_counts size does not match graph");
  if (static_cast<int>(p.matrices.size()) != g.n_edges())
    throw std::invalid_argument("maxplus: one payoff matrix per edge required");
  for (int e = 0; e < g.n_edges(); ++e) {
    const auto [i, j] = g.edges[e];
    const std::size_t want = static_cast<std::size_t>(p.action_counts[i]) * p.action_counts[j];
    if (p.matrices[e].size() != want)
      throw std::invalid_argument("maxplus: payoff matrix dimension mismatch");
  }
}

// Incoming message indices per node, built once per invocation.
std::vector<std::vector<std::pair<int, int>>> incoming_index(const graph::CoordinationGraph& g) {
  std::vector<std::vector<std::pair<int, int>>> in(g.n_nodes);  // (from, mu index)
  for (int e = 0; e < g.n_edges(); ++e) {
    const auto [i, j] = g.edges[e];
    in[j].push_back({i, 2 * e + 0});
    in[i].push_back({j, 2 * e + 1});
  }
  return in;
}

std::uint64_t hash_messages(const MessageState& s) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a over quantized entries
  for (const auto& m : s.mu)
    for (double v : m) {
      const std::int64_t q = std::llround(v * 1e9);
      const std::uint64_t u = static_cast<std::uint64_t>(q);
      for (int b = 0; b < 8; ++b) {
        h ^= (u >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
  return h;
}

}  // namespace

std::string stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::cycle: return "cycle";
    case StopReason::max_iters: return "max_iters";
  }
  throw std::logic_error("stop_reason_name: bad enum");
}

EdgePayoffSet make_payoffs(const graph::CoordinationGraph& g, int n_actions) {
  EdgePayoffSet p;
  p.action_counts.assign(g.n_nodes, n_actions);
  p.matrices.resize(g.n_edges());
  for (int e = 0; e < g.n_edges(); ++e) {
    const auto [i, j] = g.edges[e];
    p.matrices[e].assign(static_cast<std::size_t>(p.action_counts[i]) * p.action_counts[j], 0.0);
  }
  return p;
}

double global_value(const graph::CoordinationGraph& g, const EdgePayoffSet& p,
                    const JointAction& a) {
  check_dims(g, p);
  if (static_cast<int>(a.size()) != g.n_nodes)
    throw std::invalid_argument("global_value: action size mismatch");
  double sum = 0.0;
  for (int e = 0; e < g.n_edges(); ++e) {
    const auto [i, j] = g.edges[e];
    sum += p.matrices[e][static_cast<std::size_t>(a[i]) * p.action_counts[j] + a[j]];
  }
  return sum;
}

MessageState init_messages(const graph::CoordinationGraph& g, const EdgePayoffSet& p) {
  check_dims(g, p);
  MessageState s;
  s.mu.resize(2 * g.n_edges());
  for (int e = 0; e < g.n_edges(); ++e) {
    const auto [i, j] = g.edges[e];
    s.mu[2 * e + 0].assign(p.action_counts[j], 0.0);
    s.mu[2 * e + 1].assign(p.action_counts[i], 0.0);
  }
  s.best_action = decode_greedy(g, p, s);
  s.best_value = global_value(g, p, s.best_action);
  return s;
}

JointAction decode_greedy(const graph::CoordinationGraph& g, const EdgePayoffSet& p,
                          const MessageState& state) {
  const auto incoming = incoming_index(g);
  JointAction a(g.n_nodes, 0);
  for (int i = 0; i < g.n_nodes; ++i) {
    const int n_act = p.action_counts[i];
    double best = -std::numeric_limits<double>::infinity();
    int best_a = 0;
    for (int ai = 0; ai < n_act; ++ai) {
      double sum = 0.0;
      for (const auto& [from, idx] : incoming[i]) sum += state.mu[idx][ai];
      if (sum > best) {
        best = sum;
        best_a = ai;
      }
    }
    a[i] = best_a;
  }
  return a;
}

double pass_messages_once(const graph::CoordinationGraph& g, const EdgePayoffSet& p,
                          MessageState& state) {
  check_dims(g, p);
  const auto incoming = incoming_index(g);

  // Total incoming message sum per node and action, from the previous round.
  std::vector<std::vector<double>> total_in(g.n_nodes);
  for (int i = 0; i < g.n_nodes; ++i) {
    total_in[i].assign(p.action_counts[i], 0.0);
    for (const auto& [from, idx] : incoming[i])
      for (int ai = 0; ai < p.action_counts[i]; ++ai) total_in[i][ai] += state.mu[idx][ai];
  }

  std::vector<std::vector<double>> next(state.mu.size());
  double max_change = 0.0;
  for (int e = 0; e < g.n_edges(); ++e) {
    const auto [i, j] = g.edges[e];
    const std::vector<double>& m = p.matrices[e];
    const int ni = p.action_counts[i];
    const int nj = p.action_counts[j];

    for (int dir = 0; dir < 2; ++dir) {
      const int src = dir == 0 ? i : j;
      const int dst = dir == 0 ? j : i;
      const int n_src = dir == 0 ? ni : nj;
      const int n_dst = dir == 0 ? nj : ni;
      const std::vector<double>& reverse = state.mu[2 * e + (1 - dir)];  // dst -> src

      std::vector<double> out(n_dst, -std::numeric_limits<double>::infinity());
      for (int as = 0; as < n_src; ++as) {
        // Incoming messages to the source from everyone but the destination.
        const double in_sum = total_in[src][as] - reverse[as];
        for (int ad = 0; ad < n_dst; ++ad) {
          const double q = dir == 0 ? m[static_cast<std::size_t>(as) * nj + ad]
                                    : m[static_cast<std::size_t>(ad) * nj + as];
          const double cand = q + in_sum;
          if (cand > out[ad]) out[ad] = cand;
        }
      }
      double mean = 0.0;
      for (double v : out) mean += v;
      mean /= n_dst;
      for (double& v : out) v -= mean;  // zero-sum normalization

      const std::vector<double>& prev = state.mu[2 * e + dir];
      for (int ad = 0; ad < n_dst; ++ad)
        max_change = std::max(max_change, std::abs(out[ad] - prev[ad]));
      next[2 * e + dir] = std::move(out);
    }
  }

  state.mu = std::move(next);
  state.iteration++;

  const JointAction decoded = decode_greedy(g, p, state);
  const double value = global_value(g, p, decoded);
  if (value > state.best_value) {
    state.best_value = value;
    state.best_action = decoded;
  }
  return max_change;
}

std::pair<JointAction, MpDiagnostics> select_actions(const graph::CoordinationGraph& g,
                                                     const EdgePayoffSet& p, int max_iters) {
  if (max_iters < 1) throw std::invalid_argument("select_actions: max_iters must be >= 1");
  if (g.edges.empty())
    throw std::invalid_argument("select_actions: graph has no edges");

  MessageState state = init_messages(g, p);
  std::unordered_set<std::uint64_t> seen;
  seen.insert(hash_messages(state));

  MpDiagnostics diag;
  diag.reason = StopReason::max_iters;
  for (int it = 1; it <= max_iters; ++it) {
    const double change = pass_messages_once(g, p, state);
    if (change < 1e-9) {
      diag.reason = StopReason::converged;
      break;
    }
    if (!seen.insert(hash_messages(state)).second) {
      diag.reason = StopReason::cycle;
      break;
    }
  }
  diag.iterations = state.iteration;
  diag.best_value = state.best_value;
  return {state.best_action, diag};
}

std::pair<JointAction, double> brute_force_argmax(const graph::CoordinationGraph& g,
                                                  const EdgePayoffSet& p) {
  check_dims(g, p);
  double space = 1.0;
  for (int n : p.action_counts) space *= n;
  if (space > 1e7) throw std::invalid_argument("brute_force_argmax: instance too large");

  JointAction a(g.n_nodes, 0);
  JointAction best = a;
  double best_value = -std::numeric_limits<double>::infinity();
  while (true) {
    // Independent re-summation, deliberately not shared with global_value.
    double value = 0.0;
    for (int e = 0; e < g.n_edges(); ++e) {
      const auto [i, j] = g.edges[e];
      value += p.matrices[e][static_cast<std::size_t>(a[i]) * p.action_counts[j] + a[j]];
    }
    if (value > best_value) {
      best_value = value;
      best = a;
    }
    int k = g.n_nodes - 1;
    while (k >= 0 && a[k] + 1 == p.action_counts[k]) a[k--] = 0;
    if (k < 0) break;
    a[k]++;
  }
  return {best, best_value};
}

JointAction epsilon_greedy(const JointAction& a, double epsilon,
                           const std::vector<int>& action_counts, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("epsilon_greedy: epsilon must be in [0, 1]");
  if (a.size() != action_counts.size())
    throw std::invalid_argument("epsilon_greedy: size mismatch");
  if (epsilon == 0.0) return a;
  JointAction out = a;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (rng.bernoulli(epsilon)) out[i] = rng.uniform_int(action_counts[i]);
  return out;
}

JointAction epsilon_greedy(const JointAction& a, double epsilon,
                           const std::vector<int>& action_counts, std::uint64_t seed) {
  Rng rng(seed);
  return epsilon_greedy(a, epsilon, action_counts, rng);
}

}  // namespace tiltnet::maxplus
