#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tiltnet/graph.hpp"
#include "tiltnet/rng.hpp"
#include "tiltnet/types.hpp"

namespace tiltnet::maxplus {

// One payoff matrix per canonical graph edge (i, j), |A_i| x |A_j| row-major
// with rows indexed by the lower node's action.
struct EdgePayoffSet {
  std::vector<int> action_counts;             // per node
  std::vector<std::vector<double>> matrices;  // per edge, action_counts[i] * action_counts[j]
};

EdgePayoffSet make_payoffs(const graph::CoordinationGraph& g, int n_actions);

enum class StopReason { converged, cycle, max_iters };
std::string stop_reason_name(StopReason r);

struct MpDiagnostics {
  int iterations = 0;
  StopReason reason = StopReason::max_iters;
  double best_value = 0.0;
};

// Directed messages (two per undirected edge) plus anytime best tracking.
struct MessageState {
  // mu[2*e + 0]: i -> j (length |A_j|), mu[2*e + 1]: j -> i (length |A_i|)
  std::vector<std::vector<double>> mu;
  int iteration = 0;
  JointAction best_action;
  double best_value = 0.0;
};

double global_value(const graph::CoordinationGraph& g, const EdgePayoffSet& p,
                    const JointAction& a);

MessageState init_messages(const graph::CoordinationGraph& g, const EdgePayoffSet& p);

// One synchronous round: every directed message recomputed from the previous
// iteration's messages, normalized to zero sum, best-so-far updated from the
// decoded greedy action. Returns the max-norm message change.
double pass_messages_once(const graph::CoordinationGraph& g, const EdgePayoffSet& p,
                          MessageState& state);

// Greedy per-node decode of the current messages; ties to the lowest index.
JointAction decode_greedy(const graph::CoordinationGraph& g, const EdgePayoffSet& p,
                          const MessageState& state);

// Anytime max-plus: stops on convergence, message-state recurrence, or the
// iteration cap; always returns the best joint action seen.
std::pair<JointAction, MpDiagnostics> select_actions(const graph::CoordinationGraph& g,
                                                     const EdgePayoffSet& p, int max_iters = 40);

// Exhaustive maximizer (test oracle). Ties broken lexicographically. Guarded
// against instances with more than ~1e7 joint actions.
std::pair<JointAction, double> brute_force_argmax(const graph::CoordinationGraph& g,
                                                  const EdgePayoffSet& p);

// Each agent independently resamples its action uniformly with probability
// epsilon.
JointAction epsilon_greedy(const JointAction& a, double epsilon,
                           const std::vector<int>& action_counts, Rng& rng);
JointAction epsilon_greedy(const JointAction& a, double epsilon,
                           const std::vector<int>& action_counts, std::uint64_t seed);

}  // namespace tiltnet::maxplus
