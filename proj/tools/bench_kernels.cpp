// Compares the serial reference snapshot kernel against the parallel cached
// path, checks them for bitwise agreement, and times max-plus against the
// exhaustive oracle on a small instance.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "tiltnet/baselines.hpp"

using namespace tiltnet;

namespace {

double ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

bool identical(const netsim::RadioSnapshot& a, const netsim::RadioSnapshot& b) {
  return a.pathgain == b.pathgain && a.association == b.association && a.sinr == b.sinr &&
         a.throughput == b.throughput && a.cell_rewards == b.cell_rewards &&
         a.cell_load == b.cell_load;
}

}  // namespace

int main(int argc, char** argv) {
  int n_stations = 9;
  int n_users = 2000;
  int reps = 20;
  for (int k = 1; k + 1 < argc; k += 2) {
    if (std::strcmp(argv[k], "--stations") == 0) n_stations = std::atoi(argv[k + 1]);
    if (std::strcmp(argv[k], "--users") == 0) n_users = std::atoi(argv[k + 1]);
    if (std::strcmp(argv[k], "--reps") == 0) reps = std::atoi(argv[k + 1]);
  }

  const netsim::Deployment d = netsim::generate_deployment(n_stations, 42);
  const netsim::UserDrop users = netsim::drop_users(d, n_users, 1);
  const netsim::LinkGeometry geo = netsim::compute_geometry(d, users);
  Rng rng(7);
  JointAction tilts(d.n_cells());
  for (int& t : tilts) t = rng.uniform_int(d.params.n_tilts);

  std::printf("snapshot kernel: %d cells x %d users, %d reps\n", d.n_cells(), n_users, reps);

  netsim::RadioSnapshot ref;
  auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) ref = netsim::compute_snapshot_reference(d, users, tilts);
  const double serial_ms = ms_since(t0) / reps;

  netsim::RadioSnapshot par;
  t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) par = netsim::compute_snapshot(d, geo, users, tilts);
  const double parallel_ms = ms_since(t0) / reps;

  netsim::RadioSnapshot cold;
  t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) cold = netsim::compute_snapshot(d, users, tilts);
  const double cold_ms = ms_since(t0) / reps;

  const bool ok = identical(ref, par) && identical(ref, cold);
  std::printf("  serial reference      %8.3f ms\n", serial_ms);
  std::printf("  parallel + geometry   %8.3f ms   (%.2fx)\n", parallel_ms, serial_ms / parallel_ms);
  std::printf("  parallel cold         %8.3f ms   (%.2fx)\n", cold_ms, serial_ms / cold_ms);
  std::printf("  results bitwise identical: %s\n", ok ? "yes" : "NO");

  // Max-plus vs exhaustive enumeration on an instance the oracle can handle.
  const auto g = graph::graph_from_edges(8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6},
                                             {6, 7}, {0, 7}, {1, 6}});
  maxplus::EdgePayoffSet payoffs = maxplus::make_payoffs(g, 6);
  for (auto& m : payoffs.matrices)
    for (double& v : m) v = rng.uniform(0.0, 1.0);

  t0 = std::chrono::steady_clock::now();
  const auto [mp_action, diag] = maxplus::select_actions(g, payoffs, 40);
  const double mp_ms = ms_since(t0);
  t0 = std::chrono::steady_clock::now();
  const auto [bf_action, bf_value] = maxplus::brute_force_argmax(g, payoffs);
  const double bf_ms = ms_since(t0);
  std::printf("max-plus (8 nodes, |A|=6): %.3f ms, value %.4f (%s)\n", mp_ms, diag.best_value,
              maxplus::stop_reason_name(diag.reason).c_str());
  std::printf("brute force:               %.3f ms, value %.4f; ratio %.4f\n", bf_ms, bf_value,
              diag.best_value / bf_value);
  return ok ? 0 : 1;
}
