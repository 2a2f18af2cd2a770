#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tiltnet::neural {

// Fixed-architecture feed-forward net: ReLU hidden layers, identity output.
// weights[l] is dims[l+1] x dims[l] row-major.
struct Mlp {
  std::vector<int> dims;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  int n_layers() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
};

// Parameter-shaped container; doubles as the gradient type.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  Gradients m;
  Gradients v;
};

struct ForwardCache {
  std::vector<std::vector<double>> acts;  // acts[0] = input, acts[l+1] = layer l output
};

// He-uniform fan-in initialization for the weights, zero biases.
Mlp make_mlp(const std::vector<int>& dims, std::uint64_t seed);

std::vector<double> forward(const Mlp& net, std::span<const double> x);
const std::vector<double>& forward(const Mlp& net, std::span<const double> x, ForwardCache& cache);

Gradients make_gradients(const Mlp& net);
void zero(Gradients& g);

// Accumulates scale * d<output, output_grad>/dtheta into acc. Requires the
// cache from a forward pass on the same input.
void backward_into(const Mlp& net, const ForwardCache& cache, std::span<const double> output_grad,
                   double scale, Gradients& acc);
Gradients backward(const Mlp& net, std::span<const double> x, std::span<const double> output_grad);

double global_grad_norm(const Gradients& g);
// Scales the gradient down to max_norm if it exceeds it; returns the pre-clip norm.
double clip_global_norm(Gradients& g, double max_norm);

AdamState make_adam(const Mlp& net, double learning_rate);

// Bias-corrected Adam update. Rejects non-finite gradients without touching
// the parameters.
void adam_step(Mlp& net, AdamState& state, const Gradients& grad);

// Deep copy for target networks (Mlp has value semantics; this names the intent).
Mlp clone_into_target(const Mlp& net);

long parameter_count(const Mlp& net);

}  // namespace tiltnet::neural
