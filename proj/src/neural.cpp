#include "tiltnet/neural.hpp"

#include <cmath>
#include <stdexcept>

#include "tiltnet/rng.hpp"

namespace tiltnet::neural {

namespace {

void check_shapes(const Mlp& net, const Gradients& g) {
  if (g.weights.size() != net.weights.size() || g.biases.size() != net.biases.size())
    throw std::invalid_argument("gradient/parameter layer count mismatch");
  for (std::size_t l = 0; l < net.weights.size(); ++l)
    if (g.weights[l].size() != net.weights[l].size() || g.biases[l].size() != net.biases[l].size())
      throw std::invalid_argument("gradient/parameter shape mismatch");
}

}  // namespace

Mlp make_mlp(const std::vector<int>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("make_mlp: need at least input and output dims");
  for (int d : dims)
    if (d < 1) throw std::invalid_argument("make_mlp: dims must be positive");
  Mlp net;
  net.dims = dims;
  Rng rng(derive_seed(seed, Stream::net_init));
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    // He-uniform fan-in scaling on the ReLU layers; the identity output layer
    // starts at zero so value heads grow from the data, not from init noise.
    const bool output_layer = l + 2 == dims.size();
    const double limit = output_layer ? 0.0 : std::sqrt(6.0 / fan_in);
    std::vector<double> w(static_cast<std::size_t>(fan_out) * fan_in);
    for (double& v : w) v = limit == 0.0 ? 0.0 : rng.uniform(-limit, limit);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::vector<double>(fan_out, 0.0));
  }
  return net;
}

std::vector<double> forward(const Mlp& net, std::span<const double> x) {
  ForwardCache cache;
  return forward(net, x, cache);
}

const std::vector<double>& forward(const Mlp& net, std::span<const double> x, ForwardCache& cache) {
  if (static_cast<int>(x.size()) != net.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  cache.acts.resize(net.n_layers() + 1);
  cache.acts[0].assign(x.begin(), x.end());
  for (int l = 0; l < net.n_layers(); ++l) {
    const int in = net.dims[l];
    const int out = net.dims[l + 1];
    const std::vector<double>& prev = cache.acts[l];
    std::vector<double>& next = cache.acts[l + 1];
    next.assign(out, 0.0);
    const bool hidden = l + 1 < net.n_layers();
    for (int o = 0; o < out; ++o) {
      double z = net.biases[l][o];
      const double* row = net.weights[l].data() + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) z += row[i] * prev[i];
      next[o] = hidden && z < 0.0 ? 0.0 : z;
    }
  }
  return cache.acts.back();
}

Gradients make_gradients(const Mlp& net) {
  Gradients g;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    g.weights.push_back(std::vector<double>(net.weights[l].size(), 0.0));
    g.biases.push_back(std::vector<double>(net.biases[l].size(), 0.0));
  }
  return g;
}

void zero(Gradients& g) {
  for (auto& w : g.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : g.biases) std::fill(b.begin(), b.end(), 0.0);
}

void backward_into(const Mlp& net, const ForwardCache& cache, std::span<const double> output_grad,
                   double scale, Gradients& acc) {
  if (static_cast<int>(cache.acts.size()) != net.n_layers() + 1)
    throw std::invalid_argument("backward: cache does not match network");
  if (static_cast<int>(output_grad.size()) != net.output_dim())
    throw std::invalid_argument("backward: output gradient dimension mismatch");
  check_shapes(net, acc);

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (int l = net.n_layers() - 1; l >= 0; --l) {
    const int in = net.dims[l];
    const int out = net.dims[l + 1];
    const std::vector<double>& input = cache.acts[l];
    std::vector<double> prev_delta;
    if (l > 0) prev_delta.assign(in, 0.0);

    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      acc.biases[l][o] += scale * d;
      double* wg = acc.weights[l].data() + static_cast<std::size_t>(o) * in;
      const double* row = net.weights[l].data() + static_cast<std::size_t>(o) * in;
      const double sd = scale * d;
      for (int i = 0; i < in; ++i) wg[i] += sd * input[i];
      if (l > 0)
        for (int i = 0; i < in; ++i) prev_delta[i] += d * row[i];
    }
    if (l > 0) {
      // ReLU mask: units that were clamped pass no gradient.
      for (int i = 0; i < in; ++i)
        if (input[i] <= 0.0) prev_delta[i] = 0.0;
      delta = std::move(prev_delta);
    }
  }
}

Gradients backward(const Mlp& net, std::span<const double> x, std::span<const double> output_grad) {
  ForwardCache cache;
  forward(net, x, cache);
  Gradients g = make_gradients(net);
  backward_into(net, cache, output_grad, 1.0, g);
  return g;
}

double global_grad_norm(const Gradients& g) {
  double sq = 0.0;
  for (const auto& w : g.weights)
    for (double v : w) sq += v * v;
  for (const auto& b : g.biases)
    for (double v : b) sq += v * v;
  return std::sqrt(sq);
}

double clip_global_norm(Gradients& g, double max_norm) {
  const double norm = global_grad_norm(g);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& w : g.weights)
      for (double& v : w) v *= s;
    for (auto& b : g.biases)
      for (double& v : b) v *= s;
  }
  return norm;
}

AdamState make_adam(const Mlp& net, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.m = make_gradients(net);
  s.v = make_gradients(net);
  return s;
}

void adam_step(Mlp& net, AdamState& state, const Gradients& grad) {
  check_shapes(net, grad);
  check_shapes(net, state.m);
  for (const auto& w : grad.weights)
    for (double v : w)
      if (!std::isfinite(v)) throw std::invalid_argument("adam_step: non-finite gradient");
  for (const auto& b : grad.biases)
    for (double v : b)
      if (!std::isfinite(v)) throw std::invalid_argument("adam_step: non-finite gradient");

  state.step++;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  const auto update = [&](std::vector<double>& theta, std::vector<double>& m,
                          std::vector<double>& v, const std::vector<double>& g) {
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      theta[k] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  };
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    update(net.weights[l], state.m.weights[l], state.v.weights[l], grad.weights[l]);
    update(net.biases[l], state.m.biases[l], state.v.biases[l], grad.biases[l]);
  }
}

Mlp clone_into_target(const Mlp& net) { return net; }

long parameter_count(const Mlp& net) {
  long n = 0;
  for (const auto& w : net.weights) n += static_cast<long>(w.size());
  for (const auto& b : net.biases) n += static_cast<long>(b.size());
  return n;
}

}  // namespace tiltnet::neural
