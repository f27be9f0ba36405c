#include "lcg/mlp.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "lcg/errors.hpp"

namespace lcg {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  throw std::invalid_argument("activation_name: unknown activation");
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation: " + name);
}

Mlp::Mlp(std::vector<int> dims, Activation act) : dims_(std::move(dims)), act_(act) {
  if (dims_.size() < 2) throw std::invalid_argument("Mlp: need at least one layer");
  for (int d : dims_)
    if (d <= 0) throw std::invalid_argument("Mlp: layer widths must be positive");
  size_t total = 0;
  offsets_.reserve(dims_.size() - 1);
  for (size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<size_t>(dims_[l + 1]) * dims_[l] + dims_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::random_init(std::vector<int> dims, Activation act, Rng& rng) {
  Mlp m(std::move(dims), act);
  for (int l = 0; l < m.layer_count(); ++l) {
    const int in = m.dims_[l];
    const int out = m.dims_[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    double* w = m.params_.data() + m.offsets_[l];
    for (int i = 0; i < out * in; ++i) w[i] = scale * rng.next_gaussian();
    // biases stay zero
  }
  return m;
}

std::vector<uint8_t> Mlp::weight_mask() const {
  std::vector<uint8_t> mask(params_.size(), 0);
  for (int l = 0; l < layer_count(); ++l) {
    const size_t wlen = static_cast<size_t>(dims_[l + 1]) * dims_[l];
    for (size_t i = 0; i < wlen; ++i) mask[offsets_[l] + i] = 1;
  }
  return mask;
}

std::span<const double> Mlp::weight(int layer) const {
  return {params_.data() + offsets_[layer], static_cast<size_t>(dims_[layer + 1]) * dims_[layer]};
}

std::span<const double> Mlp::bias(int layer) const {
  return {params_.data() + offsets_[layer] + static_cast<size_t>(dims_[layer + 1]) * dims_[layer],
          static_cast<size_t>(dims_[layer + 1])};
}

namespace {

inline double act_value(Activation a, double z) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Relu: return z > 0.0 ? z : 0.0;
  }
  return z;
}

// Derivative expressed through the preactivation z.
inline double act_deriv(Activation a, double z) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

}  // namespace

Vec Mlp::forward(const Vec& x) const {
  if (static_cast<int>(x.size()) != input_dim())
    throw std::invalid_argument("Mlp::forward: input dimension mismatch");
  Vec a = x;
  for (int l = 0; l < layer_count(); ++l) {
    const int in = dims_[l];
    const int out = dims_[l + 1];
    const auto w = weight(l);
    const auto b = bias(l);
    Vec next(static_cast<size_t>(out));
    for (int i = 0; i < out; ++i) {
      double z = b[i];
      const double* row = w.data() + static_cast<size_t>(i) * in;
      for (int j = 0; j < in; ++j) z += row[j] * a[j];
      next[i] = (l + 1 < layer_count()) ? act_value(act_, z) : z;
    }
    a = std::move(next);
  }
  return a;
}

Mlp::Backprop Mlp::backward(const Vec& x, const Vec& upstream) const {
  if (static_cast<int>(x.size()) != input_dim())
    throw std::invalid_argument("Mlp::backward: input dimension mismatch");
  if (static_cast<int>(upstream.size()) != output_dim())
    throw std::invalid_argument("Mlp::backward: upstream dimension mismatch");

  const int L = layer_count();
  std::vector<Vec> acts(L + 1);      // acts[l] = input to layer l
  std::vector<Vec> preacts(L);       // preacts[l] = W a + b of layer l
  acts[0] = x;
  for (int l = 0; l < L; ++l) {
    const int in = dims_[l];
    const int out = dims_[l + 1];
    const auto w = weight(l);
    const auto b = bias(l);
    preacts[l].resize(out);
    acts[l + 1].resize(out);
    for (int i = 0; i < out; ++i) {
      double z = b[i];
      const double* row = w.data() + static_cast<size_t>(i) * in;
      for (int j = 0; j < in; ++j) z += row[j] * acts[l][j];
      preacts[l][i] = z;
      acts[l + 1][i] = (l + 1 < L) ? act_value(act_, z) : z;
    }
  }

  Backprop bp;
  bp.param_grad.assign(params_.size(), 0.0);
  Vec delta = upstream;  // d objective / d preact of current layer
  for (int l = L - 1; l >= 0; --l) {
    const int in = dims_[l];
    const int out = dims_[l + 1];
    const auto w = weight(l);
    double* gw = bp.param_grad.data() + offsets_[l];
    double* gb = gw + static_cast<size_t>(out) * in;
    for (int i = 0; i < out; ++i) {
      const double di = delta[i];
      double* grow = gw + static_cast<size_t>(i) * in;
      for (int j = 0; j < in; ++j) grow[j] = di * acts[l][j];
      gb[i] = di;
    }
    Vec prev(static_cast<size_t>(in), 0.0);
    for (int i = 0; i < out; ++i) {
      const double di = delta[i];
      const double* row = w.data() + static_cast<size_t>(i) * in;
      for (int j = 0; j < in; ++j) prev[j] += row[j] * di;
    }
    if (l > 0)
      for (int j = 0; j < in; ++j) prev[j] *= act_deriv(act_, preacts[l - 1][j]);
    delta = std::move(prev);
  }
  bp.input_grad = std::move(delta);
  return bp;
}

Vec mlp_forward(const Mlp& m, const Vec& x) { return m.forward(x); }

std::vector<double> mlp_grad_params(const Mlp& m, const Vec& x, const Vec& upstream) {
  return m.backward(x, upstream).param_grad;
}

Vec mlp_grad_input(const Mlp& m, const Vec& x, const Vec& upstream) {
  return m.backward(x, upstream).input_grad;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: size mismatch");
  if (!(lr > 0.0)) throw std::invalid_argument("adam_step: lr must be positive");
  if (!all_finite(grads)) throw NumericError("adam_step: non-finite gradient");

  state.step += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace lcg
