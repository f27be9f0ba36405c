#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lcg/rng.hpp"
#include "lcg/vec.hpp"

namespace lcg {

enum class Activation { Identity, Tanh, Relu };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Fully connected net with the nonlinearity applied to every layer except the
// last. Parameters live in one flat array (per layer: W row-major, then b) so
// optimizers and checkpoints can treat them uniformly.
class Mlp {
 public:
  Mlp(std::vector<int> dims, Activation act);
  static Mlp random_init(std::vector<int> dims, Activation act, Rng& rng);

  const std::vector<int>& dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int layer_count() const { return static_cast<int>(dims_.size()) - 1; }
  Activation activation() const { return act_; }

  int param_count() const { return static_cast<int>(params_.size()); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  // 1 for weight-matrix entries, 0 for biases; used to scope L2 penalties.
  std::vector<uint8_t> weight_mask() const;

  Vec forward(const Vec& x) const;

  struct Backprop {
    std::vector<double> param_grad;  // same layout as params()
    Vec input_grad;
  };
  // Reverse-mode gradients of dot(upstream, forward(x)).
  Backprop backward(const Vec& x, const Vec& upstream) const;

 private:
  std::span<const double> weight(int layer) const;
  std::span<const double> bias(int layer) const;

  std::vector<int> dims_;
  Activation act_;
  std::vector<double> params_;
  std::vector<size_t> offsets_;  // per layer: offset of W; b follows W
};

Vec mlp_forward(const Mlp& m, const Vec& x);
std::vector<double> mlp_grad_params(const Mlp& m, const Vec& x, const Vec& upstream);
Vec mlp_grad_input(const Mlp& m, const Vec& x, const Vec& upstream);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update, in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);

}  // namespace lcg
