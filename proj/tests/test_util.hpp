#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "lcg/mlp.hpp"
#include "lcg/vec.hpp"

namespace lcg::test {

inline double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double variance(const std::vector<double>& xs) {
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

// Scalar objective dot(upstream, net(x)), the exact quantity Mlp::backward
// differentiates.
inline double objective(const Mlp& net, const Vec& x, const Vec& upstream) {
  const Vec y = net.forward(x);
  return dot(upstream, y);
}

// Max |analytic - central difference| over all parameters, normalized by the
// gradient's largest magnitude (floored at 1 so tiny gradients do not inflate
// the ratio).
inline double max_param_grad_error(Mlp& net, const Vec& x, const Vec& upstream, double h) {
  const auto bp = net.backward(x, upstream);
  auto params = net.params();
  double scale = 1.0;
  for (double g : bp.param_grad) scale = std::max(scale, std::abs(g));
  double worst = 0.0;
  for (size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = objective(net, x, upstream);
    params[i] = keep - h;
    const double down = objective(net, x, upstream);
    params[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - bp.param_grad[i]) / scale);
  }
  return worst;
}

inline double max_input_grad_error(const Mlp& net, Vec x, const Vec& upstream, double h) {
  const auto bp = net.backward(x, upstream);
  double scale = 1.0;
  for (double g : bp.input_grad) scale = std::max(scale, std::abs(g));
  double worst = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = objective(net, x, upstream);
    x[i] = keep - h;
    const double down = objective(net, x, upstream);
    x[i] = keep;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - bp.input_grad[i]) / scale);
  }
  return worst;
}

// Smallest |preactivation| across every hidden unit, recomputed from the flat
// parameter layout (per layer: W row-major, then b). Central differences at a
// ReLU kink are meaningless, so kink-adjacent probes get rejected by margin.
inline double min_preactivation_margin(const Mlp& net, const Vec& x) {
  const auto& dims = net.dims();
  auto params = net.params();
  size_t off = 0;
  Vec h = x;
  double margin = 1e300;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    Vec pre(static_cast<size_t>(out));
    for (int i = 0; i < out; ++i) {
      double acc = params[off + static_cast<size_t>(out) * in + i];  // bias
      for (int j = 0; j < in; ++j) acc += params[off + static_cast<size_t>(i) * in + j] * h[j];
      pre[i] = acc;
    }
    off += static_cast<size_t>(out) * in + out;
    if (l + 2 < dims.size()) {  // hidden layer: activation applies
      for (int i = 0; i < out; ++i) margin = std::min(margin, std::abs(pre[i]));
      for (auto& v : pre)
        v = net.activation() == Activation::Relu ? std::max(0.0, v)
            : net.activation() == Activation::Tanh ? std::tanh(v)
                                                   : v;
    }
    h = std::move(pre);
  }
  return margin;
}

// Path of the CLI binary under test, exported by ctest.
inline std::string cli_path() {
  const char* p = std::getenv("LCG_CLI");
  return p ? p : "";
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("lcg_test_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace lcg::test
