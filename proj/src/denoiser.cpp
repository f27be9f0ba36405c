#include "lcg/denoiser.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lcg/errors.hpp"

namespace lcg {

Vec corrupt_with_noise(const NoiseSchedule& s, const Vec& z0, int t, const Vec& eps) {
  if (t < 1 || t > s.T) throw std::invalid_argument("corrupt_with_noise: t out of range");
  if (eps.size() != z0.size()) throw std::invalid_argument("corrupt_with_noise: eps dimension mismatch");
  const double sa = std::sqrt(s.abar(t));
  const double sn = std::sqrt(1.0 - s.abar(t));
  Vec z(z0.size());
  for (size_t i = 0; i < z0.size(); ++i) z[i] = sa * z0[i] + sn * eps[i];
  return z;
}

std::pair<Vec, Vec> forward_sample(const NoiseSchedule& s, const Vec& z0, int t, Rng& rng) {
  Vec eps = rng.gaussian_vec(static_cast<int>(z0.size()));
  Vec z = corrupt_with_noise(s, z0, t, eps);
  return {std::move(z), std::move(eps)};
}

Denoiser Denoiser::create(int latent_dim, const std::vector<int>& hidden, Activation act,
                          const NoiseSchedule& s, Rng& rng, int embed_dim) {
  if (embed_dim < 2 || embed_dim % 2 != 0)
    throw std::invalid_argument("Denoiser: embed_dim must be a positive even number");
  const int half = embed_dim / 2;
  std::vector<int> dims;
  dims.push_back(latent_dim + embed_dim);
  for (int h : hidden) dims.push_back(h);
  dims.push_back(latent_dim);
  return Denoiser(latent_dim, half, s.T, Mlp::random_init(std::move(dims), act, rng));
}

Vec Denoiser::time_embedding(int t) const {
  // Geometric frequency ladder: slowest component resolves the whole range
  // 1..T, fastest has period ~4 steps.
  Vec e(static_cast<size_t>(2 * embed_half));
  const double w_min = std::numbers::pi / (2.0 * total_T);
  const double w_max = std::numbers::pi / 2.0;
  for (int i = 0; i < embed_half; ++i) {
    const double frac = embed_half == 1 ? 1.0 : static_cast<double>(i) / (embed_half - 1);
    const double w = w_min * std::pow(w_max / w_min, frac);
    e[2 * i] = std::sin(w * t);
    e[2 * i + 1] = std::cos(w * t);
  }
  return e;
}

Vec Denoiser::embed_input(const Vec& z_t, int t) const {
  Vec in;
  in.reserve(z_t.size() + 2 * embed_half);
  in.insert(in.end(), z_t.begin(), z_t.end());
  const Vec e = time_embedding(t);
  in.insert(in.end(), e.begin(), e.end());
  return in;
}

Vec Denoiser::predict_noise(const Vec& z_t, int t) const {
  if (static_cast<int>(z_t.size()) != latent_dim)
    throw std::invalid_argument("Denoiser: latent dimension mismatch");
  return net.forward(embed_input(z_t, t));
}

std::vector<double> train_denoiser(const NoiseSchedule& s, const AttributedDataset& data,
                                   Denoiser& net, const DenoiserTrainOptions& opt, Rng& rng) {
  if (data.n() < 1) throw std::invalid_argument("train_denoiser: empty dataset");
  if (data.d != net.latent_dim) throw std::invalid_argument("train_denoiser: dimension mismatch");
  if (opt.batch < 1) throw std::invalid_argument("train_denoiser: batch must be positive");
  if (opt.steps < 0) throw std::invalid_argument("train_denoiser: steps must be non-negative");

  std::vector<double> trace;
  trace.reserve(static_cast<size_t>(opt.steps));
  AdamState adam(static_cast<size_t>(net.net.param_count()));
  std::vector<double> grad_acc(static_cast<size_t>(net.net.param_count()));

  for (long step = 0; step < opt.steps; ++step) {
    std::fill(grad_acc.begin(), grad_acc.end(), 0.0);
    double loss = 0.0;
    for (int b = 0; b < opt.batch; ++b) {
      const int i = static_cast<int>(rng.next_index(static_cast<uint64_t>(data.n())));
      const int t = 1 + static_cast<int>(rng.next_index(static_cast<uint64_t>(s.T)));
      const Vec z0 = data.latent(i);
      auto [z_t, eps] = forward_sample(s, z0, t, rng);
      const Vec in = net.embed_input(z_t, t);
      const Vec eps_hat = net.net.forward(in);
      Vec upstream(eps_hat.size());
      for (size_t j = 0; j < eps_hat.size(); ++j) {
        const double diff = eps_hat[j] - eps[j];
        loss += diff * diff;
        upstream[j] = 2.0 * diff / opt.batch;
      }
      const auto bp = net.net.backward(in, upstream);
      for (size_t j = 0; j < grad_acc.size(); ++j) grad_acc[j] += bp.param_grad[j];
    }
    loss /= opt.batch;
    if (!std::isfinite(loss)) throw NumericError("train_denoiser: loss diverged");
    adam_step(net.net.params(), grad_acc, adam, opt.lr);
    trace.push_back(loss);
  }
  return trace;
}

}  // namespace lcg
