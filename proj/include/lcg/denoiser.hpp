#pragma once

#include <utility>
#include <vector>

#include "lcg/mlp.hpp"
#include "lcg/rng.hpp"
#include "lcg/schedule.hpp"
#include "lcg/vec.hpp"
#include "lcg/world.hpp"

namespace lcg {

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps, with eps supplied explicitly.
Vec corrupt_with_noise(const NoiseSchedule& s, const Vec& z0, int t, const Vec& eps);

// Draws eps ~ N(0, I) and returns (z_t, eps).
std::pair<Vec, Vec> forward_sample(const NoiseSchedule& s, const Vec& z0, int t, Rng& rng);

// Noise-prediction net over [z_t ; sinusoidal embedding of t].
struct Denoiser {
  int latent_dim = 0;
  int embed_half = 8;  // embedding width is 2 * embed_half
  int total_T = 0;     // frequencies span periods from ~4 steps up to ~4T steps
  Mlp net;

  Denoiser() : net({1, 1}, Activation::Identity) {}
  Denoiser(int latent_dim_, int embed_half_, int total_T_, Mlp net_)
      : latent_dim(latent_dim_), embed_half(embed_half_), total_T(total_T_), net(std::move(net_)) {}

  static Denoiser create(int latent_dim, const std::vector<int>& hidden, Activation act,
                         const NoiseSchedule& s, Rng& rng, int embed_dim = 16);

  Vec time_embedding(int t) const;
  Vec embed_input(const Vec& z_t, int t) const;
  Vec predict_noise(const Vec& z_t, int t) const;
};

struct DenoiserTrainOptions {
  long steps = 20000;
  int batch = 64;
  double lr = 1e-3;
};

// Minimizes mean ||eps - eps_hat||^2 over uniformly drawn (sample, t) pairs.
// Returns the per-step loss trace; throws NumericError if the loss stops
// being finite.
std::vector<double> train_denoiser(const NoiseSchedule& s, const AttributedDataset& data,
                                   Denoiser& net, const DenoiserTrainOptions& opt, Rng& rng);

}  // namespace lcg
