#pragma once

#include <functional>
#include <vector>

#include "lcg/denoiser.hpp"
#include "lcg/rng.hpp"
#include "lcg/schedule.hpp"
#include "lcg/vec.hpp"

namespace lcg {

// score(z_t, t) = -eps_hat / sqrt(1 - abar_t)
Vec score_from_noise(const NoiseSchedule& s, const Vec& eps_hat, int t);

// Model posterior mean mu(z_t, t) = (z_t - b_t eps_hat / sqrt(1 - abar_t)) / sqrt(a_t)
Vec posterior_mean_from_eps(const NoiseSchedule& s, const Vec& z_t, int t, const Vec& eps_hat);

// z_{t-1} = mu + post_var_t * extra_score + sqrt(post_var_t) * xi.
// The xi overload is the deterministic core (test hook); the Rng overload
// draws xi ~ N(0, I) for t >= 2 and adds no noise at t = 1.
Vec ddpm_step_with_noise(const NoiseSchedule& s, const Vec& eps_hat, const Vec& z_t, int t,
                         const Vec& extra_score, const Vec& xi);
Vec ddpm_step(const NoiseSchedule& s, const Denoiser& net, const Vec& z_t, int t,
              const Vec& extra_score, Rng& rng);

// Guided DDIM step: eps_tilde = eps_hat - sqrt(1 - abar_t) * extra_score,
// eta in [0, 1] interpolates deterministic (0) to ancestral-variance (1).
// rng may be null when eta == 0.
Vec ddim_step_core(double abar_t, double abar_prev, const Vec& eps_hat, const Vec& z_t,
                   const Vec& extra_score, double eta, Rng* rng);
Vec ddim_step(const NoiseSchedule& s, const Denoiser& net, const Vec& z_t, int t,
              const Vec& extra_score, double eta, Rng* rng = nullptr);

enum class SamplerKind { ddpm, ddim };
SamplerKind sampler_from_name(const std::string& name);
std::string sampler_name(SamplerKind k);

// Extra score added to the model score at each step; may be empty.
using GuidanceFn = std::function<Vec(const Vec&, int)>;

// Reverse chain t_start..1 starting from the given state. Throws NumericError
// if the state stops being finite or grows beyond any plausible latent scale.
Vec reverse_chain_from(const NoiseSchedule& s, const Denoiser& net, Vec z, int t_start,
                       SamplerKind kind, const GuidanceFn& guidance, Rng& rng, double eta = 0.0);

// n full chains from z_T ~ N(0, I). Requires a near-Gaussian terminal marginal.
std::vector<Vec> sample(const NoiseSchedule& s, const Denoiser& net, int n, SamplerKind kind,
                        const GuidanceFn& guidance, Rng& rng, double eta = 0.0);

}  // namespace lcg
