#include "lcg/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "lcg/errors.hpp"

namespace lcg {

Vec score_from_noise(const NoiseSchedule& s, const Vec& eps_hat, int t) {
  if (t < 1 || t > s.T) throw std::invalid_argument("score_from_noise: t out of range");
  return scaled(eps_hat, -1.0 / std::sqrt(1.0 - s.abar(t)));
}

Vec posterior_mean_from_eps(const NoiseSchedule& s, const Vec& z_t, int t, const Vec& eps_hat) {
  if (t < 1 || t > s.T) throw std::invalid_argument("posterior_mean_from_eps: t out of range");
  const double coef = s.b(t) / std::sqrt(1.0 - s.abar(t));
  const double inv_sqrt_a = 1.0 / std::sqrt(s.a(t));
  Vec mu(z_t.size());
  for (size_t i = 0; i < z_t.size(); ++i) mu[i] = inv_sqrt_a * (z_t[i] - coef * eps_hat[i]);
  return mu;
}

Vec ddpm_step_with_noise(const NoiseSchedule& s, const Vec& eps_hat, const Vec& z_t, int t,
                         const Vec& extra_score, const Vec& xi) {
  Vec z = posterior_mean_from_eps(s, z_t, t, eps_hat);
  const double var = s.post_var(t);
  const double sd = std::sqrt(var);
  for (size_t i = 0; i < z.size(); ++i) z[i] += var * extra_score[i] + sd * xi[i];
  return z;
}

Vec ddpm_step(const NoiseSchedule& s, const Denoiser& net, const Vec& z_t, int t,
              const Vec& extra_score, Rng& rng) {
  const Vec eps_hat = net.predict_noise(z_t, t);
  // No noise on the final step; the mean (plus guidance shift) is the output.
  const Vec xi = t >= 2 ? rng.gaussian_vec(static_cast<int>(z_t.size()))
                        : zeros(static_cast<int>(z_t.size()));
  return ddpm_step_with_noise(s, eps_hat, z_t, t, extra_score, xi);
}

Vec ddim_step_core(double abar_t, double abar_prev, const Vec& eps_hat, const Vec& z_t,
                   const Vec& extra_score, double eta, Rng* rng) {
  if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("ddim_step: eta must be in [0, 1]");
  const double one_minus = 1.0 - abar_t;
  const double sn = std::sqrt(one_minus);

  Vec eps_tilde(eps_hat.size());
  for (size_t i = 0; i < eps_hat.size(); ++i) eps_tilde[i] = eps_hat[i] - sn * extra_score[i];

  const double sigma = eta * std::sqrt((1.0 - abar_prev) / one_minus) *
                       std::sqrt(1.0 - abar_t / abar_prev);
  if (sigma > 0.0 && rng == nullptr)
    throw std::invalid_argument("ddim_step: eta > 0 requires an Rng");

  const double sa_prev = std::sqrt(abar_prev);
  const double dir = std::sqrt(std::max(0.0, 1.0 - abar_prev - sigma * sigma));
  const double inv_sa = 1.0 / std::sqrt(abar_t);

  Vec z(z_t.size());
  for (size_t i = 0; i < z.size(); ++i) {
    const double z0_hat = inv_sa * (z_t[i] - sn * eps_tilde[i]);
    z[i] = sa_prev * z0_hat + dir * eps_tilde[i];
  }
  if (sigma > 0.0)
    for (size_t i = 0; i < z.size(); ++i) z[i] += sigma * rng->next_gaussian();
  return z;
}

Vec ddim_step(const NoiseSchedule& s, const Denoiser& net, const Vec& z_t, int t,
              const Vec& extra_score, double eta, Rng* rng) {
  if (t < 1 || t > s.T) throw std::invalid_argument("ddim_step: t out of range");
  const Vec eps_hat = net.predict_noise(z_t, t);
  return ddim_step_core(s.abar(t), s.abar_prev(t), eps_hat, z_t, extra_score, eta, rng);
}

SamplerKind sampler_from_name(const std::string& name) {
  if (name == "ddpm") return SamplerKind::ddpm;
  if (name == "ddim") return SamplerKind::ddim;
  throw std::invalid_argument("unknown sampler: " + name);
}

std::string sampler_name(SamplerKind k) {
  return k == SamplerKind::ddpm ? "ddpm" : "ddim";
}

Vec reverse_chain_from(const NoiseSchedule& s, const Denoiser& net, Vec z, int t_start,
                       SamplerKind kind, const GuidanceFn& guidance, Rng& rng, double eta) {
  if (t_start < 1 || t_start > s.T) throw std::invalid_argument("reverse_chain_from: t_start out of range");
  const int d = static_cast<int>(z.size());
  const Vec no_extra = zeros(d);
  for (int t = t_start; t >= 1; --t) {
    const Vec extra = guidance ? guidance(z, t) : no_extra;
    if (static_cast<int>(extra.size()) != d)
      throw std::invalid_argument("reverse_chain_from: guidance dimension mismatch");
    z = kind == SamplerKind::ddpm ? ddpm_step(s, net, z, t, extra, rng)
                                  : ddim_step(s, net, z, t, extra, eta, &rng);
    if (!all_finite(z) || squared_norm(z) > 1e16)
      throw NumericError("reverse chain diverged at t = " + std::to_string(t));
  }
  return z;
}

std::vector<Vec> sample(const NoiseSchedule& s, const Denoiser& net, int n, SamplerKind kind,
                        const GuidanceFn& guidance, Rng& rng, double eta) {
  if (n < 0) throw std::invalid_argument("sample: n must be non-negative");
  if (!s.terminal_near_gaussian())
    throw std::invalid_argument("sample: schedule terminal abar_T >= 0.05; z_T is not close to N(0, I)");
  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vec z = rng.gaussian_vec(net.latent_dim);
    out.push_back(reverse_chain_from(s, net, std::move(z), s.T, kind, guidance, rng, eta));
  }
  return out;
}

}  // namespace lcg
