#include "lcg/elbo.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lcg/errors.hpp"
#include "lcg/sampler.hpp"

namespace lcg {

double ElboReport::sum_of_parts() const {
  double s = prior_term + reconstruction_term;
  for (double v : step_terms) s += v;
  if (conditional)
    for (double v : classifier_step_terms) s += v;
  return s;
}

double gaussian_log_density_iso(const Vec& x, const Vec& mean, double var) {
  if (!(var > 0.0)) throw std::invalid_argument("gaussian_log_density_iso: variance must be positive");
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi * var) + squared_distance(x, mean) / var);
}

double gaussian_kl_iso(const Vec& mu1, double v1, const Vec& mu2, double v2) {
  if (!(v1 > 0.0) || !(v2 > 0.0)) throw std::invalid_argument("gaussian_kl_iso: variances must be positive");
  const double d = static_cast<double>(mu1.size());
  const double r = v1 / v2;
  return 0.5 * (d * (r - 1.0 - std::log(r)) + squared_distance(mu1, mu2) / v2);
}

namespace {

// q(z_{t-1} | z_t, z0) mean for t >= 2.
Vec forward_posterior_mean(const NoiseSchedule& s, const Vec& z0, const Vec& z_t, int t) {
  const double denom = 1.0 - s.abar(t);
  const double c0 = std::sqrt(s.abar_prev(t)) * s.b(t) / denom;
  const double ct = std::sqrt(s.a(t)) * (1.0 - s.abar_prev(t)) / denom;
  Vec mu(z0.size());
  for (size_t i = 0; i < z0.size(); ++i) mu[i] = c0 * z0[i] + ct * z_t[i];
  return mu;
}

ElboReport elbo_core(const NoiseSchedule& s, const Denoiser& net,
                     const ClassifierSet* classifiers, const std::vector<LabelCondition>* conditions,
                     const Vec& z0, Rng& rng, int mc_draws) {
  if (mc_draws < 1) throw std::invalid_argument("elbo: mc_draws must be at least 1");
  if (static_cast<int>(z0.size()) != net.latent_dim)
    throw std::invalid_argument("elbo: z0 dimension mismatch");
  const int T = s.T;
  const int d = static_cast<int>(z0.size());

  std::vector<const LatentClassifier*> heads;
  std::vector<int> targets;
  if (conditions) {
    for (const auto& cond : *conditions) {
      const auto it = classifiers->find(cond.attribute);
      if (it == classifiers->end())
        throw std::invalid_argument("elbo_conditional: no classifier for condition '" +
                                    cond.attribute + "'");
      heads.push_back(&it->second);
      targets.push_back(cond.value);
    }
  }

  ElboReport rep;
  rep.conditional = conditions != nullptr;
  rep.step_terms.assign(static_cast<size_t>(std::max(0, T - 1)), 0.0);
  if (rep.conditional) rep.classifier_step_terms.assign(static_cast<size_t>(T), 0.0);

  // Prior term is a closed-form KL, independent of the draws.
  rep.prior_term = -gaussian_kl_iso(scaled(z0, std::sqrt(s.abar(T))), 1.0 - s.abar(T), zeros(d), 1.0);

  std::vector<Vec> zs(static_cast<size_t>(T));  // zs[t-1] ~ q(z_t | z0)
  for (int m = 0; m < mc_draws; ++m) {
    for (int t = 1; t <= T; ++t) zs[t - 1] = forward_sample(s, z0, t, rng).first;

    for (int t = 2; t <= T; ++t) {
      const Vec& z_t = zs[t - 1];
      const Vec mu_q = forward_posterior_mean(s, z0, z_t, t);
      const Vec mu_p = posterior_mean_from_eps(s, z_t, t, net.predict_noise(z_t, t));
      // Equal variances on both sides, so the KL is a scaled mean gap.
      rep.step_terms[t - 2] -= squared_distance(mu_q, mu_p) / (2.0 * s.post_var(t));
    }
    const Vec mu1 = posterior_mean_from_eps(s, zs[0], 1, net.predict_noise(zs[0], 1));
    rep.reconstruction_term += gaussian_log_density_iso(z0, mu1, s.post_var(1));

    if (rep.conditional) {
      for (int t = 1; t <= T; ++t) {
        const Vec& z_prev = t == 1 ? z0 : zs[t - 2];
        double term = 0.0;
        for (size_t i = 0; i < heads.size(); ++i) term += log_prob(*heads[i], z_prev, targets[i]);
        rep.classifier_step_terms[t - 1] += term;
      }
    }
  }

  const double inv = 1.0 / mc_draws;
  for (double& v : rep.step_terms) v *= inv;
  rep.reconstruction_term *= inv;
  if (rep.conditional) {
    for (double& v : rep.classifier_step_terms) v *= inv;
    for (double v : rep.classifier_step_terms) rep.classifier_term += v;
  }
  rep.total = rep.sum_of_parts();
  if (!std::isfinite(rep.total)) throw NumericError("elbo: non-finite bound");
  return rep;
}

}  // namespace

ElboReport elbo_unconditional(const NoiseSchedule& s, const Denoiser& net, const Vec& z0,
                              Rng& rng, int mc_draws) {
  return elbo_core(s, net, nullptr, nullptr, z0, rng, mc_draws);
}

ElboReport elbo_conditional(const NoiseSchedule& s, const Denoiser& net,
                            const ClassifierSet& classifiers,
                            const std::vector<LabelCondition>& conditions, const Vec& z0,
                            Rng& rng, int mc_draws) {
  return elbo_core(s, net, &classifiers, &conditions, z0, rng, mc_draws);
}

}  // namespace lcg
