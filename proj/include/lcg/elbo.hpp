#pragma once

#include <vector>

#include "lcg/classifier.hpp"
#include "lcg/denoiser.hpp"
#include "lcg/rng.hpp"
#include "lcg/schedule.hpp"
#include "lcg/vec.hpp"
#include "lcg/world.hpp"

namespace lcg {

// Variational bound on log p(z0), split into its three standard pieces:
//   prior_term          E[log p(z_T) - log q(z_T|z0)]          (closed form)
//   step_terms[t-2]     E[log p(z_{t-1}|z_t) - log q(z_{t-1}|z_t,z0)], t = 2..T
//   reconstruction_term E[log p(z0|z1)]
// Conditional bounds add classifier_step_terms[t-1] = E[sum_i log p(y_i|z_{t-1})].
struct ElboReport {
  double total = 0.0;
  double prior_term = 0.0;
  std::vector<double> step_terms;            // size T-1
  double reconstruction_term = 0.0;
  bool conditional = false;
  double classifier_term = 0.0;
  std::vector<double> classifier_step_terms;  // size T when conditional

  double sum_of_parts() const;
};

double gaussian_log_density_iso(const Vec& x, const Vec& mean, double var);
double gaussian_kl_iso(const Vec& mu1, double v1, const Vec& mu2, double v2);

ElboReport elbo_unconditional(const NoiseSchedule& s, const Denoiser& net, const Vec& z0,
                              Rng& rng, int mc_draws);

// Same Monte Carlo layout and rng consumption as the unconditional bound, so
// two runs from equal-seeded rngs differ exactly by the classifier term.
ElboReport elbo_conditional(const NoiseSchedule& s, const Denoiser& net,
                            const ClassifierSet& classifiers,
                            const std::vector<LabelCondition>& conditions, const Vec& z0,
                            Rng& rng, int mc_draws);

}  // namespace lcg
