#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lcg/classifier.hpp"
#include "lcg/denoiser.hpp"
#include "lcg/rng.hpp"
#include "lcg/sampler.hpp"
#include "lcg/schedule.hpp"
#include "lcg/vec.hpp"

namespace lcg {

// Per-timestep scale, linear in t between value(1) and value(T).
// Constant schedules are the common case.
struct ScaleSchedule {
  double at_t1 = 0.0;
  double at_T = 0.0;

  static ScaleSchedule constant(double v) { return {v, v}; }
  bool is_constant() const { return at_t1 == at_T; }
  double final() const { return at_t1; }  // scale at the last reverse step
  double at(int t, int T) const {
    if (T <= 1) return at_t1;
    return at_t1 + (at_T - at_t1) * static_cast<double>(t - 1) / (T - 1);
  }
};

enum class Polarity { Assert, Negate };

struct GuidanceTerm {
  std::string attribute;
  Polarity polarity = Polarity::Assert;
  ScaleSchedule scale;
};

// Quadratic pull toward a source latent: gamma_t * (z_hat - z_t) / sigma2.
struct SourceTerm {
  Vec z_hat;
  ScaleSchedule gamma;
  double sigma2 = 1.0;
};

struct GuidanceSpec {
  std::vector<GuidanceTerm> terms;
  std::optional<SourceTerm> source;
  bool use_unconditional_score = false;

  void validate() const;
};

// Composed score at (z_t, t):
//   [model score if use_unconditional_score]
//   + sum_assert alpha_t * grad log p(y=1|z_t)
//   - sum_negate beta_t  * grad log p(y=1|z_t)
//   + gamma_t * (z_hat - z_t) / sigma2            [if source]
// net may be null when use_unconditional_score is false.
Vec compose_score(const GuidanceSpec& spec, const Denoiser* net, const ClassifierSet& classifiers,
                  const NoiseSchedule& s, const Vec& z_t, int t);

// Full reverse chains with the composed score as guidance. The model score is
// already inside each sampler step, so use_unconditional_score must stay off
// here.
std::vector<Vec> guided_sample(const GuidanceSpec& spec, const Denoiser& net,
                               const ClassifierSet& classifiers, const NoiseSchedule& s, int n,
                               SamplerKind kind, Rng& rng, double eta = 0.0);

// Corrupt z_hat forward to t_start, then run the guided reverse chain down to 0.
// spec.source must be present and hold this z_hat.
Vec manipulate(const GuidanceSpec& spec, const Denoiser& net, const ClassifierSet& classifiers,
               const NoiseSchedule& s, const Vec& z_hat, int t_start, Rng& rng,
               SamplerKind kind = SamplerKind::ddpm, double eta = 0.0);

// Chain of edits; each edit's source is the previous edit's output.
// Returns the intermediate result after every edit.
std::vector<Vec> sequential_edit(std::vector<GuidanceSpec> edits, const Denoiser& net,
                                 const ClassifierSet& classifiers, const NoiseSchedule& s,
                                 const Vec& z_hat, int t_start, Rng& rng,
                                 SamplerKind kind = SamplerKind::ddpm);

// Degenerate case with linear classifiers, constant classifier gradients
// (the sigmoid slope folded into the scales) and a non-informative prior:
//   z0 = z_hat + (1/gamma0) (sum_assert alpha0 w - sum_negate beta0 w)
// using each schedule's final-step scale.
Vec linear_solution(const std::vector<GuidanceTerm>& terms, const SourceTerm& source,
                    const ClassifierSet& classifiers);

// Explicit fixed-point iteration of the same stationarity condition:
//   z <- z + step (sum +-scale w - gamma0 (z - z_hat) / sigma2)
// Converges geometrically at rate |1 - step*gamma0/sigma2| to linear_solution.
Vec fixed_point_flow(const std::vector<GuidanceTerm>& terms, const SourceTerm& source,
                     const ClassifierSet& classifiers, const Vec& z_init, double step, int iters);

}  // namespace lcg
