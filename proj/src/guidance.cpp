#include "lcg/guidance.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "lcg/errors.hpp"

namespace lcg {

void GuidanceSpec::validate() const {
  std::set<std::string> seen;
  for (const auto& term : terms) {
    if (term.attribute.empty()) throw std::invalid_argument("GuidanceSpec: term without attribute");
    if (!seen.insert(term.attribute).second)
      throw std::invalid_argument("GuidanceSpec: duplicate attribute '" + term.attribute + "'");
  }
  if (!use_unconditional_score && terms.empty() && !source)
    throw std::invalid_argument("GuidanceSpec: nothing to compose");
  if (source && !(source->sigma2 > 0.0))
    throw std::invalid_argument("GuidanceSpec: source sigma2 must be positive");
}

namespace {

const LatentClassifier& head_for(const ClassifierSet& classifiers, const std::string& attribute) {
  const auto it = classifiers.find(attribute);
  if (it == classifiers.end())
    throw std::invalid_argument("compose_score: no classifier for attribute '" + attribute + "'");
  return it->second;
}

}  // namespace

Vec compose_score(const GuidanceSpec& spec, const Denoiser* net, const ClassifierSet& classifiers,
                  const NoiseSchedule& s, const Vec& z_t, int t) {
  spec.validate();
  if (t < 1 || t > s.T) throw std::invalid_argument("compose_score: t out of range");

  Vec out = zeros(static_cast<int>(z_t.size()));
  if (spec.use_unconditional_score) {
    if (net == nullptr)
      throw std::invalid_argument("compose_score: unconditional score requested without a denoiser");
    out = score_from_noise(s, net->predict_noise(z_t, t), t);
  }
  for (const auto& term : spec.terms) {
    const double scale = term.scale.at(t, s.T);
    const Vec g = grad_log_prob(head_for(classifiers, term.attribute), z_t, 1);
    axpy(out, term.polarity == Polarity::Assert ? scale : -scale, g);
  }
  if (spec.source) {
    const double gamma = spec.source->gamma.at(t, s.T);
    if (spec.source->z_hat.size() != z_t.size())
      throw std::invalid_argument("compose_score: source dimension mismatch");
    const double c = gamma / spec.source->sigma2;
    for (size_t i = 0; i < out.size(); ++i) out[i] += c * (spec.source->z_hat[i] - z_t[i]);
  }
  return out;
}

std::vector<Vec> guided_sample(const GuidanceSpec& spec, const Denoiser& net,
                               const ClassifierSet& classifiers, const NoiseSchedule& s, int n,
                               SamplerKind kind, Rng& rng, double eta) {
  spec.validate();
  if (spec.use_unconditional_score)
    throw std::invalid_argument(
        "guided_sample: use_unconditional_score must be off; the sampler already applies the model");
  GuidanceFn fn = [&](const Vec& z, int t) { return compose_score(spec, &net, classifiers, s, z, t); };
  return sample(s, net, n, kind, fn, rng, eta);
}

Vec manipulate(const GuidanceSpec& spec, const Denoiser& net, const ClassifierSet& classifiers,
               const NoiseSchedule& s, const Vec& z_hat, int t_start, Rng& rng,
               SamplerKind kind, double eta) {
  spec.validate();
  if (!spec.source) throw std::invalid_argument("manipulate: spec.source is required");
  if (spec.source->z_hat != z_hat)
    throw std::invalid_argument("manipulate: spec.source.z_hat must equal the edited latent");
  if (spec.use_unconditional_score)
    throw std::invalid_argument("manipulate: use_unconditional_score must be off");
  if (t_start < 1 || t_start > s.T) throw std::invalid_argument("manipulate: t_start out of range");

  Vec z_t = forward_sample(s, z_hat, t_start, rng).first;
  GuidanceFn fn = [&](const Vec& z, int t) { return compose_score(spec, &net, classifiers, s, z, t); };
  return reverse_chain_from(s, net, std::move(z_t), t_start, kind, fn, rng, eta);
}

std::vector<Vec> sequential_edit(std::vector<GuidanceSpec> edits, const Denoiser& net,
                                 const ClassifierSet& classifiers, const NoiseSchedule& s,
                                 const Vec& z_hat, int t_start, Rng& rng, SamplerKind kind) {
  std::vector<Vec> outputs;
  outputs.reserve(edits.size());
  Vec current = z_hat;
  for (auto& edit : edits) {
    if (!edit.source) throw std::invalid_argument("sequential_edit: every edit needs a source term");
    edit.source->z_hat = current;
    current = manipulate(edit, net, classifiers, s, current, t_start, rng, kind);
    outputs.push_back(current);
  }
  return outputs;
}

namespace {

// sum over terms of +-scale * w, with the final-step scales.
Vec signed_weight_sum(const std::vector<GuidanceTerm>& terms, const ClassifierSet& classifiers,
                      int d) {
  Vec g = zeros(d);
  for (const auto& term : terms) {
    const auto& head = head_for(classifiers, term.attribute);
    if (head.kind != ClassifierKind::linear)
      throw std::invalid_argument("linear guidance requires linear classifiers (attribute '" +
                                  term.attribute + "')");
    const Vec& w = weight_direction(head);
    if (static_cast<int>(w.size()) != d)
      throw std::invalid_argument("linear guidance: classifier dimension mismatch");
    axpy(g, term.polarity == Polarity::Assert ? term.scale.final() : -term.scale.final(), w);
  }
  return g;
}

}  // namespace

Vec linear_solution(const std::vector<GuidanceTerm>& terms, const SourceTerm& source,
                    const ClassifierSet& classifiers) {
  const double gamma0 = source.gamma.final();
  if (!(gamma0 > 0.0)) throw std::invalid_argument("linear_solution: gamma0 must be positive");
  const int d = static_cast<int>(source.z_hat.size());
  Vec out = source.z_hat;
  axpy(out, source.sigma2 / gamma0, signed_weight_sum(terms, classifiers, d));
  return out;
}

Vec fixed_point_flow(const std::vector<GuidanceTerm>& terms, const SourceTerm& source,
                     const ClassifierSet& classifiers, const Vec& z_init, double step, int iters) {
  const double gamma0 = source.gamma.final();
  if (!(gamma0 > 0.0)) throw std::invalid_argument("fixed_point_flow: gamma0 must be positive");
  if (!(step > 0.0)) throw std::invalid_argument("fixed_point_flow: step must be positive");
  const double pull = gamma0 / source.sigma2;
  if (step * pull >= 2.0)
    throw std::invalid_argument("fixed_point_flow: step * gamma0 / sigma2 must be below 2");
  if (z_init.size() != source.z_hat.size())
    throw std::invalid_argument("fixed_point_flow: z_init dimension mismatch");

  const int d = static_cast<int>(z_init.size());
  const Vec g = signed_weight_sum(terms, classifiers, d);
  const double bound = 1e8 * (1.0 + norm(source.z_hat) + norm(g) / pull);

  Vec z = z_init;
  for (int it = 0; it < iters; ++it) {
    for (int j = 0; j < d; ++j) z[j] += step * (g[j] - pull * (z[j] - source.z_hat[j]));
    if (!all_finite(z) || norm(z) > bound)
      throw NumericError("fixed_point_flow: iteration diverged");
  }
  return z;
}

}  // namespace lcg
