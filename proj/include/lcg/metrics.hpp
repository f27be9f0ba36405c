#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lcg/classifier.hpp"
#include "lcg/denoiser.hpp"
#include "lcg/guidance.hpp"
#include "lcg/rng.hpp"
#include "lcg/schedule.hpp"
#include "lcg/vec.hpp"
#include "lcg/world.hpp"

namespace lcg {

struct AccEntry {
  std::string attribute;
  double accuracy = 0.0;
};

// Fraction of samples whose oracle label matches the target, per attribute.
std::vector<AccEntry> acc(const WorldSpec& w, const std::vector<Vec>& samples,
                          const std::vector<LabelCondition>& targets);

// Frechet distance between Gaussians fitted to two moment pairs:
//   |m1 - m2|^2 + tr(c1 + c2 - 2 (c1 c2)^{1/2})
double latent_fid_moments(const Vec& m1, const Matrix& c1, const Vec& m2, const Matrix& c2);

// Fits mean/covariance (unbiased) to the samples first; needs n >= d + 1.
double latent_fid(const std::vector<Vec>& samples, const Vec& ref_mean, const Matrix& ref_cov);

Vec sample_mean(const std::vector<Vec>& samples);
Matrix sample_covariance(const std::vector<Vec>& samples);

struct IdentityReport {
  std::vector<double> distances;
  double mean = 0.0;
  double quantile(double q) const;  // linear interpolation on sorted distances
};

IdentityReport identity_distance(const std::vector<Vec>& sources, const std::vector<Vec>& outputs);

enum class EditMode { linear, diffusion };

struct EditStep {
  std::string attribute;
  double alpha = 1.0;  // attribute scale (assert if target 1, negate if target 0)
  double gamma = 1.0;  // source pull
};

// Applies each single-attribute edit in sequence to n world samples, with
// per-sample targets drawn uniformly, and reports how every attribute's
// oracle accuracy (vs those targets) moves at each edit. deltas(k, j) is the
// accuracy change of attribute j caused by edit k; the self cell is NaN and
// the targeted accuracy after each edit is reported separately.
struct DisentanglementReport {
  std::vector<std::string> attributes;
  std::vector<std::string> edit_targets;
  Matrix deltas;                      // edits x attributes, NaN on targeted cells
  std::vector<double> targeted_acc;   // after each edit
  std::vector<double> baseline_acc;   // before any edit
};

DisentanglementReport disentanglement_report(const WorldSpec& w, const Denoiser* net,
                                             const NoiseSchedule* s, const ClassifierSet& classifiers,
                                             const std::vector<EditStep>& edits, int n, Rng& rng,
                                             EditMode mode = EditMode::linear, int t_start = 0);

}  // namespace lcg
