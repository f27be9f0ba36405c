#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lcg/rng.hpp"
#include "lcg/vec.hpp"

namespace lcg {

struct MixtureComponent {
  Vec mean;
  double stddev = 1.0;
};

// Binary attribute defined by a half-space: label 1 iff normal.z + offset > 0
// (strict, so points exactly on the boundary get label 0).
struct WorldAttribute {
  std::string name;
  Vec normal;
  double offset = 0.0;
};

struct WorldSpec {
  int d = 0;
  std::vector<MixtureComponent> components;  // equal mixture weights
  std::vector<WorldAttribute> attributes;

  void validate() const;
  int attribute_index(const std::string& name) const;  // -1 if absent
  // P(label = 1) under the mixture, exact via the Gaussian CDF.
  double attribute_positive_prob(int attr) const;
};

enum class WorldPreset { quadrants2d, axes8d, axes8d_correlated };

WorldPreset world_preset_from_name(const std::string& name);
std::string world_preset_name(WorldPreset p);
WorldSpec standard_world(WorldPreset preset);

struct AttributedDataset {
  int d = 0;
  std::vector<std::string> attribute_names;
  std::vector<double> latents;   // n x d, row-major
  std::vector<uint8_t> labels;   // n x k, row-major
  std::optional<WorldSpec> provenance;
  uint64_t seed = 0;

  int n() const { return d == 0 ? 0 : static_cast<int>(latents.size()) / d; }
  int k() const { return static_cast<int>(attribute_names.size()); }
  Vec latent(int i) const;
  int label(int i, int j) const { return labels[static_cast<size_t>(i) * attribute_names.size() + j]; }
};

AttributedDataset sample_dataset(const WorldSpec& w, int n, Rng& rng);

// One draw from the mixture, no labels.
Vec sample_world_point(const WorldSpec& w, Rng& rng);

std::vector<uint8_t> oracle_label(const WorldSpec& w, const Vec& z);

struct LabelCondition {
  std::string attribute;
  int value = 1;  // 0 or 1
};

struct Moments {
  Vec mean;
  Matrix cov;
};

// Exact mean/covariance of the mixture restricted to a conjunction of
// half-space conditions. Requires the conditioned attribute normals to be
// mutually orthogonal (both shipped presets satisfy this); each component then
// factorizes into independent truncated normals along the condition directions.
Moments oracle_conditional_moments(const WorldSpec& w, const std::vector<LabelCondition>& conditions);

// Unconditional mixture moments (empty condition list).
Moments world_moments(const WorldSpec& w);

double gaussian_cdf(double x);
double gaussian_pdf(double x);

}  // namespace lcg
