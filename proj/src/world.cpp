#include "lcg/world.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lcg {

double gaussian_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double gaussian_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

void WorldSpec::validate() const {
  if (d <= 0) throw std::invalid_argument("WorldSpec: d must be positive");
  if (components.empty()) throw std::invalid_argument("WorldSpec: no mixture components");
  for (const auto& c : components) {
    if (static_cast<int>(c.mean.size()) != d)
      throw std::invalid_argument("WorldSpec: component mean dimension mismatch");
    if (!(c.stddev > 0.0)) throw std::invalid_argument("WorldSpec: component stddev must be positive");
  }
  for (const auto& a : attributes) {
    if (static_cast<int>(a.normal.size()) != d)
      throw std::invalid_argument("WorldSpec: attribute normal dimension mismatch");
    if (!(norm(a.normal) > 0.0))
      throw std::invalid_argument("WorldSpec: attribute normal must be nonzero");
  }
  for (size_t i = 0; i < attributes.size(); ++i) {
    const double p = attribute_positive_prob(static_cast<int>(i));
    if (p < 0.05 || p > 0.95)
      throw std::invalid_argument("WorldSpec: attribute '" + attributes[i].name +
                                  "' is too one-sided (P(label=1) = " + std::to_string(p) + ")");
  }
}

int WorldSpec::attribute_index(const std::string& name) const {
  for (size_t i = 0; i < attributes.size(); ++i)
    if (attributes[i].name == name) return static_cast<int>(i);
  return -1;
}

double WorldSpec::attribute_positive_prob(int attr) const {
  const auto& a = attributes[attr];
  const double un = norm(a.normal);
  double p = 0.0;
  for (const auto& c : components)
    p += gaussian_cdf((dot(a.normal, c.mean) + a.offset) / (c.stddev * un));
  return p / static_cast<double>(components.size());
}

WorldPreset world_preset_from_name(const std::string& name) {
  if (name == "quadrants2d") return WorldPreset::quadrants2d;
  if (name == "axes8d") return WorldPreset::axes8d;
  if (name == "axes8d_correlated") return WorldPreset::axes8d_correlated;
  throw std::invalid_argument("unknown world preset: " + name);
}

std::string world_preset_name(WorldPreset p) {
  switch (p) {
    case WorldPreset::quadrants2d: return "quadrants2d";
    case WorldPreset::axes8d: return "axes8d";
    case WorldPreset::axes8d_correlated: return "axes8d_correlated";
  }
  throw std::invalid_argument("unknown world preset");
}

WorldSpec standard_world(WorldPreset preset) {
  WorldSpec w;
  switch (preset) {
    case WorldPreset::quadrants2d: {
      w.d = 2;
      for (double sx : {1.0, -1.0})
        for (double sy : {1.0, -1.0})
          w.components.push_back({{2.0 * sx, 2.0 * sy}, 0.5});
      w.attributes.push_back({"A", {1.0, 0.0}, 0.0});
      w.attributes.push_back({"B", {0.0, 1.0}, 0.0});
      break;
    }
    case WorldPreset::axes8d:
    case WorldPreset::axes8d_correlated: {
      w.d = 8;
      for (double s0 : {1.0, -1.0})
        for (double s1 : {1.0, -1.0})
          for (double s2 : {1.0, -1.0}) {
            Vec mean(8, 0.0);
            mean[0] = 2.0 * s0;
            mean[1] = 2.0 * s1;
            mean[2] = 2.0 * s2;
            w.components.push_back({std::move(mean), 0.5});
          }
      auto axis = [](int i) {
        Vec u(8, 0.0);
        u[i] = 1.0;
        return u;
      };
      if (preset == WorldPreset::axes8d) {
        w.attributes.push_back({"A", axis(0), 0.0});
        w.attributes.push_back({"B", axis(1), 0.0});
        w.attributes.push_back({"C", axis(2), 0.0});
      } else {
        // B deliberately shares a direction with A, to probe edits that bleed
        // into neighboring attributes.
        Vec diag(8, 0.0);
        diag[0] = 1.0 / std::numbers::sqrt2;
        diag[1] = 1.0 / std::numbers::sqrt2;
        w.attributes.push_back({"A", axis(0), 0.0});
        w.attributes.push_back({"B", std::move(diag), 0.0});
        w.attributes.push_back({"C", axis(2), 0.0});
      }
      break;
    }
  }
  w.validate();
  return w;
}

Vec AttributedDataset::latent(int i) const {
  return Vec(latents.begin() + static_cast<size_t>(i) * d, latents.begin() + static_cast<size_t>(i + 1) * d);
}

Vec sample_world_point(const WorldSpec& w, Rng& rng) {
  const auto& c = w.components[rng.next_index(w.components.size())];
  Vec z = rng.gaussian_vec(w.d);
  for (int j = 0; j < w.d; ++j) z[j] = c.mean[j] + c.stddev * z[j];
  return z;
}

AttributedDataset sample_dataset(const WorldSpec& w, int n, Rng& rng) {
  w.validate();
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be at least 1");
  AttributedDataset ds;
  ds.d = w.d;
  for (const auto& a : w.attributes) ds.attribute_names.push_back(a.name);
  ds.latents.reserve(static_cast<size_t>(n) * w.d);
  ds.labels.reserve(static_cast<size_t>(n) * w.attributes.size());
  ds.provenance = w;
  ds.seed = rng.seed();
  for (int i = 0; i < n; ++i) {
    Vec z = sample_world_point(w, rng);
    const auto y = oracle_label(w, z);
    ds.latents.insert(ds.latents.end(), z.begin(), z.end());
    ds.labels.insert(ds.labels.end(), y.begin(), y.end());
  }
  return ds;
}

std::vector<uint8_t> oracle_label(const WorldSpec& w, const Vec& z) {
  if (static_cast<int>(z.size()) != w.d)
    throw std::invalid_argument("oracle_label: latent dimension mismatch");
  std::vector<uint8_t> y;
  y.reserve(w.attributes.size());
  for (const auto& a : w.attributes)
    y.push_back(dot(a.normal, z) + a.offset > 0.0 ? 1 : 0);
  return y;
}

namespace {

struct TruncatedMoments {
  double mass;
  double mean;
  double var;
};

// Moments of X ~ N(m, sd^2) restricted to X > a (lower) or X < a (!lower).
TruncatedMoments truncated_normal(double m, double sd, double a, bool lower_bound) {
  const double alpha = (a - m) / sd;
  TruncatedMoments r{};
  if (lower_bound) {
    const double mass = 1.0 - gaussian_cdf(alpha);
    if (mass <= 0.0) return {0.0, 0.0, 0.0};
    const double lambda = gaussian_pdf(alpha) / mass;
    r.mass = mass;
    r.mean = m + sd * lambda;
    r.var = sd * sd * (1.0 + alpha * lambda - lambda * lambda);
  } else {
    const double mass = gaussian_cdf(alpha);
    if (mass <= 0.0) return {0.0, 0.0, 0.0};
    const double lambda = gaussian_pdf(alpha) / mass;
    r.mass = mass;
    r.mean = m - sd * lambda;
    r.var = sd * sd * (1.0 - alpha * lambda - lambda * lambda);
  }
  if (r.var < 0.0) r.var = 0.0;  // cancellation deep in a tail
  return r;
}

}  // namespace

Moments world_moments(const WorldSpec& w) {
  return oracle_conditional_moments(w, {});
}

Moments oracle_conditional_moments(const WorldSpec& w, const std::vector<LabelCondition>& conditions) {
  w.validate();

  struct Dir {
    Vec unit;
    double threshold;   // condition is x > threshold or x < threshold along unit
    bool lower;
  };
  std::vector<Dir> dirs;
  dirs.reserve(conditions.size());
  for (const auto& c : conditions) {
    const int idx = w.attribute_index(c.attribute);
    if (idx < 0) throw std::invalid_argument("oracle_conditional_moments: unknown attribute " + c.attribute);
    if (c.value != 0 && c.value != 1)
      throw std::invalid_argument("oracle_conditional_moments: labels are binary");
    const auto& a = w.attributes[idx];
    const double un = norm(a.normal);
    Dir dir;
    dir.unit = scaled(a.normal, 1.0 / un);
    dir.threshold = -a.offset / un;
    dir.lower = (c.value == 1);  // label 1 <=> u.z + c > 0 <=> x > -c/|u|
    for (const auto& other : dirs)
      if (std::abs(dot(other.unit, dir.unit)) > 1e-9)
        throw std::invalid_argument(
            "oracle_conditional_moments: condition normals must be mutually orthogonal");
    dirs.push_back(std::move(dir));
  }

  const int d = w.d;
  double total_mass = 0.0;
  Vec mean(d, 0.0);
  Matrix second(d, d, 0.0);  // E[z z^T] accumulated per component

  for (const auto& comp : w.components) {
    double mass = 1.0 / static_cast<double>(w.components.size());
    Vec cmean = comp.mean;
    // cov = stddev^2 I + sum_i (var_i - stddev^2) u_i u_i^T
    std::vector<double> var_deltas(dirs.size(), 0.0);
    bool dead = false;
    for (size_t i = 0; i < dirs.size(); ++i) {
      const double proj = dot(dirs[i].unit, comp.mean);
      const auto tm = truncated_normal(proj, comp.stddev, dirs[i].threshold, dirs[i].lower);
      if (tm.mass <= 0.0) {
        dead = true;
        break;
      }
      mass *= tm.mass;
      axpy(cmean, tm.mean - proj, dirs[i].unit);
      var_deltas[i] = tm.var - comp.stddev * comp.stddev;
    }
    if (dead || mass <= 0.0) continue;

    total_mass += mass;
    axpy(mean, mass, cmean);
    const double s2 = comp.stddev * comp.stddev;
    for (int r = 0; r < d; ++r)
      for (int c2 = 0; c2 < d; ++c2) {
        double cov_rc = (r == c2) ? s2 : 0.0;
        for (size_t i = 0; i < dirs.size(); ++i)
          cov_rc += var_deltas[i] * dirs[i].unit[r] * dirs[i].unit[c2];
        second(r, c2) += mass * (cov_rc + cmean[r] * cmean[c2]);
      }
  }

  if (total_mass < 1e-12)
    throw std::domain_error("oracle_conditional_moments: condition has (near-)zero probability");

  Moments out;
  out.mean = scaled(mean, 1.0 / total_mass);
  out.cov = Matrix(d, d, 0.0);
  for (int r = 0; r < d; ++r)
    for (int c2 = 0; c2 < d; ++c2)
      out.cov(r, c2) = second(r, c2) / total_mass - out.mean[r] * out.mean[c2];
  return out;
}

}  // namespace lcg
