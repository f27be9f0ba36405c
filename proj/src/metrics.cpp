#include "lcg/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lcg {

std::vector<AccEntry> acc(const WorldSpec& w, const std::vector<Vec>& samples,
                          const std::vector<LabelCondition>& targets) {
  std::vector<AccEntry> out;
  if (targets.empty()) return out;
  if (samples.empty()) throw std::invalid_argument("acc: no samples");
  for (const auto& target : targets) {
    const int idx = w.attribute_index(target.attribute);
    if (idx < 0) throw std::invalid_argument("acc: unknown attribute " + target.attribute);
    if (target.value != 0 && target.value != 1) throw std::invalid_argument("acc: labels are binary");
    int hits = 0;
    for (const auto& z : samples) {
      const auto& a = w.attributes[idx];
      const int label = dot(a.normal, z) + a.offset > 0.0 ? 1 : 0;
      hits += label == target.value;
    }
    out.push_back({target.attribute, static_cast<double>(hits) / samples.size()});
  }
  return out;
}

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) e(i, j) = m(i, j);
  return e;
}

// PSD square root via symmetric eigendecomposition, clamping eigenvalues at 0.
// Rejects genuinely indefinite inputs.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success) throw std::runtime_error("latent_fid: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, std::abs(ev.maxCoeff()));
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-8 * scale)
      throw std::invalid_argument("latent_fid: covariance is not positive semidefinite");
    ev(i) = std::sqrt(std::max(0.0, ev(i)));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double latent_fid_moments(const Vec& m1, const Matrix& c1, const Vec& m2, const Matrix& c2) {
  const int d = static_cast<int>(m1.size());
  if (static_cast<int>(m2.size()) != d || c1.rows != d || c1.cols != d || c2.rows != d || c2.cols != d)
    throw std::invalid_argument("latent_fid: dimension mismatch");

  const Eigen::MatrixXd e1 = to_eigen(c1);
  const Eigen::MatrixXd e2 = to_eigen(c2);
  const Eigen::MatrixXd s2 = psd_sqrt(e2);
  // tr (c1 c2)^(1/2) = tr (c2^(1/2) c1 c2^(1/2))^(1/2), the latter is symmetric PSD.
  const Eigen::MatrixXd cross = psd_sqrt(s2 * e1 * s2);

  double fid = squared_distance(m1, m2) + e1.trace() + e2.trace() - 2.0 * cross.trace();
  if (fid < 0.0) {
    if (fid < -1e-6) throw std::runtime_error("latent_fid: negative distance beyond tolerance");
    fid = 0.0;
  }
  return fid;
}

Vec sample_mean(const std::vector<Vec>& samples) {
  if (samples.empty()) throw std::invalid_argument("sample_mean: no samples");
  const int d = static_cast<int>(samples[0].size());
  Vec m = zeros(d);
  for (const auto& z : samples) axpy(m, 1.0, z);
  return scaled(m, 1.0 / samples.size());
}

Matrix sample_covariance(const std::vector<Vec>& samples) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw std::invalid_argument("sample_covariance: need at least 2 samples");
  const int d = static_cast<int>(samples[0].size());
  const Vec m = sample_mean(samples);
  Matrix c(d, d, 0.0);
  for (const auto& z : samples)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) c(i, j) += (z[i] - m[i]) * (z[j] - m[j]);
  for (double& v : c.data) v /= (n - 1);
  return c;
}

double latent_fid(const std::vector<Vec>& samples, const Vec& ref_mean, const Matrix& ref_cov) {
  const int d = static_cast<int>(ref_mean.size());
  if (static_cast<int>(samples.size()) < d + 1)
    throw std::invalid_argument("latent_fid: need at least d + 1 samples to fit a covariance");
  return latent_fid_moments(sample_mean(samples), sample_covariance(samples), ref_mean, ref_cov);
}

double IdentityReport::quantile(double q) const {
  if (distances.empty()) throw std::invalid_argument("IdentityReport: empty");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("IdentityReport: quantile in [0,1]");
  std::vector<double> sorted = distances;
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * (sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

IdentityReport identity_distance(const std::vector<Vec>& sources, const std::vector<Vec>& outputs) {
  if (sources.size() != outputs.size())
    throw std::invalid_argument("identity_distance: source/output count mismatch");
  if (sources.empty()) throw std::invalid_argument("identity_distance: empty input");
  IdentityReport rep;
  rep.distances.reserve(sources.size());
  double sum = 0.0;
  for (size_t i = 0; i < sources.size(); ++i) {
    const double dist = std::sqrt(squared_distance(sources[i], outputs[i]));
    rep.distances.push_back(dist);
    sum += dist;
  }
  rep.mean = sum / sources.size();
  return rep;
}

DisentanglementReport disentanglement_report(const WorldSpec& w, const Denoiser* net,
                                             const NoiseSchedule* s, const ClassifierSet& classifiers,
                                             const std::vector<EditStep>& edits, int n, Rng& rng,
                                             EditMode mode, int t_start) {
  w.validate();
  if (n < 1) throw std::invalid_argument("disentanglement_report: n must be positive");
  if (edits.empty()) throw std::invalid_argument("disentanglement_report: no edits");
  if (mode == EditMode::diffusion && (net == nullptr || s == nullptr || t_start < 1))
    throw std::invalid_argument("disentanglement_report: diffusion mode needs net, schedule, t_start");

  const int k = static_cast<int>(w.attributes.size());
  for (const auto& e : edits)
    if (w.attribute_index(e.attribute) < 0)
      throw std::invalid_argument("disentanglement_report: unknown attribute " + e.attribute);

  std::vector<Vec> current;
  current.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) current.push_back(sample_world_point(w, rng));

  // Uniform per-sample targets for every attribute; accuracy is measured
  // against these throughout the edit sequence.
  std::vector<std::vector<int>> target(static_cast<size_t>(n), std::vector<int>(k));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) target[i][j] = static_cast<int>(rng.next_index(2));

  auto acc_against_targets = [&]() {
    std::vector<double> a(static_cast<size_t>(k), 0.0);
    for (int i = 0; i < n; ++i) {
      const auto labels = oracle_label(w, current[i]);
      for (int j = 0; j < k; ++j) a[j] += labels[j] == target[i][j];
    }
    for (double& v : a) v /= n;
    return a;
  };

  DisentanglementReport rep;
  for (const auto& a : w.attributes) rep.attributes.push_back(a.name);
  rep.deltas = Matrix(static_cast<int>(edits.size()), k, 0.0);
  rep.baseline_acc = acc_against_targets();

  std::vector<double> before = rep.baseline_acc;
  for (size_t e = 0; e < edits.size(); ++e) {
    const auto& edit = edits[e];
    const int aidx = w.attribute_index(edit.attribute);
    rep.edit_targets.push_back(edit.attribute);
    for (int i = 0; i < n; ++i) {
      GuidanceSpec spec;
      spec.terms.push_back({edit.attribute,
                            target[i][aidx] == 1 ? Polarity::Assert : Polarity::Negate,
                            ScaleSchedule::constant(edit.alpha)});
      spec.source = SourceTerm{current[i], ScaleSchedule::constant(edit.gamma), 1.0};
      current[i] = mode == EditMode::linear
                       ? linear_solution(spec.terms, *spec.source, classifiers)
                       : manipulate(spec, *net, classifiers, *s, current[i], t_start, rng);
    }
    const auto after = acc_against_targets();
    for (int j = 0; j < k; ++j)
      rep.deltas(static_cast<int>(e), j) =
          j == aidx ? std::numeric_limits<double>::quiet_NaN() : after[j] - before[j];
    rep.targeted_acc.push_back(after[aidx]);
    before = after;
  }
  return rep;
}

}  // namespace lcg
