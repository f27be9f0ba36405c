#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lcg/mlp.hpp"
#include "lcg/rng.hpp"
#include "lcg/vec.hpp"
#include "lcg/world.hpp"

namespace lcg {

enum class ClassifierKind { linear, mlp };

// Binary logistic head over latents: p(y=1|z) = sigmoid(logit(z)).
struct LatentClassifier {
  ClassifierKind kind = ClassifierKind::linear;
  std::string attribute;
  // linear: logit = w.z + b
  Vec w;
  double b = 0.0;
  // mlp: logit = net(z) (scalar output)
  std::optional<Mlp> net;

  int dim() const;
  double logit(const Vec& z) const;
  Vec logit_grad(const Vec& z) const;

  static LatentClassifier linear_from(std::string attribute, Vec w, double b);
};

using ClassifierSet = std::map<std::string, LatentClassifier>;

// log p(y|z), numerically stable for arbitrarily large logits.
double log_prob(const LatentClassifier& c, const Vec& z, int y);
Vec grad_log_prob(const LatentClassifier& c, const Vec& z, int y);

struct ClassifierTrainOptions {
  int epochs = 60;
  double lr = 0.05;
  double l2 = 1e-4;  // applied to weight entries, not biases
  int batch = 256;
  double val_fraction = 0.2;
  std::vector<int> hidden = {32};  // mlp kind only
};

struct ClassifierTrainReport {
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double final_loss = 0.0;
  int n_train = 0;
  int n_val = 0;
};

LatentClassifier train_classifier(ClassifierKind kind, const AttributedDataset& data,
                                  const std::string& attribute, const ClassifierTrainOptions& opt,
                                  Rng& rng, ClassifierTrainReport* report = nullptr);

// Linear classifiers expose their half-space normal.
const Vec& weight_direction(const LatentClassifier& c);

// Cosine similarities of the weight directions; unit diagonal.
Matrix pairwise_correlation(const std::vector<const LatentClassifier*>& classifiers);

}  // namespace lcg
