#include "lcg/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lcg {
namespace {

double softplus(double x) {
  if (x > 35.0) return x;        // log1p(exp(x)) == x to double precision
  if (x < -35.0) return 0.0;
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

int LatentClassifier::dim() const {
  return kind == ClassifierKind::linear ? static_cast<int>(w.size()) : net->input_dim();
}

double LatentClassifier::logit(const Vec& z) const {
  if (kind == ClassifierKind::linear) {
    if (z.size() != w.size()) throw std::invalid_argument("LatentClassifier: dimension mismatch");
    return dot(w, z) + b;
  }
  return net->forward(z)[0];
}

Vec LatentClassifier::logit_grad(const Vec& z) const {
  if (kind == ClassifierKind::linear) {
    if (z.size() != w.size()) throw std::invalid_argument("LatentClassifier: dimension mismatch");
    return w;
  }
  return net->backward(z, {1.0}).input_grad;
}

LatentClassifier LatentClassifier::linear_from(std::string attribute, Vec w, double b) {
  LatentClassifier c;
  c.kind = ClassifierKind::linear;
  c.attribute = std::move(attribute);
  c.w = std::move(w);
  c.b = b;
  return c;
}

double log_prob(const LatentClassifier& c, const Vec& z, int y) {
  if (y != 0 && y != 1) throw std::invalid_argument("log_prob: y must be 0 or 1");
  const double f = c.logit(z);
  // log sigmoid(f) = -softplus(-f); log(1 - sigmoid(f)) = -softplus(f)
  return y == 1 ? -softplus(-f) : -softplus(f);
}

Vec grad_log_prob(const LatentClassifier& c, const Vec& z, int y) {
  if (y != 0 && y != 1) throw std::invalid_argument("grad_log_prob: y must be 0 or 1");
  const double f = c.logit(z);
  const double coef = y == 1 ? 1.0 - sigmoid(f) : -sigmoid(f);
  return scaled(c.logit_grad(z), coef);
}

LatentClassifier train_classifier(ClassifierKind kind, const AttributedDataset& data,
                                  const std::string& attribute, const ClassifierTrainOptions& opt,
                                  Rng& rng, ClassifierTrainReport* report) {
  const auto it = std::find(data.attribute_names.begin(), data.attribute_names.end(), attribute);
  if (it == data.attribute_names.end())
    throw std::invalid_argument("train_classifier: unknown attribute " + attribute);
  const int attr = static_cast<int>(it - data.attribute_names.begin());
  const int n = data.n();
  if (n < 2) throw std::invalid_argument("train_classifier: need at least 2 samples");
  if (opt.epochs < 1 || opt.batch < 1 || !(opt.lr > 0.0) || opt.l2 < 0.0)
    throw std::invalid_argument("train_classifier: bad options");
  if (opt.val_fraction < 0.0 || opt.val_fraction >= 1.0)
    throw std::invalid_argument("train_classifier: val_fraction must be in [0, 1)");

  int positives = 0;
  for (int i = 0; i < n; ++i) positives += data.label(i, attr);
  if (positives == 0 || positives == n)
    throw std::invalid_argument("train_classifier: attribute '" + attribute +
                                "' has a single class in this dataset");

  // Deterministic shuffle, then a held-out tail for validation.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.next_index(static_cast<uint64_t>(i) + 1)]);
  int n_val = static_cast<int>(std::lround(opt.val_fraction * n));
  n_val = std::clamp(n_val, 0, n - 1);
  const int n_train = n - n_val;

  LatentClassifier c;
  c.kind = kind;
  c.attribute = attribute;
  if (kind == ClassifierKind::linear) {
    c.w = zeros(data.d);
    c.b = 0.0;
  } else {
    std::vector<int> dims{data.d};
    for (int h : opt.hidden) dims.push_back(h);
    dims.push_back(1);
    c.net = Mlp::random_init(std::move(dims), Activation::Tanh, rng);
  }

  const int pcount = kind == ClassifierKind::linear ? data.d + 1 : c.net->param_count();
  AdamState adam(static_cast<size_t>(pcount));
  std::vector<double> grad(static_cast<size_t>(pcount));
  const std::vector<uint8_t> wmask =
      kind == ClassifierKind::mlp ? c.net->weight_mask() : std::vector<uint8_t>{};

  double last_loss = 0.0;
  std::vector<int> train_idx(order.begin(), order.begin() + n_train);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (int i = n_train - 1; i > 0; --i)
      std::swap(train_idx[i], train_idx[rng.next_index(static_cast<uint64_t>(i) + 1)]);
    for (int start = 0; start < n_train; start += opt.batch) {
      const int bsize = std::min(opt.batch, n_train - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0.0;
      for (int bi = 0; bi < bsize; ++bi) {
        const int i = train_idx[start + bi];
        const Vec z = data.latent(i);
        const int y = data.label(i, attr);
        const double f = c.logit(z);
        loss += y == 1 ? softplus(-f) : softplus(f);
        const double coef = (sigmoid(f) - y) / bsize;
        if (kind == ClassifierKind::linear) {
          for (int j = 0; j < data.d; ++j) grad[j] += coef * z[j];
          grad[data.d] += coef;
        } else {
          const auto bp = c.net->backward(z, {coef});
          for (size_t j = 0; j < bp.param_grad.size(); ++j) grad[j] += bp.param_grad[j];
        }
      }
      loss /= bsize;
      if (kind == ClassifierKind::linear) {
        for (int j = 0; j < data.d; ++j) {
          grad[j] += 2.0 * opt.l2 * c.w[j];
          loss += opt.l2 * c.w[j] * c.w[j];
        }
        // w and b updated through one flat view
        std::vector<double> flat(c.w.begin(), c.w.end());
        flat.push_back(c.b);
        adam_step(flat, grad, adam, opt.lr);
        std::copy(flat.begin(), flat.end() - 1, c.w.begin());
        c.b = flat.back();
      } else {
        auto params = c.net->params();
        for (size_t j = 0; j < params.size(); ++j)
          if (wmask[j]) {
            grad[j] += 2.0 * opt.l2 * params[j];
            loss += opt.l2 * params[j] * params[j];
          }
        adam_step(params, grad, adam, opt.lr);
      }
      last_loss = loss;
    }
  }

  if (report) {
    auto accuracy = [&](int begin, int end) {
      if (end <= begin) return 0.0;
      int ok = 0;
      for (int p = begin; p < end; ++p) {
        const int i = order[p];
        const int pred = c.logit(data.latent(i)) > 0.0 ? 1 : 0;
        ok += pred == data.label(i, attr);
      }
      return static_cast<double>(ok) / (end - begin);
    };
    report->train_accuracy = accuracy(0, n_train);
    report->val_accuracy = accuracy(n_train, n);
    report->final_loss = last_loss;
    report->n_train = n_train;
    report->n_val = n_val;
  }
  return c;
}

const Vec& weight_direction(const LatentClassifier& c) {
  if (c.kind != ClassifierKind::linear)
    throw std::invalid_argument("weight_direction: only linear classifiers expose a direction");
  return c.w;
}

Matrix pairwise_correlation(const std::vector<const LatentClassifier*>& classifiers) {
  const int k = static_cast<int>(classifiers.size());
  Matrix m(k, k, 0.0);
  std::vector<double> norms(k);
  for (int i = 0; i < k; ++i) {
    norms[i] = norm(weight_direction(*classifiers[i]));
    if (!(norms[i] > 0.0))
      throw std::invalid_argument("pairwise_correlation: zero-norm weight vector");
  }
  for (int i = 0; i < k; ++i) {
    m(i, i) = 1.0;
    for (int j = i + 1; j < k; ++j) {
      const double c = dot(weight_direction(*classifiers[i]), weight_direction(*classifiers[j])) /
                       (norms[i] * norms[j]);
      m(i, j) = c;
      m(j, i) = c;
    }
  }
  return m;
}

}  // namespace lcg
