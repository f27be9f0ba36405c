#include "lcg/vec.hpp"

#include <cassert>
#include <cmath>

namespace lcg {

Vec zeros(int d) { return Vec(static_cast<size_t>(d), 0.0); }

double dot(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(const Vec& a) { return dot(a, a); }

double norm(const Vec& a) { return std::sqrt(squared_norm(a)); }

double squared_distance(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpy(Vec& y, double c, const Vec& x) {
  assert(y.size() == x.size());
  for (size_t i = 0; i < y.size(); ++i) y[i] += c * x[i];
}

Vec scaled(const Vec& x, double c) {
  Vec out(x);
  for (double& v : out) v *= c;
  return out;
}

Vec add(const Vec& a, const Vec& b) {
  Vec out(a);
  axpy(out, 1.0, b);
  return out;
}

Vec sub(const Vec& a, const Vec& b) {
  Vec out(a);
  axpy(out, -1.0, b);
  return out;
}

bool all_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n, 0.0);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double trace(const Matrix& m) {
  assert(m.rows == m.cols);
  double s = 0.0;
  for (int i = 0; i < m.rows; ++i) s += m(i, i);
  return s;
}

}  // namespace lcg
