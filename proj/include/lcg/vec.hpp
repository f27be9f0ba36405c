#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lcg {

using Vec = std::vector<double>;

Vec zeros(int d);

double dot(const Vec& a, const Vec& b);
double squared_norm(const Vec& a);
double norm(const Vec& a);
double squared_distance(const Vec& a, const Vec& b);

// y += c * x
void axpy(Vec& y, double c, const Vec& x);
Vec scaled(const Vec& x, double c);
Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);

bool all_finite(std::span<const double> x);

// Dense row-major matrix, small sizes only.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  static Matrix identity(int n);
};

double trace(const Matrix& m);

}  // namespace lcg
