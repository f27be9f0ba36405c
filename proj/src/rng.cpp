#include "lcg/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lcg {
namespace {

constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;

uint64_t mix64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

uint64_t Rng::next_u64() {
  ++counter_;
  return mix64(seed_ + counter_ * kGamma);
}

double Rng::next_uniform() {
  // 53 mantissa bits, shifted into (0, 1] so log() below is always defined.
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::next_gaussian() {
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void Rng::fill_gaussian(std::span<double> out) {
  for (double& v : out) v = next_gaussian();
}

Vec Rng::gaussian_vec(int d) {
  Vec out(static_cast<size_t>(d));
  fill_gaussian(out);
  return out;
}

uint64_t Rng::next_index(uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::next_index: n must be positive");
  const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;  // [0, 1)
  uint64_t idx = static_cast<uint64_t>(u * static_cast<double>(n));
  return idx >= n ? n - 1 : idx;
}

Rng Rng::substream(std::string_view name) const {
  return Rng(derive_seed(seed_, name));
}

Rng Rng::substream(uint64_t index) const {
  return Rng(mix64(seed_ ^ mix64(index * kGamma + 0x632BE59BD9B4E019ull)));
}

uint64_t Rng::derive_seed(uint64_t root, std::string_view name) {
  return mix64(root ^ fnv1a(name));
}

Vec gaussian_sample(Rng& rng, int d) {
  if (d < 0) throw std::invalid_argument("gaussian_sample: negative dimension");
  return rng.gaussian_vec(d);
}

}  // namespace lcg
