#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "lcg/vec.hpp"

namespace lcg {

// Counter-based deterministic generator. State is (seed, counter); output k is
// mix(seed + k*gamma), so a given seed always yields the same stream bit for bit,
// independent of platform. Gaussian draws use the Box-Muller cosine branch and
// consume exactly two counter steps each, which keeps stream accounting trivial.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), counter_(0) {}

  uint64_t next_u64();
  double next_uniform();   // (0, 1]
  double next_gaussian();  // standard normal

  void fill_gaussian(std::span<double> out);
  Vec gaussian_vec(int d);

  // [0, n)
  uint64_t next_index(uint64_t n);

  // Independent child stream; derivation depends only on (seed, name/index).
  Rng substream(std::string_view name) const;
  Rng substream(uint64_t index) const;
  static uint64_t derive_seed(uint64_t root, std::string_view name);

  uint64_t seed() const { return seed_; }
  uint64_t counter() const { return counter_; }

 private:
  uint64_t seed_;
  uint64_t counter_;
};

// d independent standard normal coordinates.
Vec gaussian_sample(Rng& rng, int d);

}  // namespace lcg
