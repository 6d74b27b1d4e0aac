#pragma once

#include <cstdint>
#include <random>

namespace ncfam {

uint64_t splitmix64(uint64_t& state);

// Hashes (root, a, b, c) into a fresh seed. Used to split one declared root
// seed into independent streams (per trial, per sweep cell, per shard)
// without any shared generator state.
uint64_t derive_seed(uint64_t root, uint64_t a, uint64_t b = 0, uint64_t c = 0);

// Seeded generator with the few variate types the project needs. The normal
// and gamma samplers are implemented here rather than via <random>
// distributions so the consumed engine stream is pinned by this code alone.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // 53-bit uniform in [0, 1).
  double uniform01();
  // Standard normal via the polar method; no cached spare.
  double normal();
  // Gamma(shape, scale 1) via Marsaglia-Tsang, with the U^(1/shape) boost
  // for shape < 1.
  double gamma(double shape);

 private:
  std::mt19937_64 engine_;
};

}  // namespace ncfam
