// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace jellyfish {

// splitmix64 finalizer; a bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t x);

// Derive a child seed from a parent seed and a list of coordinates. The
// result depends only on the values, never on call order, so per-pair or
// per-cell streams can be computed in any order or in parallel.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> coords);

// Seedable generator used throughout the workbench.
class Rng {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit Rng(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const { return seed_; }

  // Uniform integer in [0, n). n must be positive.
  std::size_t uniform(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  double uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }

  // Independent child stream.
  Rng split(std::uint64_t salt) const { return Rng(derive_seed(seed_, {salt})); }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace jellyfish
