#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace dualhead {

// Seeded random stream. All randomness in the library (initialization,
// dropout masks, shuffling) is drawn from one of these; conversions from raw
// engine output are done here rather than through <random> distributions so
// identical seeds give identical values on every standard library.
class RngState {
 public:
  explicit RngState(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t draws() const noexcept { return draws_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  // Normal(0, stddev) resampled until within +-bound standard deviations.
  double truncated_normal(double stddev, double bound = 2.0);
  // Uniform integer in [0, n) without modulo bias.
  std::size_t uniform_index(std::size_t n);

  // Child stream whose seed is drawn from this one.
  RngState fork();

 private:
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

std::vector<std::size_t> seeded_permutation(std::size_t n, RngState& rng);

}  // namespace dualhead
