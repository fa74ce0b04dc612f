#include "dualhead/rng.hpp"

#include <cmath>
#include <numbers>

namespace dualhead {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngState::RngState(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

std::uint64_t RngState::next_u64() {
  ++draws_;
  return engine_();
}

double RngState::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngState::normal() {
  // Box-Muller; 1 - uniform() lies in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngState::truncated_normal(double stddev, double bound) {
  for (;;) {
    const double z = normal();
    if (std::abs(z) <= bound) return z * stddev;
  }
}

std::size_t RngState::uniform_index(std::size_t n) {
  const auto range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range);
  for (;;) {
    const auto draw = next_u64();
    if (draw < limit) return static_cast<std::size_t>(draw % range);
  }
}

RngState RngState::fork() { return RngState(splitmix64(next_u64())); }

std::vector<std::size_t> seeded_permutation(std::size_t n, RngState& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  return order;
}

}  // namespace dualhead
