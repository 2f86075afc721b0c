#pragma once
// Seed derivation and Gaussian variates.
//
// Every stochastic operation is a pure function of (inputs, seed).  Seeds for
// sample i of a Monte Carlo run are derived by counter-based mixing of the
// master seed with the sample index, so serial and parallel runs agree and any
// single sample can be reproduced in isolation.

#include <cstdint>
#include <random>

namespace lgd {

// Fixed-increment splitmix64 step (Steele et al.); good avalanche, cheap.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derive a stream seed from (master, counter).  Two mixing rounds keep
// low-entropy inputs (seed 0, 1, 2...) well separated.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  return splitmix64(splitmix64(master) ^ splitmix64(counter * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

// Gaussian stream.  mt19937_64 + std::normal_distribution is deterministic for
// a fixed standard library, which is what the byte-identical-rerun contract
// needs (runs are compared on the same host toolchain).
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}
  double operator()() { return norm_(eng_); }
  double uniform() { return uni_(eng_); }
  // Uniform integer in [0, n)
  std::uint64_t index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_);
  }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> norm_{0.0, 1.0};
  std::uniform_real_distribution<double> uni_{0.0, 1.0};
};

}  // namespace lgd
