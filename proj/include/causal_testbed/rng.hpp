#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include <boost/random/mersenne_twister.hpp>

namespace ctb {

// Boost distributions are used instead of <random> ones because their
// algorithms are fixed by the library rather than by the standard-library
// vendor, so streams reproduce across toolchains.
using Engine = boost::random::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a parent seed and a label path,
/// e.g. derive_seed(master, {setting, replication, 2}).
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                 // [0, 1)
  double uniform(double lo, double hi);
  double normal();
  double student_t(double df);
  double gamma(double shape);
  /// Beta-prime(a, b): G_a / G_b with independent unit-scale gammas.
  double beta_prime(double a, double b);
  int poisson(double mean);
  int binomial(int trials, double p);
  bool bernoulli(double p);
  std::size_t index(std::size_t n);  // uniform on {0..n-1}

  /// k distinct indices from {0..n-1}, in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  Engine& engine() { return engine_; }

 private:
  Engine engine_;
};

}  // namespace ctb
