#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace tierbench {

// Seeded generator whose output is identical on every platform: the raw
// engine is std::mt19937_64 (its sequence is fixed by the standard) and every
// derived draw below is implemented here rather than through <random>
// distributions, whose algorithms are implementation-defined.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  // Independent stream for (seed, stream index); lets resampling loops run
  // draws in any order or in parallel and still match the serial result.
  static Rng substream(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return engine_(); }

  // Uniform integer in [0, n); n must be positive.
  std::size_t uniform_index(std::size_t n);
  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();
  bool bernoulli(double p) { return uniform01() < p; }
  double normal();
  // Index drawn with the given (unnormalized, nonnegative) weights.
  std::size_t categorical(std::span<const double> weights);

  // Moves a uniform sample of k elements (without replacement) into the
  // first k positions, in draw order.
  template <class T>
  void partial_shuffle(std::span<T> items, std::size_t k) {
    for (std::size_t i = 0; i < k && i < items.size(); ++i) {
      const std::size_t j = i + uniform_index(items.size() - i);
      using std::swap;
      swap(items[i], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace tierbench
