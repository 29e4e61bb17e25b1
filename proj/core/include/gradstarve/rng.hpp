#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

namespace gradstarve {

/// Counter-based deterministic generator.
///
/// A generator is a (key, counter) pair. Draw i of a generator with key k is
///
///     mix64(k + (i + 1) * 0x9E3779B97F4A7C15)
///
/// where mix64 is the SplitMix64 finalizer (xor-shift 30/27/31 with the
/// multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB). The key of
/// `CounterRng(seed, stream)` is mix64(seed ^ mix64(stream + 0xD1B54A32D192ED03)).
/// Because a draw depends only on (key, index), any draw can be regenerated
/// without replaying the stream, and substreams keyed by episode/step
/// coordinates give reproducible common random numbers across configurations.
///
/// Streams are bitwise reproducible within this implementation. The helpers
/// below do not use <random> distributions, whose output is library-specific.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);

  /// Index drawn from unnormalized nonnegative weights by inverse CDF.
  std::size_t categorical(std::span<const double> weights);

  /// Independent generator whose key is derived from this key and `id`.
  CounterRng substream(std::uint64_t id) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix64(std::uint64_t z);

 private:
  CounterRng(std::uint64_t key, std::uint64_t counter, int /*raw tag*/) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

CounterRng seeded_rng(std::uint64_t seed);

}  // namespace gradstarve
