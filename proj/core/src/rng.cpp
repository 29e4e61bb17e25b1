#include "gradstarve/rng.hpp"

#include "gradstarve/core.hpp"

namespace gradstarve {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamSalt = 0xD1B54A32D192ED03ULL;
}  // namespace

std::uint64_t CounterRng::mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(seed ^ mix64(stream + kStreamSalt))) {}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::below(std::uint64_t n) {
  if (n == 0) throw ValidationError("CounterRng::below requires n > 0");
  // Reject the low residue class so every value is equally likely.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = (*this)();
    if (x >= threshold) return x % n;
  }
}

std::size_t CounterRng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("categorical weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw ValidationError("categorical weights must have positive total");
  const double target = uniform() * total;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cumulative += weights[i];
    last_positive = i;
    if (target < cumulative) return i;
  }
  return last_positive;
}

CounterRng CounterRng::substream(std::uint64_t id) const {
  return CounterRng(mix64(key_ ^ mix64(id * kGolden + kStreamSalt)), 0, 0);
}

CounterRng seeded_rng(std::uint64_t seed) { return CounterRng(seed); }

}  // namespace gradstarve
