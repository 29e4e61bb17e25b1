#include "gradstarve/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gradstarve/rng.hpp"

namespace gradstarve {

void SampleMatrix::validate() const {
  if (questions.empty()) throw ValidationError("sample matrix has no questions");
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const auto& q = questions[i];
    if (q.n < 1 || q.c < 0 || q.c > q.n) {
      throw ValidationError("question " + std::to_string(i) + ": need n >= 1 and 0 <= c <= n");
    }
  }
}

int SampleMatrix::min_samples() const {
  int best = std::numeric_limits<int>::max();
  for (const auto& q : questions) best = std::min(best, q.n);
  return best;
}

double pass_at_k(int n, int c, int k) {
  if (n < 1) throw ValidationError("pass@k needs n >= 1");
  if (c < 0 || c > n) throw ValidationError("pass@k needs 0 <= c <= n");
  if (k < 1 || k > n) {
    throw ValidationError("pass@k needs 1 <= k <= n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  }
  if (n - c < k) return 1.0;
  double miss = 1.0;
  for (int i = n - c + 1; i <= n; ++i) miss *= 1.0 - static_cast<double>(k) / i;
  return 1.0 - miss;
}

std::vector<double> pass_at_k_curve(const SampleMatrix& matrix, std::span<const int> ks) {
  matrix.validate();
  const int limit = matrix.min_samples();
  std::vector<double> curve;
  curve.reserve(ks.size());
  for (int k : ks) {
    if (k < 1 || k > limit) {
      throw ValidationError("k=" + std::to_string(k) + " exceeds the smallest per-question sample count " +
                            std::to_string(limit));
    }
    double total = 0.0;
    for (const auto& q : matrix.questions) total += pass_at_k(q.n, q.c, k);
    curve.push_back(total / static_cast<double>(matrix.questions.size()));
  }
  return curve;
}

WelchResult welch_t_test(double mean1, double sd1, int n1, double mean2, double sd2, int n2, SdKind sd_kind) {
  if (n1 < 2 || n2 < 2) throw ValidationError("Welch's test needs at least two observations per group");
  if (!(sd1 >= 0.0) || !(sd2 >= 0.0) || !std::isfinite(sd1) || !std::isfinite(sd2)) {
    throw ValidationError("standard deviations must be finite and >= 0");
  }
  if (!std::isfinite(mean1) || !std::isfinite(mean2)) throw ValidationError("means must be finite");
  if (sd_kind == SdKind::Population) {
    sd1 *= std::sqrt(static_cast<double>(n1) / (n1 - 1));
    sd2 *= std::sqrt(static_cast<double>(n2) / (n2 - 1));
  }
  const double v1 = sd1 * sd1 / n1;
  const double v2 = sd2 * sd2 / n2;
  const double se2 = v1 + v2;
  WelchResult out;
  const double diff = mean1 - mean2;
  if (se2 == 0.0) {
    out.df = n1 + n2 - 2;
    if (diff == 0.0) return {0.0, out.df, 1.0};
    return {diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(),
            out.df, 0.0};
  }
  out.t = diff / std::sqrt(se2);
  out.df = se2 * se2 / (v1 * v1 / (n1 - 1) + v2 * v2 / (n2 - 1));
  // Two-sided tail directly from the incomplete beta avoids 1 - cdf cancellation.
  out.p_two_sided = regularized_incomplete_beta(0.5 * out.df, 0.5, out.df / (out.df + out.t * out.t));
  return out;
}

namespace {

bool at_least_as_extreme(double stat, double observed, Alternative alternative, double tol) {
  switch (alternative) {
    case Alternative::TwoSided: return std::abs(stat) >= std::abs(observed) - tol;
    case Alternative::Greater: return stat >= observed - tol;
    case Alternative::Less: return stat <= observed + tol;
  }
  return false;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct PooledSample {
  std::vector<double> values;
  double total = 0.0;
  double tolerance = 0.0;
};

PooledSample pool(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("permutation test needs two nonempty groups");
  PooledSample pooled;
  pooled.values.assign(a.begin(), a.end());
  pooled.values.insert(pooled.values.end(), b.begin(), b.end());
  double scale = 0.0;
  for (double v : pooled.values) {
    if (!std::isfinite(v)) throw ValidationError("permutation test values must be finite");
    pooled.total += v;
    scale = std::max(scale, std::abs(v));
  }
  // Ties in the statistic are decided up to rounding of the group sums.
  pooled.tolerance = 1e-9 * std::max(scale, 1e-300);
  return pooled;
}

}  // namespace

PermutationResult exact_permutation_test(std::span<const double> a, std::span<const double> b,
                                         Alternative alternative) {
  const std::size_t n_a = a.size();
  const std::size_t n_b = b.size();
  if (n_a + n_b > kExactPermutationLimit) {
    throw ValidationError("exact permutation test is limited to " + std::to_string(kExactPermutationLimit) +
                          " combined observations; use the Monte Carlo mode instead");
  }
  const auto pooled = pool(a, b);
  const std::size_t n = pooled.values.size();

  PermutationResult out;
  out.observed_difference = mean_of(a) - mean_of(b);

  // Iterate all n_a-subsets of [0, n) in lexicographic order.
  std::vector<std::size_t> pick(n_a);
  std::iota(pick.begin(), pick.end(), 0);
  for (;;) {
    double sum_a = 0.0;
    for (std::size_t i : pick) sum_a += pooled.values[i];
    const double stat = sum_a / static_cast<double>(n_a) - (pooled.total - sum_a) / static_cast<double>(n_b);
    ++out.total;
    if (at_least_as_extreme(stat, out.observed_difference, alternative, pooled.tolerance)) ++out.extreme;

    std::size_t pos = n_a;
    while (pos > 0 && pick[pos - 1] == n - n_a + pos - 1) --pos;
    if (pos == 0) break;
    ++pick[pos - 1];
    for (std::size_t j = pos; j < n_a; ++j) pick[j] = pick[j - 1] + 1;
  }
  out.p = static_cast<double>(out.extreme) / static_cast<double>(out.total);
  return out;
}

PermutationResult exact_permutation_test(std::span<const RunRecord> a, std::span<const RunRecord> b,
                                         Alternative alternative) {
  std::vector<double> va;
  std::vector<double> vb;
  for (const auto& r : a) va.push_back(r.accuracy);
  for (const auto& r : b) vb.push_back(r.accuracy);
  return exact_permutation_test(va, vb, alternative);
}

PermutationResult monte_carlo_permutation_test(std::span<const double> a, std::span<const double> b,
                                               std::uint64_t resamples, std::uint64_t seed,
                                               Alternative alternative) {
  if (resamples == 0) throw ValidationError("Monte Carlo permutation test needs resamples > 0");
  auto pooled = pool(a, b);
  const std::size_t n_a = a.size();
  const std::size_t n_b = b.size();
  PermutationResult out;
  out.exact = false;
  out.observed_difference = mean_of(a) - mean_of(b);
  CounterRng rng(seed);
  auto& values = pooled.values;
  for (std::uint64_t r = 0; r < resamples; ++r) {
    // Partial Fisher-Yates: the first n_a slots form a uniform random subset.
    for (std::size_t i = 0; i < n_a; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(values.size() - i));
      std::swap(values[i], values[j]);
    }
    double sum_a = 0.0;
    for (std::size_t i = 0; i < n_a; ++i) sum_a += values[i];
    const double stat = sum_a / static_cast<double>(n_a) - (pooled.total - sum_a) / static_cast<double>(n_b);
    if (at_least_as_extreme(stat, out.observed_difference, alternative, pooled.tolerance)) ++out.extreme;
  }
  out.total = resamples;
  out.p = static_cast<double>(out.extreme + 1) / static_cast<double>(resamples + 1);
  return out;
}

SummaryStats summary_stats(std::span<const double> values, SdKind kind) {
  if (values.empty()) throw ValidationError("summary statistics need at least one value");
  if (kind == SdKind::Sample && values.size() < 2) {
    throw ValidationError("sample standard deviation needs at least two values");
  }
  SummaryStats out;
  out.count = values.size();
  out.mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double denom = static_cast<double>(kind == SdKind::Sample ? values.size() - 1 : values.size());
  out.std = std::sqrt(ss / denom);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  out.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  out.min = sorted.front();
  out.max = sorted.back();
  return out;
}

std::vector<double> accuracies_for(std::span<const RunRecord> records, const std::string& label) {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.label == label) out.push_back(r.accuracy);
  }
  return out;
}

}  // namespace gradstarve
