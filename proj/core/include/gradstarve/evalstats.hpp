#pragma once

// Pass@k estimation and the hypothesis tests used on per-seed accuracy tables.

#include <cstdint>
#include <span>
#include <vector>

#include "gradstarve/core.hpp"

namespace gradstarve {

// Special functions ----------------------------------------------------------

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Student's t with `df` (> 0, possibly fractional) degrees of freedom.
double student_t_cdf(double t, double df);

// Pass@k ---------------------------------------------------------------------

struct QuestionSamples {
  int n = 0;  // samples drawn
  int c = 0;  // correct samples
};

struct SampleMatrix {
  std::vector<QuestionSamples> questions;

  void validate() const;
  int min_samples() const;
};

/// Unbiased 1 - C(n-c, k)/C(n, k), computed as 1 - prod_{i=n-c+1}^{n} (1 - k/i).
double pass_at_k(int n, int c, int k);

/// Mean per-question estimate for each k.
std::vector<double> pass_at_k_curve(const SampleMatrix& matrix, std::span<const int> ks);

// Welch's t-test -------------------------------------------------------------

enum class SdKind { Population, Sample };

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_two_sided = 1.0;
};

/// Population std inputs are converted to sample std via sqrt(n/(n-1)).
WelchResult welch_t_test(double mean1, double sd1, int n1, double mean2, double sd2, int n2,
                         SdKind sd_kind = SdKind::Population);

// Permutation tests ----------------------------------------------------------

enum class Alternative { TwoSided, Greater, Less };

struct PermutationResult {
  double p = 1.0;
  std::uint64_t extreme = 0;  // assignments at least as extreme as observed
  std::uint64_t total = 0;    // assignments enumerated (or resamples drawn)
  double observed_difference = 0.0;  // mean(a) - mean(b)
  bool exact = true;
};

inline constexpr std::size_t kExactPermutationLimit = 25;

/// Enumerates every C(n_a + n_b, n_a) relabeling. The statistic is
/// mean(a) - mean(b): |.| for TwoSided, the signed value for Greater/Less.
/// Combined size above kExactPermutationLimit throws ValidationError.
PermutationResult exact_permutation_test(std::span<const double> a, std::span<const double> b,
                                         Alternative alternative = Alternative::TwoSided);

PermutationResult exact_permutation_test(std::span<const RunRecord> a, std::span<const RunRecord> b,
                                         Alternative alternative = Alternative::TwoSided);

/// Random relabelings; p = (extreme + 1) / (resamples + 1).
PermutationResult monte_carlo_permutation_test(std::span<const double> a, std::span<const double> b,
                                               std::uint64_t resamples, std::uint64_t seed,
                                               Alternative alternative = Alternative::TwoSided);

// Summary statistics ---------------------------------------------------------

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

SummaryStats summary_stats(std::span<const double> values, SdKind kind = SdKind::Population);

/// Accuracies of the records whose label equals `label`, in input order.
std::vector<double> accuracies_for(std::span<const RunRecord> records, const std::string& label);

}  // namespace gradstarve
