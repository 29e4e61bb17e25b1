#pragma once

// Probability that a group is degenerate (all rewards equal), and how
// prompt heterogeneity pushes the population rate above the i.i.d. value.

#include <span>
#include <vector>

#include "gradstarve/core.hpp"

namespace gradstarve {

/// D(p, G) = p^G + (1 - p)^G. Throws for G < 1 or p outside [0, 1].
double degeneracy_prob(double p, int group_size);

/// min over p in [0, 1] of p^(G-2) + (1-p)^(G-2), which is 2^(3-G) for G >= 2.
double variance_min_term(int group_size);

/// The same minimum by grid search over `points` evenly spaced p values.
double variance_min_term_grid(int group_size, int points = 10001);

struct DegeneracyReport {
  double d_real = 0.0;          // E_x[D(p_x, G)]
  double d_iid = 0.0;           // D(mean p, G)
  double variance_bound = 0.0;  // d_iid + G(G-1)/2 Var(p) * variance_min_term(G)
  double mean_p = 0.0;
  double var_p = 0.0;
  double endpoint_mass_zero = 0.0;
  double endpoint_mass_one = 0.0;
  int group_size = 0;
};

/// Requires a normalized distribution and G >= 2.
DegeneracyReport jensen_report(const PromptDistribution& dist, int group_size);

struct EmpiricalDegeneracy {
  double degenerate_frac = 0.0;  // allfail_frac + allpass_frac
  double allfail_frac = 0.0;
  double allpass_frac = 0.0;
  std::size_t groups = 0;
  std::size_t allfail = 0;
  std::size_t allpass = 0;

  /// Binomial standard error of degenerate_frac.
  double standard_error() const;
};

/// Fractions from counts; throws for zero groups.
EmpiricalDegeneracy degeneracy_from_counts(std::size_t groups, std::size_t allfail, std::size_t allpass);

EmpiricalDegeneracy empirical_degeneracy(std::span<const GroupOutcome> groups);

struct PromptRollouts {
  std::string prompt_id;
  std::vector<int> rewards;
};

/// Maximum-likelihood success fraction per prompt, uniform weights.
PromptDistribution estimate_profiles(std::span<const PromptRollouts> rollouts);

}  // namespace gradstarve
