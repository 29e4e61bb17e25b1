#pragma once

// Expected policy-gradient identities for tabular softmax policies: the
// all-fail failure-descent gradient, its brute-force enumeration, pass@k
// derivatives and per-formulation expected gradient coefficients.

#include <cstdint>
#include <vector>

#include "gradstarve/core.hpp"

namespace gradstarve {

struct GradientVector {
  std::vector<double> components;

  std::size_t size() const { return components.size(); }
  double operator[](std::size_t i) const { return components[i]; }
};

double max_abs_diff(const GradientVector& a, const GradientVector& b);
double dot(const GradientVector& a, const GradientVector& b);

double success_prob(const TabularPolicy& policy);

/// d/dtheta_k of pi(C) = pi_k (1{k in C} - p).
GradientVector grad_success_prob(const TabularPolicy& policy);

/// Score of completion y under the policy: e_y - pi.
GradientVector score(const TabularPolicy& policy, std::size_t completion);

/// E[grad L_0 * 1{N = 0}] = -c q^(G-1) grad p, with L_0 = (c/G) sum_i log pi(Y_i).
/// Requires 0 < p < 1 and G >= 1.
GradientVector allfail_expected_gradient(const TabularPolicy& policy, int group_size, double c);

/// Largest number of ordered tuples the enumeration routines will visit.
inline constexpr std::uint64_t kEnumerationLimit = 10'000'000;

/// Exact E[grad L_0 * 1{N = 0}] by summing over all K^G ordered groups.
GradientVector enumerate_allfail_gradient(const TabularPolicy& policy, int group_size, double c);

/// Exact E[grad L * 1{N = G}] for a fixed advantage +a on every response of an
/// all-pass group, by enumeration. Closed form: -a p^(G-1) grad p.
GradientVector enumerate_allpass_gradient(const TabularPolicy& policy, int group_size, double a);

/// Exact E[(1/G) sum_i A_i s(Y_i)] for the given formulation by enumeration of
/// ordered groups; equals expected_coefficient(f, p, G) * grad p.
GradientVector enumerate_expected_ascent(const TabularPolicy& policy, int group_size,
                                         Formulation formulation);

/// d/dp of 1 - (1-p)^k.
double passk_derivative(double p, int k);

/// Scalar multiplying grad p in E[(1/G) sum_i A_i s_i], by exact binomial
/// summation over the number of correct responses. Requires 0 < p < 1, G >= 2.
double expected_coefficient(Formulation formulation, double p, int group_size);

/// Advantage magnitude a assigned to each response of a degenerate group.
double degenerate_advantage_magnitude(Formulation formulation, int group_size);

/// a (q^(G-1) + p^(G-1)).
double degenerate_contribution(double p, int group_size, double a);

struct TheoremCheckResult {
  double max_deviation = 0.0;
  int trials = 0;
  int completions = 0;
  int group_size = 0;
  double tolerance = 1e-10;
  bool passed() const { return max_deviation <= tolerance; }
};

/// Compares the closed form against enumeration on `trials` random policies
/// with K completions, random logits in [-2, 2] and a random proper correct set.
TheoremCheckResult theorem_check(int completions, int group_size, int trials, std::uint64_t seed,
                                 double c = 1.0, double tolerance = 1e-10);

}  // namespace gradstarve
