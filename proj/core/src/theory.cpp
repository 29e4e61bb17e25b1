#include "gradstarve/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gradstarve/advantage.hpp"
#include "gradstarve/rng.hpp"

namespace gradstarve {

namespace {

void require_interior(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError("success probability must lie strictly inside (0, 1); got " + std::to_string(p));
  }
}

std::uint64_t checked_tuple_count(std::size_t completions, int group_size) {
  if (group_size < 1) throw ValidationError("group size must be >= 1");
  std::uint64_t count = 1;
  for (int i = 0; i < group_size; ++i) {
    count *= completions;
    if (count > kEnumerationLimit) {
      throw ValidationError("enumeration of K^G = " + std::to_string(completions) + "^" +
                            std::to_string(group_size) + " ordered groups exceeds the limit of " +
                            std::to_string(kEnumerationLimit));
    }
  }
  return count;
}

// Visits every ordered tuple in [0, K)^G with its probability under pi.
template <typename Visitor>
void for_each_tuple(std::span<const double> probs, int group_size, Visitor&& visit) {
  const std::uint64_t total = checked_tuple_count(probs.size(), group_size);
  std::vector<std::size_t> tuple(static_cast<std::size_t>(group_size), 0);
  for (std::uint64_t t = 0; t < total; ++t) {
    double prob = 1.0;
    for (std::size_t y : tuple) prob *= probs[y];
    visit(std::span<const std::size_t>(tuple), prob);
    for (std::size_t d = 0; d < tuple.size(); ++d) {
      if (++tuple[d] < probs.size()) break;
      tuple[d] = 0;
    }
  }
}

double binomial(int n, int k) {
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

}  // namespace

double max_abs_diff(const GradientVector& a, const GradientVector& b) {
  if (a.size() != b.size()) throw ValidationError("gradient vectors differ in length");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

double dot(const GradientVector& a, const GradientVector& b) {
  if (a.size() != b.size()) throw ValidationError("gradient vectors differ in length");
  return std::inner_product(a.components.begin(), a.components.end(), b.components.begin(), 0.0);
}

double success_prob(const TabularPolicy& policy) { return policy.success_prob(); }

GradientVector grad_success_prob(const TabularPolicy& policy) {
  const auto probs = policy.probabilities();
  double p = 0.0;
  for (std::size_t idx : policy.correct_set()) p += probs[idx];
  GradientVector grad{std::vector<double>(probs.size())};
  for (std::size_t k = 0; k < probs.size(); ++k) {
    grad.components[k] = probs[k] * ((policy.is_correct(k) ? 1.0 : 0.0) - p);
  }
  return grad;
}

GradientVector score(const TabularPolicy& policy, std::size_t completion) {
  if (completion >= policy.size()) throw ValidationError("completion index out of range");
  auto probs = policy.probabilities();
  for (auto& v : probs) v = -v;
  probs[completion] += 1.0;
  return {std::move(probs)};
}

GradientVector allfail_expected_gradient(const TabularPolicy& policy, int group_size, double c) {
  if (group_size < 1) throw ValidationError("group size must be >= 1");
  const double p = policy.success_prob();
  require_interior(p);
  const double scale = -c * std::pow(1.0 - p, group_size - 1);
  GradientVector grad = grad_success_prob(policy);
  for (auto& v : grad.components) v *= scale;
  return grad;
}

GradientVector enumerate_allfail_gradient(const TabularPolicy& policy, int group_size, double c) {
  const auto probs = policy.probabilities();
  const std::size_t k = probs.size();
  GradientVector total{std::vector<double>(k, 0.0)};
  const double coeff = c / group_size;
  for_each_tuple(probs, group_size, [&](std::span<const std::size_t> tuple, double prob) {
    for (std::size_t y : tuple) {
      if (policy.is_correct(y)) return;  // N > 0
    }
    // grad L_0 = (c/G) sum_i (e_{y_i} - pi)
    for (std::size_t y : tuple) {
      for (std::size_t j = 0; j < k; ++j) total.components[j] -= prob * coeff * probs[j];
      total.components[y] += prob * coeff;
    }
  });
  return total;
}

GradientVector enumerate_allpass_gradient(const TabularPolicy& policy, int group_size, double a) {
  const auto probs = policy.probabilities();
  const std::size_t k = probs.size();
  GradientVector total{std::vector<double>(k, 0.0)};
  const double coeff = -a / group_size;  // L = -(a/G) sum_i log pi(Y_i)
  for_each_tuple(probs, group_size, [&](std::span<const std::size_t> tuple, double prob) {
    for (std::size_t y : tuple) {
      if (!policy.is_correct(y)) return;  // N < G
    }
    for (std::size_t y : tuple) {
      for (std::size_t j = 0; j < k; ++j) total.components[j] -= prob * coeff * probs[j];
      total.components[y] += prob * coeff;
    }
  });
  return total;
}

GradientVector enumerate_expected_ascent(const TabularPolicy& policy, int group_size,
                                         Formulation formulation) {
  const auto probs = policy.probabilities();
  const std::size_t k = probs.size();
  GradientVector total{std::vector<double>(k, 0.0)};
  std::vector<int> rewards(static_cast<std::size_t>(group_size));
  for_each_tuple(probs, group_size, [&](std::span<const std::size_t> tuple, double prob) {
    for (std::size_t i = 0; i < tuple.size(); ++i) rewards[i] = policy.is_correct(tuple[i]) ? 1 : 0;
    const auto adv = compute_advantage(formulation, GroupOutcome(rewards));
    for (std::size_t i = 0; i < tuple.size(); ++i) {
      const double w = prob * adv.values[i] / group_size;
      for (std::size_t j = 0; j < k; ++j) total.components[j] -= w * probs[j];
      total.components[tuple[i]] += w;
    }
  });
  return total;
}

double passk_derivative(double p, int k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must lie in [0, 1]");
  return k * std::pow(1.0 - p, k - 1);
}

double expected_coefficient(Formulation formulation, double p, int group_size) {
  require_interior(p);
  if (group_size < 2) throw ValidationError("expected coefficient needs G >= 2");
  const double q = 1.0 - p;
  const double g = group_size;
  double total = 0.0;
  for (int n = 0; n <= group_size; ++n) {
    const double weight = binomial(group_size, n) * std::pow(p, n) * std::pow(q, group_size - n);
    const auto adv = compute_advantage(formulation, GroupOutcome::from_counts(group_size, n));
    // from_counts places the correct responses first.
    const double a_pos = n > 0 ? adv.values.front() : 0.0;
    const double a_neg = n < group_size ? adv.values.back() : 0.0;
    total += weight * (n * a_pos / p - (g - n) * a_neg / q) / g;
  }
  return total;
}

double degenerate_advantage_magnitude(Formulation formulation, int group_size) {
  if (group_size < 1) throw ValidationError("group size must be >= 1");
  switch (formulation) {
    case Formulation::Sign: return 1.0;
    case Formulation::TASA: return 1.0 / group_size;
    case Formulation::MeanCentered:
    case Formulation::DrGRPO: return 0.0;
  }
  throw ValidationError("unknown formulation");
}

double degenerate_contribution(double p, int group_size, double a) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must lie in [0, 1]");
  if (group_size < 1) throw ValidationError("group size must be >= 1");
  if (!(a >= 0.0)) throw ValidationError("advantage magnitude must be >= 0");
  return a * (std::pow(1.0 - p, group_size - 1) + std::pow(p, group_size - 1));
}

TheoremCheckResult theorem_check(int completions, int group_size, int trials, std::uint64_t seed,
                                 double c, double tolerance) {
  if (completions < 2) throw ValidationError("theorem check needs K >= 2");
  if (trials < 1) throw ValidationError("theorem check needs at least one trial");
  if (!(c > 0.0)) throw ValidationError("advantage scale c must be > 0");
  checked_tuple_count(static_cast<std::size_t>(completions), group_size);

  TheoremCheckResult result;
  result.trials = trials;
  result.completions = completions;
  result.group_size = group_size;
  result.tolerance = tolerance;
  const CounterRng base(seed);
  for (int t = 0; t < trials; ++t) {
    CounterRng rng = base.substream(static_cast<std::uint64_t>(t));
    std::vector<double> logits(static_cast<std::size_t>(completions));
    for (auto& v : logits) v = 4.0 * rng.uniform() - 2.0;
    std::vector<std::size_t> order(logits.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    const auto correct_count = static_cast<std::size_t>(1 + rng.below(static_cast<std::uint64_t>(completions - 1)));
    order.resize(correct_count);
    const TabularPolicy policy(std::move(logits), std::move(order));
    const double dev = max_abs_diff(allfail_expected_gradient(policy, group_size, c),
                                    enumerate_allfail_gradient(policy, group_size, c));
    result.max_deviation = std::max(result.max_deviation, dev);
  }
  return result;
}

}  // namespace gradstarve
