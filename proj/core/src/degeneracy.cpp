#include "gradstarve/degeneracy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

namespace gradstarve {

namespace {

constexpr int kMaxCheckedGroupSize = 64;

// Verifies the closed-form minimum against grid search once per process.
void self_check_variance_min_term() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    for (int g = 2; g <= kMaxCheckedGroupSize; ++g) {
      const double closed = variance_min_term(g);
      const double grid = variance_min_term_grid(g, 2001);
      if (std::abs(closed - grid) > 1e-12 * std::max(1.0, grid)) {
        throw NumericError("variance minimum closed form disagrees with grid search at G=" +
                           std::to_string(g));
      }
    }
  });
}

}  // namespace

double degeneracy_prob(double p, int group_size) {
  if (group_size < 1) throw ValidationError("group size must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("success probability must lie in [0, 1]");
  return std::pow(p, group_size) + std::pow(1.0 - p, group_size);
}

double variance_min_term(int group_size) {
  if (group_size < 2) throw ValidationError("variance bound needs G >= 2");
  return std::ldexp(1.0, 3 - group_size);
}

double variance_min_term_grid(int group_size, int points) {
  if (group_size < 2) throw ValidationError("variance bound needs G >= 2");
  if (points < 3) throw ValidationError("grid needs at least 3 points");
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double p = static_cast<double>(i) / (points - 1);
    const double v = std::pow(p, group_size - 2) + std::pow(1.0 - p, group_size - 2);
    best = std::min(best, v);
  }
  return best;
}

DegeneracyReport jensen_report(const PromptDistribution& dist, int group_size) {
  if (group_size < 2) throw ValidationError("jensen report needs G >= 2");
  if (!dist.normalized()) throw ValidationError("prompt distribution must be normalized");
  self_check_variance_min_term();

  DegeneracyReport report;
  report.group_size = group_size;
  for (const auto& profile : dist.profiles()) {
    report.mean_p += profile.weight * profile.p;
    report.d_real += profile.weight * degeneracy_prob(profile.p, group_size);
    if (profile.p == 0.0) report.endpoint_mass_zero += profile.weight;
    if (profile.p == 1.0) report.endpoint_mass_one += profile.weight;
  }
  for (const auto& profile : dist.profiles()) {
    const double dev = profile.p - report.mean_p;
    report.var_p += profile.weight * dev * dev;
  }
  report.d_iid = degeneracy_prob(std::clamp(report.mean_p, 0.0, 1.0), group_size);
  const double g = group_size;
  report.variance_bound = report.d_iid + 0.5 * g * (g - 1.0) * report.var_p * variance_min_term(group_size);
  return report;
}

double EmpiricalDegeneracy::standard_error() const {
  if (groups == 0) return 0.0;
  return std::sqrt(degenerate_frac * (1.0 - degenerate_frac) / static_cast<double>(groups));
}

EmpiricalDegeneracy degeneracy_from_counts(std::size_t groups, std::size_t allfail, std::size_t allpass) {
  if (groups == 0) throw ValidationError("degeneracy needs at least one group");
  if (allfail + allpass > groups) throw ValidationError("degenerate counts exceed group count");
  EmpiricalDegeneracy out;
  out.groups = groups;
  out.allfail = allfail;
  out.allpass = allpass;
  const double n = static_cast<double>(groups);
  out.allfail_frac = static_cast<double>(allfail) / n;
  out.allpass_frac = static_cast<double>(allpass) / n;
  out.degenerate_frac = out.allfail_frac + out.allpass_frac;
  return out;
}

EmpiricalDegeneracy empirical_degeneracy(std::span<const GroupOutcome> groups) {
  std::size_t allfail = 0;
  std::size_t allpass = 0;
  for (const auto& g : groups) {
    if (g.all_fail()) ++allfail;
    else if (g.all_pass()) ++allpass;
  }
  return degeneracy_from_counts(groups.size(), allfail, allpass);
}

PromptDistribution estimate_profiles(std::span<const PromptRollouts> rollouts) {
  if (rollouts.empty()) throw ValidationError("no prompts to estimate");
  std::vector<PromptProfile> profiles;
  profiles.reserve(rollouts.size());
  const double weight = 1.0 / static_cast<double>(rollouts.size());
  for (const auto& prompt : rollouts) {
    if (prompt.rewards.empty()) {
      throw ValidationError("prompt '" + prompt.prompt_id + "' has no rollouts");
    }
    const GroupOutcome outcome(prompt.rewards);
    profiles.push_back({prompt.prompt_id,
                        static_cast<double>(outcome.n_plus()) / outcome.group_size(), weight});
  }
  return PromptDistribution(std::move(profiles)).normalized_copy();
}

}  // namespace gradstarve
