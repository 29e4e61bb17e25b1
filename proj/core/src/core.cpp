#include "gradstarve/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gradstarve {

namespace {

struct FormulationName {
  Formulation formulation;
  std::string_view name;
};

constexpr FormulationName kNames[] = {
    {Formulation::MeanCentered, "mean"},
    {Formulation::DrGRPO, "drgrpo"},
    {Formulation::Sign, "sign"},
    {Formulation::TASA, "tasa"},
};

}  // namespace

std::string_view to_string(Formulation f) {
  for (const auto& entry : kNames) {
    if (entry.formulation == f) return entry.name;
  }
  return "unknown";
}

std::string formulation_names() {
  std::string out;
  for (const auto& entry : kNames) {
    if (!out.empty()) out += ", ";
    out += entry.name;
  }
  return out;
}

Formulation parse_formulation(std::string_view name) {
  for (const auto& entry : kNames) {
    if (entry.name == name) return entry.formulation;
  }
  throw ValidationError("unknown formulation '" + std::string(name) +
                        "'; expected one of: " + formulation_names());
}

GroupOutcome::GroupOutcome(std::vector<int> rewards) : rewards_(std::move(rewards)) {
  if (rewards_.empty()) throw ValidationError("group must contain at least one reward");
  for (std::size_t i = 0; i < rewards_.size(); ++i) {
    const int r = rewards_[i];
    if (r != 0 && r != 1) {
      throw ValidationError("reward at position " + std::to_string(i) + " is " +
                            std::to_string(r) + "; rewards must be 0 or 1");
    }
    n_plus_ += r;
  }
}

GroupOutcome GroupOutcome::from_counts(int group_size, int n_plus) {
  if (group_size < 1) throw ValidationError("group_size must be >= 1");
  if (n_plus < 0 || n_plus > group_size) throw ValidationError("n_plus must lie in [0, group_size]");
  std::vector<int> rewards(static_cast<std::size_t>(group_size), 0);
  std::fill_n(rewards.begin(), n_plus, 1);
  return GroupOutcome(std::move(rewards));
}

void PromptProfile::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("prompt '" + prompt_id + "': success probability must lie in [0, 1]");
  }
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw ValidationError("prompt '" + prompt_id + "': weight must be finite and nonnegative");
  }
}

PromptDistribution::PromptDistribution(std::vector<PromptProfile> profiles)
    : profiles_(std::move(profiles)) {
  for (const auto& profile : profiles_) profile.validate();
  normalized_ = !profiles_.empty() && std::abs(total_weight() - 1.0) <= kNormalizationTolerance;
}

double PromptDistribution::total_weight() const {
  double total = 0.0;
  for (const auto& profile : profiles_) total += profile.weight;
  return total;
}

PromptDistribution PromptDistribution::normalized_copy() const {
  const double total = total_weight();
  if (!(total > 0.0)) throw ValidationError("cannot normalize a distribution with zero total weight");
  std::vector<PromptProfile> scaled = profiles_;
  for (auto& profile : scaled) profile.weight /= total;
  PromptDistribution out(std::move(scaled));
  out.normalized_ = true;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> probs(logits.size());
  if (logits.empty()) return probs;
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - max_logit);
    total += probs[i];
  }
  for (auto& p : probs) p /= total;
  return probs;
}

TabularPolicy::TabularPolicy(std::vector<double> logits, std::vector<std::size_t> correct_set)
    : logits_(std::move(logits)), correct_set_(std::move(correct_set)) {
  if (logits_.size() < 2) throw ValidationError("tabular policy needs at least two completions");
  for (double v : logits_) {
    if (!std::isfinite(v)) throw ValidationError("tabular policy logits must be finite");
  }
  std::sort(correct_set_.begin(), correct_set_.end());
  correct_set_.erase(std::unique(correct_set_.begin(), correct_set_.end()), correct_set_.end());
  if (correct_set_.empty()) throw ValidationError("correct set must be nonempty");
  if (correct_set_.size() >= logits_.size()) {
    throw ValidationError("correct set must be a proper subset of the completions");
  }
  correct_mask_.assign(logits_.size(), 0);
  for (std::size_t idx : correct_set_) {
    if (idx >= logits_.size()) throw ValidationError("correct-set index out of range");
    correct_mask_[idx] = 1;
  }
}

double TabularPolicy::success_prob() const {
  const auto probs = probabilities();
  double p = 0.0;
  for (std::size_t idx : correct_set_) p += probs[idx];
  return p;
}

void PairRecord::validate() const {
  for (double lp : {logp_pos, logp_neg, ref_logp_pos, ref_logp_neg}) {
    if (!(lp <= 0.0)) throw ValidationError("pair log-probabilities must be <= 0");
  }
  if (!(reward_gap >= 0.0)) throw ValidationError("reward gap must be >= 0");
  if (!(age_pos >= 0.0) || !(age_neg >= 0.0)) throw ValidationError("pair ages must be >= 0");
  if (!(prompt_post_mean >= 0.0 && prompt_post_mean <= 1.0)) {
    throw ValidationError("prompt posterior mean must lie in [0, 1]");
  }
  if (!(prompt_obs_count >= 0.0)) throw ValidationError("prompt observation count must be >= 0");
}

void ReplayConfig::validate() const {
  if (!(tau > 0.0)) throw ValidationError("replay tau must be > 0");
  if (!(clip_lo <= clip_hi)) throw ValidationError("replay clip_lo must not exceed clip_hi");
  if (!(lambda_pair >= 0.0)) throw ValidationError("lambda_pair must be >= 0");
  if (!std::isfinite(ref_coeff)) throw ValidationError("ref_coeff must be finite");
}

void RunRecord::validate() const {
  if (!(accuracy >= 0.0 && accuracy <= 100.0)) {
    throw ValidationError("run '" + label + "' seed " + std::to_string(seed) +
                          ": accuracy must lie in [0, 100]");
  }
}

}  // namespace gradstarve
