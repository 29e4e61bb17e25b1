#include "gradstarve/advantage.hpp"

#include <algorithm>
#include <cmath>

namespace gradstarve {

AdvantageVector mean_centered(const GroupOutcome& group) {
  const double mean = static_cast<double>(group.n_plus()) / group.group_size();
  AdvantageVector out{{}, Formulation::MeanCentered};
  out.values.reserve(group.rewards().size());
  for (int r : group.rewards()) out.values.push_back(r - mean);
  return out;
}

double binary_group_std(int n_plus, int group_size) {
  if (group_size < 2) throw ValidationError("group std needs G >= 2");
  if (n_plus < 0 || n_plus > group_size) throw ValidationError("n_plus must lie in [0, G]");
  const double n = n_plus;
  const double g = group_size;
  const double mean = n / g;
  const double ss = n * (1.0 - mean) * (1.0 - mean) + (g - n) * mean * mean;
  return std::sqrt(ss / (g - 1.0));
}

AdvantageVector drgrpo_std_normalized(const GroupOutcome& group) {
  AdvantageVector out{std::vector<double>(group.rewards().size(), 0.0), Formulation::DrGRPO};
  // Zero centered numerator on degenerate groups: 0/0 resolves to 0.
  if (group.degenerate()) return out;
  const double sigma = binary_group_std(group.n_plus(), group.group_size());
  const double mean = static_cast<double>(group.n_plus()) / group.group_size();
  const auto rewards = group.rewards();
  for (std::size_t j = 0; j < rewards.size(); ++j) out.values[j] = (rewards[j] - mean) / sigma;
  return out;
}

AdvantageVector sign_advantage(const GroupOutcome& group) {
  AdvantageVector out{{}, Formulation::Sign};
  out.values.reserve(group.rewards().size());
  for (int r : group.rewards()) out.values.push_back(r == 1 ? 1.0 : -1.0);
  return out;
}

AdvantageVector tasa_advantage(const GroupOutcome& group) {
  const int g = group.group_size();
  const int n = group.n_plus();
  AdvantageVector out{{}, Formulation::TASA};
  out.values.reserve(static_cast<std::size_t>(g));
  if (n == 0) {
    out.values.assign(static_cast<std::size_t>(g), -1.0 / g);
    return out;
  }
  if (n == g) {
    out.values.assign(static_cast<std::size_t>(g), 1.0 / g);
    return out;
  }
  const double pos = 1.0 / n;
  const double neg = -1.0 / (g - n);
  for (int r : group.rewards()) out.values.push_back(r == 1 ? pos : neg);
  return out;
}

std::vector<double> tasa_advantage(std::span<const double> rewards, double threshold) {
  double pos_mass = 0.0;
  double neg_mass = 0.0;
  for (double r : rewards) {
    if (!std::isfinite(r)) throw ValidationError("TASA rewards must be finite");
    pos_mass += std::max(r - threshold, 0.0);
    neg_mass += std::max(threshold - r, 0.0);
  }
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) {
    double a = 0.0;
    if (pos_mass > 0.0) a += std::max(r - threshold, 0.0) / pos_mass;
    if (neg_mass > 0.0) a -= std::max(threshold - r, 0.0) / neg_mass;
    out.push_back(a);
  }
  return out;
}

AdvantageVector compute_advantage(Formulation formulation, const GroupOutcome& group) {
  switch (formulation) {
    case Formulation::MeanCentered: return mean_centered(group);
    case Formulation::DrGRPO: return drgrpo_std_normalized(group);
    case Formulation::Sign: return sign_advantage(group);
    case Formulation::TASA: return tasa_advantage(group);
  }
  throw ValidationError("unknown formulation");
}

double frontier_factor(double post_mean, double obs_count) {
  return 4.0 * post_mean * (1.0 - post_mean) * std::min(1.0, obs_count / 5.0);
}

double age_decay(double age_pos, double age_neg, double tau) {
  return std::exp(-(age_pos + age_neg) / (2.0 * tau));
}

double pair_weight(const PairRecord& pair, const ReplayConfig& config) {
  pair.validate();
  config.validate();
  const double raw = pair.reward_gap * frontier_factor(pair.prompt_post_mean, pair.prompt_obs_count) *
                     age_decay(pair.age_pos, pair.age_neg, config.tau);
  return std::clamp(raw, config.clip_lo, config.clip_hi);
}

double pair_margin(const PairRecord& pair, const ReplayConfig& config) {
  return (pair.logp_pos - pair.logp_neg) - config.ref_coeff * (pair.ref_logp_pos - pair.ref_logp_neg);
}

double neg_log_sigmoid(double margin) {
  // softplus(-m), branching so exp never overflows.
  if (margin >= 0.0) return std::log1p(std::exp(-margin));
  return -margin + std::log1p(std::exp(margin));
}

double pair_margin_loss(const PairRecord& pair, const ReplayConfig& config) {
  pair.validate();
  config.validate();
  return neg_log_sigmoid(pair_margin(pair, config));
}

ReplayLoss weighted_replay_loss(std::span<const PairRecord> pairs, const ReplayConfig& config) {
  config.validate();
  if (pairs.empty()) return {0.0, true};
  double weighted = 0.0;
  double total_weight = 0.0;
  for (const auto& pair : pairs) {
    const double w = pair_weight(pair, config);
    weighted += w * pair_margin_loss(pair, config);
    total_weight += w;
  }
  if (!(total_weight > 0.0)) return {0.0, true};
  return {config.lambda_pair * weighted / total_weight, false};
}

}  // namespace gradstarve
