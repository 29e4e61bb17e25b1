#pragma once

// Advantage formulations for binary-reward groups and the contrastive-pair
// replay loss.

#include <span>
#include <vector>

#include "gradstarve/core.hpp"

namespace gradstarve {

/// A_j = r_j - n_+/G.
AdvantageVector mean_centered(const GroupOutcome& group);

/// Mean-centered advantage divided by the unbiased (G-1 denominator) group
/// reward std on mixed groups. Degenerate groups, which include every group
/// of size one, return zeros.
AdvantageVector drgrpo_std_normalized(const GroupOutcome& group);

/// A_j = 2 r_j - 1.
AdvantageVector sign_advantage(const GroupOutcome& group);

/// Threshold-anchored signed advantage at threshold 1/2. Correct responses
/// share +1 and incorrect responses share -1; all-fail groups give -1/G to
/// every response and all-pass groups +1/G.
AdvantageVector tasa_advantage(const GroupOutcome& group);

/// General threshold-anchored signed advantage for real-valued rewards:
///
///   A_i = (r_i - c)_+ / sum_k (r_k - c)_+  -  (c - r_i)_+ / sum_k (c - r_k)_+
///
/// where each term is dropped when its denominator is zero.
std::vector<double> tasa_advantage(std::span<const double> rewards, double threshold = 0.5);

AdvantageVector compute_advantage(Formulation formulation, const GroupOutcome& group);

/// Unbiased std of a binary group with n ones out of G (requires G >= 2).
double binary_group_std(int n_plus, int group_size);

// Contrastive-pair replay ----------------------------------------------------

/// 4 p (1 - p) * min(1, n / 5).
double frontier_factor(double post_mean, double obs_count);

/// exp(-(a_+ + a_-) / (2 tau)).
double age_decay(double age_pos, double age_neg, double tau);

/// clip(reward_gap * frontier * age_decay, clip_lo, clip_hi).
double pair_weight(const PairRecord& pair, const ReplayConfig& config);

/// m = (logp_pos - logp_neg) - ref_coeff * (ref_logp_pos - ref_logp_neg).
double pair_margin(const PairRecord& pair, const ReplayConfig& config);

/// -log(sigmoid(m)), evaluated without overflow.
double neg_log_sigmoid(double margin);

double pair_margin_loss(const PairRecord& pair, const ReplayConfig& config);

struct ReplayLoss {
  double value = 0.0;
  bool empty = false;  // no pairs: value is 0 and carries no gradient
};

/// lambda_pair * sum_i w_i * (-log sigmoid(m_i)) / sum_i w_i.
ReplayLoss weighted_replay_loss(std::span<const PairRecord> pairs, const ReplayConfig& config);

}  // namespace gradstarve
