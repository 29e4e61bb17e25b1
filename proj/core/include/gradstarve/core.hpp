#pragma once

// Shared domain types for binary-reward group-relative policy optimization.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gradstarve {

/// Raised when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation cannot produce a finite answer.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Formulation : std::uint8_t {
  MeanCentered,  // r_j - n_+/G
  DrGRPO,        // mean-centered, divided by the unbiased group std on mixed groups
  Sign,          // 2 r_j - 1
  TASA,          // threshold-anchored signed advantage, threshold 1/2
};

inline constexpr Formulation kAllFormulations[] = {
    Formulation::MeanCentered, Formulation::DrGRPO, Formulation::Sign, Formulation::TASA};

std::string_view to_string(Formulation f);

/// Parses "mean", "drgrpo", "sign" or "tasa". Throws ValidationError listing
/// the candidates otherwise.
Formulation parse_formulation(std::string_view name);

/// Comma-separated list of accepted formulation names.
std::string formulation_names();

/// One prompt's G binary rewards.
class GroupOutcome {
 public:
  explicit GroupOutcome(std::vector<int> rewards);

  /// `n_plus` ones followed by `group_size - n_plus` zeros.
  static GroupOutcome from_counts(int group_size, int n_plus);

  std::span<const int> rewards() const { return rewards_; }
  int n_plus() const { return n_plus_; }
  int group_size() const { return static_cast<int>(rewards_.size()); }

  bool all_fail() const { return n_plus_ == 0; }
  bool all_pass() const { return n_plus_ == group_size(); }
  bool degenerate() const { return all_fail() || all_pass(); }

  friend bool operator==(const GroupOutcome&, const GroupOutcome&) = default;

 private:
  std::vector<int> rewards_;
  int n_plus_ = 0;
};

struct AdvantageVector {
  std::vector<double> values;
  Formulation formulation = Formulation::MeanCentered;
};

struct PromptProfile {
  std::string prompt_id;
  double p = 0.0;
  double weight = 1.0;

  void validate() const;
};

/// A weighted population of prompt success probabilities.
class PromptDistribution {
 public:
  PromptDistribution() = default;
  explicit PromptDistribution(std::vector<PromptProfile> profiles);

  /// Copy with weights rescaled to sum to one.
  PromptDistribution normalized_copy() const;

  bool normalized() const { return normalized_; }
  std::span<const PromptProfile> profiles() const { return profiles_; }
  std::size_t size() const { return profiles_.size(); }
  bool empty() const { return profiles_.empty(); }

  double total_weight() const;

 private:
  std::vector<PromptProfile> profiles_;
  bool normalized_ = false;
};

inline constexpr double kNormalizationTolerance = 1e-12;

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Softmax policy over K abstract completions with a designated correct subset.
class TabularPolicy {
 public:
  /// Requires K >= 2, finite logits, and a nonempty proper correct subset.
  /// Duplicate indices in `correct_set` are collapsed.
  TabularPolicy(std::vector<double> logits, std::vector<std::size_t> correct_set);

  std::size_t size() const { return logits_.size(); }
  std::span<const double> logits() const { return logits_; }
  std::span<const std::size_t> correct_set() const { return correct_set_; }
  bool is_correct(std::size_t index) const { return correct_mask_.at(index) != 0; }

  std::vector<double> probabilities() const { return softmax(logits_); }

  /// Softmax mass over the correct subset.
  double success_prob() const;

 private:
  std::vector<double> logits_;
  std::vector<std::size_t> correct_set_;
  std::vector<std::uint8_t> correct_mask_;
};

/// An archived same-prompt positive/negative completion pair.
struct PairRecord {
  double logp_pos = 0.0;
  double logp_neg = 0.0;
  double ref_logp_pos = 0.0;
  double ref_logp_neg = 0.0;
  double reward_gap = 1.0;
  double age_pos = 0.0;
  double age_neg = 0.0;
  double prompt_post_mean = 0.5;  // Beta-posterior mean success of the prompt
  double prompt_obs_count = 0.0;

  void validate() const;
};

struct ReplayConfig {
  double tau = 200.0;
  double ref_coeff = 1.0;     // unvalidated default
  double lambda_pair = 0.05;  // unvalidated default
  double clip_lo = 0.05;
  double clip_hi = 1.0;

  void validate() const;
};

struct RunRecord {
  std::string label;
  std::int64_t seed = 0;
  double accuracy = 0.0;

  void validate() const;
};

}  // namespace gradstarve
