#pragma once

// Tabular-policy RLVR training loop.
//
// Every prompt owns an independent logit table over K completions with a
// fixed correct subset. Each optimizer step visits `groups_per_step` prompts
// round-robin, draws G completions per visit, scores them by membership in
// the correct subset, and applies one plain SGD step on
//
//     L = -(1/G) sum_i A_i log pi(Y_i)
//
// to that prompt's logits. All groups of a step are sampled from the
// pre-step policy and their gradients applied together. No clipping, no KL.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "gradstarve/core.hpp"
#include "gradstarve/degeneracy.hpp"
#include "gradstarve/logio.hpp"

namespace gradstarve {

enum class InitScheme : std::uint8_t {
  Uniform,  // all logits zero: p = |C| / K
  TargetP,  // correct logits shifted so every prompt starts at init_p
  Bimodal,  // endpoint prompts pinned near p=0 / p=1, the rest at init_p
};

InitScheme parse_init_scheme(const std::string& name);
std::string_view to_string(InitScheme scheme);

struct SimConfig {
  int num_prompts = 64;
  int completions = 16;
  int correct_per_prompt = 1;
  /// Optional explicit correct subsets, one per prompt; overrides correct_per_prompt.
  std::vector<std::vector<std::size_t>> correct_sets;
  int group_size = 4;
  int steps = 500;
  double learning_rate = 0.5;
  Formulation formulation = Formulation::Sign;
  std::uint64_t seed = 0;
  InitScheme init = InitScheme::Uniform;
  double init_p = 0.25;
  double bimodal_zero_frac = 0.575;
  double bimodal_one_frac = 0.225;
  double endpoint_offset = 40.0;  // logit gap pinning endpoint prompts
  int groups_per_step = 4;
  bool frozen = false;         // sample and record, never update
  bool record_groups = false;  // keep one GroupLogRecord per group

  void validate() const;
};

/// Homogeneous start at p = 0.25, G = 4, 64 prompts x 16 completions, 500
/// steps, learning rate 0.12. At this rate mean-centered runs still carry
/// nonzero all-fail mass at the last step.
SimConfig starvation_config(Formulation formulation, std::uint64_t seed);

/// Window length, in steps, used when comparing recorded all-fail fractions.
inline constexpr int kRecordWindow = 50;

struct StepMetrics {
  int step = 0;
  int groups = 0;
  int allfail = 0;
  int allpass = 0;
  double mean_reward = 0.0;
  double allfail_frac = 0.0;
  double allpass_frac = 0.0;
  double degenerate_frac = 0.0;
  double mean_p = 0.0;  // mean success probability over all prompts after the step
};

struct Trajectory {
  std::vector<StepMetrics> steps;
  std::vector<std::vector<double>> initial_logits;
  std::vector<std::vector<double>> final_logits;
  PromptDistribution final_distribution;
  std::vector<GroupLogRecord> group_records;
  double initial_mean_p = 0.0;

  bool empty() const { return steps.empty(); }
};

/// Initial logits for every prompt, as run_sim would set them.
std::vector<std::vector<double>> initial_logits(const SimConfig& config);

/// Correct subsets for every prompt, as run_sim would use them.
std::vector<std::vector<std::size_t>> correct_sets(const SimConfig& config);

Trajectory run_sim(const SimConfig& config);

/// Group-level degeneracy aggregated over the whole run.
EmpiricalDegeneracy measure_degeneracy_over_run(const Trajectory& trajectory);

/// Pooled metrics over consecutive windows of steps; the last window may be short.
struct WindowMetrics {
  int first_step = 0;
  int last_step = 0;
  int groups = 0;
  double allfail_frac = 0.0;
  double allpass_frac = 0.0;
  double mean_reward = 0.0;
  double mean_p = 0.0;  // at the window's last step
};

std::vector<WindowMetrics> recorded_windows(const Trajectory& trajectory, int window);

/// step,mean_reward,allfail_frac,allpass_frac,mean_p
ReportTable to_table(const Trajectory& trajectory);

/// One JSONL record per group. Throws ValidationError when the run was made
/// without record_groups.
void emit_group_log(const Trajectory& trajectory, std::ostream& sink);

}  // namespace gradstarve
