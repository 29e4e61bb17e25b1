#include "gradstarve/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "gradstarve/advantage.hpp"
#include "gradstarve/rng.hpp"

namespace gradstarve {

namespace {

double success_of(std::span<const double> logits, std::span<const std::size_t> correct) {
  const auto probs = softmax(logits);
  double p = 0.0;
  for (std::size_t idx : correct) p += probs[idx];
  return p;
}

double mean_success(const std::vector<std::vector<double>>& logits,
                    const std::vector<std::vector<std::size_t>>& correct) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += success_of(logits[i], correct[i]);
  return total / static_cast<double>(logits.size());
}

std::string prompt_name(std::size_t index) { return "p" + std::to_string(index); }

}  // namespace

InitScheme parse_init_scheme(const std::string& name) {
  if (name == "uniform") return InitScheme::Uniform;
  if (name == "target") return InitScheme::TargetP;
  if (name == "bimodal") return InitScheme::Bimodal;
  throw ValidationError("unknown init scheme '" + name + "'; expected one of: uniform, target, bimodal");
}

std::string_view to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::Uniform: return "uniform";
    case InitScheme::TargetP: return "target";
    case InitScheme::Bimodal: return "bimodal";
  }
  return "unknown";
}

void SimConfig::validate() const {
  if (num_prompts < 1) throw ValidationError("num_prompts must be >= 1");
  if (completions < 2) throw ValidationError("completions per prompt must be >= 2");
  if (steps < 1) throw ValidationError("steps must be >= 1");
  if (group_size < 1) throw ValidationError("group size must be >= 1");
  if (groups_per_step < 1) throw ValidationError("groups_per_step must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning rate must be finite and > 0");
  }
  if (correct_sets.empty()) {
    if (correct_per_prompt < 1 || correct_per_prompt >= completions) {
      throw ValidationError("correct_per_prompt must lie in [1, completions - 1]");
    }
  } else {
    if (correct_sets.size() != static_cast<std::size_t>(num_prompts)) {
      throw ValidationError("explicit correct sets must have one entry per prompt");
    }
    for (const auto& set : correct_sets) {
      // TabularPolicy enforces nonempty, proper and in-range.
      (void)TabularPolicy(std::vector<double>(static_cast<std::size_t>(completions), 0.0), set);
    }
  }
  if (init != InitScheme::Uniform && !(init_p > 0.0 && init_p < 1.0)) {
    throw ValidationError("init_p must lie strictly inside (0, 1)");
  }
  if (init == InitScheme::Bimodal) {
    if (!(bimodal_zero_frac >= 0.0) || !(bimodal_one_frac >= 0.0) ||
        bimodal_zero_frac + bimodal_one_frac > 1.0) {
      throw ValidationError("bimodal endpoint fractions must be nonnegative and sum to at most 1");
    }
    if (!(endpoint_offset > 0.0) || !std::isfinite(endpoint_offset)) {
      throw ValidationError("endpoint_offset must be finite and > 0");
    }
  }
}

SimConfig starvation_config(Formulation formulation, std::uint64_t seed) {
  SimConfig config;
  config.init = InitScheme::TargetP;
  config.init_p = 0.25;
  config.learning_rate = 0.12;
  config.formulation = formulation;
  config.seed = seed;
  return config;
}

std::vector<std::vector<std::size_t>> correct_sets(const SimConfig& config) {
  if (!config.correct_sets.empty()) return config.correct_sets;
  std::vector<std::size_t> set;
  for (int i = 0; i < config.correct_per_prompt; ++i) set.push_back(static_cast<std::size_t>(i));
  return std::vector<std::vector<std::size_t>>(static_cast<std::size_t>(config.num_prompts), set);
}

std::vector<std::vector<double>> initial_logits(const SimConfig& config) {
  config.validate();
  const auto sets = correct_sets(config);
  const auto n = static_cast<std::size_t>(config.num_prompts);
  const auto k = static_cast<std::size_t>(config.completions);
  std::vector<std::vector<double>> logits(n, std::vector<double>(k, 0.0));

  auto target = [&](std::size_t prompt) {
    const double m = static_cast<double>(sets[prompt].size());
    const double shift = std::log(config.init_p / (1.0 - config.init_p) * (static_cast<double>(k) - m) / m);
    for (std::size_t idx : sets[prompt]) logits[prompt][idx] = shift;
  };

  switch (config.init) {
    case InitScheme::Uniform: break;
    case InitScheme::TargetP:
      for (std::size_t i = 0; i < n; ++i) target(i);
      break;
    case InitScheme::Bimodal: {
      const auto n_zero = static_cast<std::size_t>(std::lround(config.bimodal_zero_frac * static_cast<double>(n)));
      const auto n_one = std::min(
          n - n_zero, static_cast<std::size_t>(std::lround(config.bimodal_one_frac * static_cast<double>(n))));
      for (std::size_t i = 0; i < n; ++i) {
        if (i < n_zero) {
          for (std::size_t idx : sets[i]) logits[i][idx] = -config.endpoint_offset;
        } else if (i < n_zero + n_one) {
          for (auto& v : logits[i]) v = -config.endpoint_offset;
          for (std::size_t idx : sets[i]) logits[i][idx] = 0.0;
        } else {
          target(i);
        }
      }
      break;
    }
  }
  return logits;
}

Trajectory run_sim(const SimConfig& config) {
  config.validate();
  const auto sets = correct_sets(config);
  const auto n_prompts = static_cast<std::size_t>(config.num_prompts);
  const auto k = static_cast<std::size_t>(config.completions);
  const auto g = static_cast<std::size_t>(config.group_size);

  std::vector<std::vector<std::uint8_t>> is_correct(n_prompts, std::vector<std::uint8_t>(k, 0));
  for (std::size_t i = 0; i < n_prompts; ++i) {
    for (std::size_t idx : sets[i]) is_correct[i][idx] = 1;
  }

  Trajectory traj;
  traj.initial_logits = initial_logits(config);
  auto logits = traj.initial_logits;
  traj.initial_mean_p = mean_success(logits, sets);
  traj.steps.reserve(static_cast<std::size_t>(config.steps));

  const CounterRng base(config.seed);
  const double step_scale = config.learning_rate / static_cast<double>(g);
  std::vector<std::vector<double>> delta(n_prompts);
  std::vector<std::size_t> sample(g);
  std::vector<int> rewards(g);

  for (int step = 0; step < config.steps; ++step) {
    StepMetrics metrics;
    metrics.step = step;
    long reward_total = 0;
    for (int j = 0; j < config.groups_per_step; ++j) {
      const std::uint64_t group_id =
          static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(config.groups_per_step) +
          static_cast<std::uint64_t>(j);
      const std::size_t prompt = group_id % n_prompts;
      CounterRng rng = base.substream(group_id);

      const auto probs = softmax(logits[prompt]);
      for (std::size_t i = 0; i < g; ++i) {
        sample[i] = rng.categorical(probs);
        rewards[i] = is_correct[prompt][sample[i]];
      }
      const GroupOutcome outcome(rewards);
      ++metrics.groups;
      reward_total += outcome.n_plus();
      if (outcome.all_fail()) ++metrics.allfail;
      else if (outcome.all_pass()) ++metrics.allpass;
      if (config.record_groups) {
        traj.group_records.push_back({step, prompt_name(prompt), rewards});
      }
      if (config.frozen) continue;

      // theta <- theta + (lr/G) sum_i A_i (e_{y_i} - pi)
      const auto adv = compute_advantage(config.formulation, outcome);
      auto& d = delta[prompt];
      if (d.empty()) d.assign(k, 0.0);
      for (std::size_t i = 0; i < g; ++i) {
        const double a = step_scale * adv.values[i];
        for (std::size_t c = 0; c < k; ++c) d[c] -= a * probs[c];
        d[sample[i]] += a;
      }
    }
    for (std::size_t prompt = 0; prompt < n_prompts; ++prompt) {
      auto& d = delta[prompt];
      if (d.empty()) continue;
      for (std::size_t c = 0; c < k; ++c) logits[prompt][c] += d[c];
      d.clear();
    }

    const double groups = metrics.groups;
    metrics.mean_reward = static_cast<double>(reward_total) / (groups * static_cast<double>(g));
    metrics.allfail_frac = metrics.allfail / groups;
    metrics.allpass_frac = metrics.allpass / groups;
    metrics.degenerate_frac = metrics.allfail_frac + metrics.allpass_frac;
    metrics.mean_p = mean_success(logits, sets);
    traj.steps.push_back(metrics);
  }

  std::vector<PromptProfile> profiles;
  profiles.reserve(n_prompts);
  for (std::size_t i = 0; i < n_prompts; ++i) {
    profiles.push_back({prompt_name(i), std::clamp(success_of(logits[i], sets[i]), 0.0, 1.0),
                        1.0 / static_cast<double>(n_prompts)});
  }
  traj.final_distribution = PromptDistribution(std::move(profiles)).normalized_copy();
  traj.final_logits = std::move(logits);
  return traj;
}

EmpiricalDegeneracy measure_degeneracy_over_run(const Trajectory& trajectory) {
  if (trajectory.empty()) throw ValidationError("trajectory has no steps");
  std::size_t groups = 0;
  std::size_t allfail = 0;
  std::size_t allpass = 0;
  for (const auto& s : trajectory.steps) {
    groups += static_cast<std::size_t>(s.groups);
    allfail += static_cast<std::size_t>(s.allfail);
    allpass += static_cast<std::size_t>(s.allpass);
  }
  return degeneracy_from_counts(groups, allfail, allpass);
}

std::vector<WindowMetrics> recorded_windows(const Trajectory& trajectory, int window) {
  if (window < 1) throw ValidationError("window must be >= 1");
  std::vector<WindowMetrics> out;
  const auto& steps = trajectory.steps;
  for (std::size_t start = 0; start < steps.size(); start += static_cast<std::size_t>(window)) {
    const std::size_t end = std::min(steps.size(), start + static_cast<std::size_t>(window));
    WindowMetrics w;
    w.first_step = steps[start].step;
    w.last_step = steps[end - 1].step;
    int allfail = 0;
    int allpass = 0;
    double reward = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      w.groups += steps[i].groups;
      allfail += steps[i].allfail;
      allpass += steps[i].allpass;
      reward += steps[i].mean_reward * steps[i].groups;
    }
    w.allfail_frac = static_cast<double>(allfail) / w.groups;
    w.allpass_frac = static_cast<double>(allpass) / w.groups;
    w.mean_reward = reward / w.groups;
    w.mean_p = steps[end - 1].mean_p;
    out.push_back(w);
  }
  return out;
}

ReportTable to_table(const Trajectory& trajectory) {
  ReportTable table;
  table.columns = {"step", "mean_reward", "allfail_frac", "allpass_frac", "mean_p"};
  table.integer_columns = {"step"};
  for (const auto& s : trajectory.steps) {
    table.rows.push_back({static_cast<double>(s.step), s.mean_reward, s.allfail_frac, s.allpass_frac, s.mean_p});
  }
  return table;
}

void emit_group_log(const Trajectory& trajectory, std::ostream& sink) {
  if (trajectory.group_records.empty() && !trajectory.empty()) {
    throw ValidationError("run was made without group recording enabled");
  }
  write_group_log(trajectory.group_records, sink);
}

}  // namespace gradstarve
