#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gradstarve/advantage.hpp"
#include "gradstarve/core.hpp"
#include "gradstarve/degeneracy.hpp"
#include "gradstarve/evalstats.hpp"
#include "gradstarve/logio.hpp"
#include "gradstarve/simulator.hpp"
#include "gradstarve/theory.hpp"

namespace gradstarve::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

std::string num(double value) { return fmt("%.10g", value); }

std::string join(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += num(values[i]);
  }
  return s;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& token, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != token.size() || !std::isfinite(v))
    throw ValidationError(what + ": not a finite number: '" + token + "'");
  return v;
}

int parse_int(const std::string& token, const std::string& what) {
  const double v = parse_double(token, what);
  if (v != std::floor(v) || std::fabs(v) > 1e9) throw ValidationError(what + ": not an integer: '" + token + "'");
  return static_cast<int>(v);
}

// Input and output paths ------------------------------------------------------

fs::path resolve_output(const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') p = fs::path(dir) / p;
  }
  return p;
}

fs::path checked_output(const std::string& path) {
  const fs::path p = resolve_output(path);
  const fs::path parent = p.parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    throw ValidationError("output directory does not exist: " + parent.string());
  if (fs::is_directory(p)) throw ValidationError("output path is a directory: " + p.string());
  return p;
}

void checked_input(const std::string& path) {
  if (!fs::is_regular_file(path)) throw ValidationError("cannot read input file: " + path);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read input file: " + path);
  return in;
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  out << bytes;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// "runs.csv" with seed 3 -> "runs.seed3.csv"
std::string seeded_path(const std::string& path, std::uint64_t seed) {
  fs::path p(path);
  const std::string stem = p.stem().string() + ".seed" + std::to_string(seed);
  return (p.parent_path() / (stem + p.extension().string())).string();
}

std::string render(const ReportTable& table, ReportFormat format) {
  std::ostringstream s;
  write_report(table, format, s);
  return s.str();
}

// Shared state ----------------------------------------------------------------

struct Globals {
  bool json = false;
};

// advantage -------------------------------------------------------------------

struct AdvantageArgs {
  std::string rewards;
  std::string formulation = "sign";
  double threshold = 0.5;
};

int cmd_advantage(const AdvantageArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const Formulation f = parse_formulation(a.formulation);
  std::vector<double> rewards;
  for (const auto& tok : split(a.rewards, ',')) rewards.push_back(parse_double(tok, "--rewards"));
  if (rewards.empty()) throw ValidationError("--rewards: empty reward list");

  const bool binary = std::all_of(rewards.begin(), rewards.end(), [](double r) { return r == 0.0 || r == 1.0; });
  std::vector<double> values;
  bool degenerate = false;
  if (binary) {
    std::vector<int> ints;
    for (double r : rewards) ints.push_back(static_cast<int>(r));
    const GroupOutcome group(ints);
    degenerate = group.degenerate();
    values = compute_advantage(f, group).values;
  } else {
    if (f != Formulation::TASA) throw ValidationError("non-binary rewards are supported only by tasa");
    values = tasa_advantage(rewards, a.threshold);
    degenerate = std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); });
  }

  if (degenerate && (f == Formulation::MeanCentered || f == Formulation::DrGRPO))
    err << "warning: degenerate group, " << to_string(f) << " advantage is zero for every member\n";

  if (g.json) {
    ordered_json j;
    j["formulation"] = std::string(to_string(f));
    j["rewards"] = rewards;
    j["values"] = values;
    j["degenerate"] = degenerate;
    out << j.dump() << '\n';
  } else {
    out << join(values) << '\n';
  }
  return kExitOk;
}

// degeneracy ------------------------------------------------------------------

struct DegeneracyArgs {
  std::optional<double> p;
  int g = 4;
  std::string dist, log, rollouts, out;
  std::string format = "csv";
  bool strict = false;
  bool normalize = false;
};

int cmd_degeneracy(const DegeneracyArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const int modes = int(a.p.has_value()) + int(!a.dist.empty()) + int(!a.log.empty()) + int(!a.rollouts.empty());
  if (modes != 1) throw ValidationError("give exactly one of --p, --dist, --log, --rollouts");
  for (const auto* path : {&a.dist, &a.log, &a.rollouts})
    if (!path->empty()) checked_input(*path);
  std::optional<fs::path> out_path;
  if (!a.out.empty()) out_path = checked_output(a.out);
  const ReportFormat format = g.json ? ReportFormat::Json : parse_report_format(a.format);

  ReportTable table;
  if (a.p) {
    const double d = degeneracy_prob(*a.p, a.g);
    table.columns = {"p", "group_size", "degeneracy"};
    table.rows = {{*a.p, double(a.g), d}};
    table.integer_columns = {"group_size"};
    err << "D(" << num(*a.p) << ", " << a.g << ") = " << num(d) << '\n';
  } else if (!a.log.empty()) {
    auto in = open_input(a.log);
    const IngestResult ingest = ingest_group_log(in, a.strict);
    for (const auto& e : ingest.errors) err << a.log << ":" << e.line << ": " << e.message << '\n';
    const auto groups = ingest.groups();
    const EmpiricalDegeneracy emp = empirical_degeneracy(groups);
    table = to_table(emp);
    err << emp.groups << " groups: degenerate " << num(emp.degenerate_frac) << " (all-fail " << num(emp.allfail_frac)
        << ", all-pass " << num(emp.allpass_frac) << "), standard error " << fmt("%.2g", emp.standard_error())
        << '\n';
  } else {
    PromptDistribution dist;
    if (!a.dist.empty()) {
      auto in = open_input(a.dist);
      dist = read_distribution(in);
    } else {
      auto in = open_input(a.rollouts);
      const IngestResult ingest = ingest_group_log(in, a.strict);
      for (const auto& e : ingest.errors) err << a.rollouts << ":" << e.line << ": " << e.message << '\n';
      const auto rollouts = ingest.rollouts_by_prompt();
      dist = estimate_profiles(rollouts);
    }
    if (!dist.normalized()) {
      if (!a.normalize)
        throw ValidationError("prompt weights sum to " + num(dist.total_weight()) + ", not 1 (pass --normalize)");
      dist = dist.normalized_copy();
    }
    const DegeneracyReport report = jensen_report(dist, a.g);
    table = to_table(report);
    err << dist.size() << " prompts at G=" << a.g << ": D_real " << num(report.d_real) << ", D_iid "
        << num(report.d_iid) << ", variance bound " << num(report.variance_bound) << '\n';
  }

  const std::string bytes = render(table, format);
  if (out_path)
    write_file(*out_path, bytes);
  else
    out << bytes;
  return kExitOk;
}

// coeff -----------------------------------------------------------------------

struct CoeffArgs {
  double p = 0.25;
  int g = 4;
  std::string formulation = "sign";
};

int cmd_coeff(const CoeffArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  std::vector<Formulation> fs;
  const bool all = a.formulation == "all";
  if (all)
    fs.assign(std::begin(kAllFormulations), std::end(kAllFormulations));
  else
    fs = {parse_formulation(a.formulation)};

  ordered_json rows = ordered_json::array();
  std::ostringstream csv;
  if (all) csv << "formulation,coefficient,degenerate_contribution\n";
  for (Formulation f : fs) {
    const double coeff = expected_coefficient(f, a.p, a.g);
    const double contrib = degenerate_contribution(a.p, a.g, degenerate_advantage_magnitude(f, a.g));
    err << to_string(f) << ": E[grad] = " << num(coeff) << " * grad p (degenerate share " << num(contrib) << ")\n";
    rows.push_back({{"formulation", std::string(to_string(f))},
                    {"p", a.p},
                    {"group_size", a.g},
                    {"coefficient", coeff},
                    {"degenerate_contribution", contrib}});
    if (all)
      csv << to_string(f) << ',' << num(coeff) << ',' << num(contrib) << '\n';
    else
      csv << num(coeff) << '\n';
  }
  if (g.json)
    out << (all ? rows : rows.front()).dump() << '\n';
  else
    out << csv.str();
  return kExitOk;
}

// theoremcheck ----------------------------------------------------------------

struct TheoremArgs {
  int k = 4;
  int g = 3;
  int trials = 100;
  std::uint64_t seed = 1;
  double c = 1.0;
  double tol = 1e-10;
};

int cmd_theoremcheck(const TheoremArgs& a, const Globals& g, std::ostream& out, std::ostream&) {
  const TheoremCheckResult r = theorem_check(a.k, a.g, a.trials, a.seed, a.c, a.tol);
  if (g.json) {
    ordered_json j{{"max_deviation", r.max_deviation}, {"trials", r.trials}, {"completions", r.completions},
                   {"group_size", r.group_size}, {"tolerance", r.tolerance}, {"passed", r.passed()}};
    out << j.dump() << '\n';
  } else {
    out << "max deviation " << fmt("%.1e", r.max_deviation) << " over " << r.trials << " trials (K=" << r.completions
        << ", G=" << r.group_size << "): " << (r.passed() ? "PASS" : "FAIL") << " (tol " << fmt("%.0e", r.tolerance)
        << ")\n";
  }
  return r.passed() ? kExitOk : kExitRuntime;
}

// simulate --------------------------------------------------------------------

struct SimulateArgs {
  SimConfig config;
  std::string formulation = "sign";
  std::string init = "uniform";
  std::string preset;
  std::vector<std::uint64_t> seeds;
  int window = kRecordWindow;
  std::string trajectory, group_log;
  std::map<std::string, CLI::Option*> opts;  // explicitly settable fields
};

struct SeedSummary {
  std::uint64_t seed = 0;
  double initial_mean_p = 0.0;
  double final_mean_p = 0.0;
  double final_window_allfail = 0.0;
  EmpiricalDegeneracy run;
  std::string trajectory_bytes;
  std::string group_log_bytes;
};

SeedSummary simulate_one(SimConfig config, int window, bool want_trajectory) {
  const Trajectory t = run_sim(config);
  SeedSummary s;
  s.seed = config.seed;
  s.initial_mean_p = t.initial_mean_p;
  s.final_mean_p = t.steps.back().mean_p;
  s.final_window_allfail = recorded_windows(t, window).back().allfail_frac;
  s.run = measure_degeneracy_over_run(t);
  if (want_trajectory) s.trajectory_bytes = render(to_table(t), ReportFormat::Csv);
  if (config.record_groups) {
    std::ostringstream log;
    emit_group_log(t, log);
    s.group_log_bytes = log.str();
  }
  return s;
}

int cmd_simulate(SimulateArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  const Formulation f = parse_formulation(a.formulation);
  SimConfig config = a.config;
  if (!a.preset.empty()) {
    if (a.preset != "starvation") throw ValidationError("unknown preset '" + a.preset + "' (candidates: starvation)");
    const SimConfig preset = starvation_config(f, config.seed);
    // Preset values fill every field the command line left unset.
    auto keep = [&](const char* name) { return a.opts.at(name)->count() > 0; };
    if (!keep("--prompts")) config.num_prompts = preset.num_prompts;
    if (!keep("--k")) config.completions = preset.completions;
    if (!keep("--correct")) config.correct_per_prompt = preset.correct_per_prompt;
    if (!keep("--g")) config.group_size = preset.group_size;
    if (!keep("--steps")) config.steps = preset.steps;
    if (!keep("--lr")) config.learning_rate = preset.learning_rate;
    if (!keep("--init")) a.init = std::string(to_string(preset.init));
    if (!keep("--init-p")) config.init_p = preset.init_p;
    if (!keep("--groups-per-step")) config.groups_per_step = preset.groups_per_step;
  }
  config.formulation = f;
  config.init = parse_init_scheme(a.init);
  config.record_groups = !a.group_log.empty();
  if (a.window < 1) throw ValidationError("--window must be >= 1");

  std::vector<std::uint64_t> seeds = a.seeds;
  if (seeds.empty()) seeds = {config.seed};
  const bool many = seeds.size() > 1;

  std::vector<std::pair<std::uint64_t, fs::path>> traj_paths, log_paths;
  for (std::uint64_t s : seeds) {
    if (!a.trajectory.empty()) traj_paths.emplace_back(s, checked_output(many ? seeded_path(a.trajectory, s) : a.trajectory));
    if (!a.group_log.empty()) log_paths.emplace_back(s, checked_output(many ? seeded_path(a.group_log, s) : a.group_log));
  }
  config.validate();

  std::vector<std::future<SeedSummary>> jobs;
  for (std::uint64_t s : seeds) {
    SimConfig c = config;
    c.seed = s;
    jobs.push_back(std::async(std::launch::async, simulate_one, c, a.window, !a.trajectory.empty()));
  }
  std::vector<SeedSummary> results;
  for (auto& j : jobs) results.push_back(j.get());

  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!traj_paths.empty()) write_file(traj_paths[i].second, results[i].trajectory_bytes);
    if (!log_paths.empty()) write_file(log_paths[i].second, results[i].group_log_bytes);
  }

  ReportTable table;
  table.columns = {"seed", "initial_mean_p", "final_mean_p", "final_window_allfail", "run_degenerate_frac",
                   "run_allfail_frac", "run_allpass_frac"};
  table.integer_columns = {"seed"};
  for (const auto& r : results) {
    table.rows.push_back({double(r.seed), r.initial_mean_p, r.final_mean_p, r.final_window_allfail,
                          r.run.degenerate_frac, r.run.allfail_frac, r.run.allpass_frac});
    err << to_string(f) << " seed " << r.seed << ": mean p " << fmt("%.4f", r.initial_mean_p) << " -> "
        << fmt("%.4f", r.final_mean_p) << ", last-window all-fail " << fmt("%.4f", r.final_window_allfail) << '\n';
  }
  out << render(table, g.json ? ReportFormat::Json : ReportFormat::Csv);
  return kExitOk;
}

// passk -----------------------------------------------------------------------

struct PasskArgs {
  std::optional<int> n, c, k;
  std::string matrix;
  std::string ks = "1,2,4,8";
};

int cmd_passk(const PasskArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  if (!a.matrix.empty()) {
    checked_input(a.matrix);
    auto in = open_input(a.matrix);
    const CsvTable csv = read_csv(in);
    const auto ns = csv.numeric_column("n");
    const auto cs = csv.numeric_column("c");
    SampleMatrix m;
    for (std::size_t i = 0; i < ns.size(); ++i)
      m.questions.push_back({parse_int(num(ns[i]), "n"), parse_int(num(cs[i]), "c")});
    m.validate();
    std::vector<int> ks;
    for (const auto& tok : split(a.ks, ',')) ks.push_back(parse_int(tok, "--ks"));
    const auto curve = pass_at_k_curve(m, ks);
    ReportTable t;
    t.columns = {"k", "pass_at_k"};
    t.integer_columns = {"k"};
    for (std::size_t i = 0; i < ks.size(); ++i) t.rows.push_back({double(ks[i]), curve[i]});
    err << m.questions.size() << " questions, min samples " << m.min_samples() << '\n';
    out << render(t, g.json ? ReportFormat::Json : ReportFormat::Csv);
    return kExitOk;
  }
  if (!a.n || !a.c || !a.k) throw ValidationError("give --n, --c and --k, or --matrix");
  const double v = pass_at_k(*a.n, *a.c, *a.k);
  if (g.json)
    out << ordered_json{{"n", *a.n}, {"c", *a.c}, {"k", *a.k}, {"pass_at_k", v}}.dump() << '\n';
  else
    out << num(v) << '\n';
  return kExitOk;
}

// stats -----------------------------------------------------------------------

Alternative parse_alternative(const std::string& name) {
  if (name == "two-sided") return Alternative::TwoSided;
  if (name == "greater") return Alternative::Greater;
  if (name == "less") return Alternative::Less;
  throw ValidationError("unknown alternative '" + name + "' (candidates: two-sided, greater, less)");
}

SdKind parse_sd_kind(const std::string& name) {
  if (name == "population") return SdKind::Population;
  if (name == "sample") return SdKind::Sample;
  throw ValidationError("unknown sd kind '" + name + "' (candidates: population, sample)");
}

std::vector<std::string> labels_in_order(const std::vector<RunRecord>& records) {
  std::vector<std::string> labels;
  for (const auto& r : records)
    if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) labels.push_back(r.label);
  return labels;
}

struct PermutationArgs {
  std::string input, a, b;
  std::string alternative = "two-sided";
  std::uint64_t resamples = 0;
  std::uint64_t seed = 0;
};

int cmd_permutation(const PermutationArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  checked_input(a.input);
  const Alternative alt = parse_alternative(a.alternative);
  auto in = open_input(a.input);
  const auto records = read_run_records(in);
  const auto labels = labels_in_order(records);
  std::string la = a.a, lb = a.b;
  if (la.empty() || lb.empty()) {
    if (labels.size() != 2)
      throw ValidationError("input has " + std::to_string(labels.size()) + " labels; choose two with --a and --b");
    if (la.empty()) la = labels[0] == lb ? labels[1] : labels[0];
    if (lb.empty()) lb = labels[0] == la ? labels[1] : labels[0];
  }
  const auto xa = accuracies_for(records, la);
  const auto xb = accuracies_for(records, lb);
  if (xa.empty() || xb.empty()) throw ValidationError("label not found in input: " + (xa.empty() ? la : lb));

  const PermutationResult r = a.resamples > 0 ? monte_carlo_permutation_test(xa, xb, a.resamples, a.seed, alt)
                                              : exact_permutation_test(xa, xb, alt);
  err << la << " (n=" << xa.size() << ") vs " << lb << " (n=" << xb.size() << "): mean difference "
      << num(r.observed_difference) << ", " << r.extreme << " of " << r.total
      << (r.exact ? " relabelings" : " resamples") << " at least as extreme\n";
  if (g.json) {
    out << ordered_json{{"a", la},
                        {"b", lb},
                        {"p", r.p},
                        {"extreme", r.extreme},
                        {"total", r.total},
                        {"observed_difference", r.observed_difference},
                        {"exact", r.exact}}
               .dump()
        << '\n';
  } else if (r.exact) {
    const std::uint64_t d = std::gcd(r.extreme, r.total);
    out << "p = " << r.extreme / d << '/' << r.total / d << " = " << fmt("%.6f", r.p) << '\n';
  } else {
    out << "p = " << fmt("%.6f", r.p) << " (" << r.total << " resamples)\n";
  }
  return kExitOk;
}

struct WelchArgs {
  std::optional<double> mean1, sd1, mean2, sd2;
  std::optional<int> n1, n2;
  std::string table, a, b;
  std::string sd_kind = "population";
};

int cmd_welch(const WelchArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  double m1, s1, m2, s2;
  int n1, n2;
  if (!a.table.empty()) {
    checked_input(a.table);
    if (a.a.empty() || a.b.empty()) throw ValidationError("--table needs --a and --b labels");
    auto in = open_input(a.table);
    const CsvTable csv = read_csv(in);
    const std::size_t li = csv.column("label");
    auto row = [&](const std::string& label) -> const std::vector<std::string>& {
      for (const auto& r : csv.rows)
        if (r.at(li) == label) return r;
      throw ValidationError("label not found in table: " + label);
    };
    const auto& ra = row(a.a);
    const auto& rb = row(a.b);
    const std::size_t ni = csv.column("n"), mi = csv.column("mean"), si = csv.column("std");
    m1 = parse_double(ra.at(mi), "mean");
    s1 = parse_double(ra.at(si), "std");
    n1 = parse_int(ra.at(ni), "n");
    m2 = parse_double(rb.at(mi), "mean");
    s2 = parse_double(rb.at(si), "std");
    n2 = parse_int(rb.at(ni), "n");
  } else {
    if (!a.mean1 || !a.sd1 || !a.n1 || !a.mean2 || !a.sd2 || !a.n2)
      throw ValidationError("give --mean1 --sd1 --n1 --mean2 --sd2 --n2, or --table");
    m1 = *a.mean1, s1 = *a.sd1, n1 = *a.n1, m2 = *a.mean2, s2 = *a.sd2, n2 = *a.n2;
  }

  std::vector<std::pair<std::string, SdKind>> kinds;
  if (a.sd_kind == "both")
    kinds = {{"population", SdKind::Population}, {"sample", SdKind::Sample}};
  else
    kinds = {{a.sd_kind, parse_sd_kind(a.sd_kind)}};

  ordered_json rows = ordered_json::array();
  for (const auto& [name, kind] : kinds) {
    const WelchResult r = welch_t_test(m1, s1, n1, m2, s2, n2, kind);
    rows.push_back({{"sd_kind", name}, {"t", r.t}, {"df", r.df}, {"p", r.p_two_sided}});
    if (!g.json) {
      if (kinds.size() > 1) out << name << ": ";
      out << "t = " << fmt("%.6f", r.t) << ", df = " << fmt("%.4f", r.df) << ", p = " << fmt("%.4g", r.p_two_sided)
          << '\n';
    }
    err << name << " std: " << (r.p_two_sided < 1e-4 ? "p < 0.0001" : "p = " + fmt("%.3f", r.p_two_sided)) << '\n';
  }
  if (g.json) out << (kinds.size() > 1 ? rows : rows.front()).dump() << '\n';
  return kExitOk;
}

struct SummaryArgs {
  std::string input, label;
  std::string sd_kind = "population";
};

int cmd_summary(const SummaryArgs& a, const Globals& g, std::ostream& out, std::ostream&) {
  checked_input(a.input);
  const SdKind kind = parse_sd_kind(a.sd_kind);
  auto in = open_input(a.input);
  const auto records = read_run_records(in);
  std::vector<std::string> labels = a.label.empty() ? labels_in_order(records) : std::vector<std::string>{a.label};

  ordered_json rows = ordered_json::array();
  std::ostringstream csv;
  csv << "label,n,mean,median,std,min,max\n";
  for (const auto& label : labels) {
    const auto xs = accuracies_for(records, label);
    if (xs.empty()) throw ValidationError("label not found in input: " + label);
    const SummaryStats s = summary_stats(xs, kind);
    rows.push_back({{"label", label}, {"n", s.count}, {"mean", s.mean}, {"median", s.median}, {"std", s.std},
                    {"min", s.min}, {"max", s.max}});
    csv << label << ',' << s.count << ',' << format_real(s.mean, 6) << ',' << format_real(s.median, 6) << ','
        << format_real(s.std, 6) << ',' << format_real(s.min, 6) << ',' << format_real(s.max, 6) << '\n';
  }
  out << (g.json ? rows.dump() + "\n" : csv.str());
  return kExitOk;
}

// replay ----------------------------------------------------------------------

struct ReplayArgs {
  ReplayConfig config;
  PairRecord pair;
  std::string pairs;
};

int cmd_replay(const ReplayArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  a.config.validate();
  std::vector<PairRecord> pairs;
  if (!a.pairs.empty()) {
    checked_input(a.pairs);
    auto in = open_input(a.pairs);
    const CsvTable csv = read_csv(in);
    const char* names[] = {"logp_pos", "logp_neg", "ref_logp_pos",     "ref_logp_neg",    "reward_gap",
                           "age_pos",  "age_neg",  "prompt_post_mean", "prompt_obs_count"};
    std::vector<std::vector<double>> cols;
    for (const char* n : names) cols.push_back(csv.numeric_column(n));
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
      pairs.push_back({cols[0][i], cols[1][i], cols[2][i], cols[3][i], cols[4][i], cols[5][i], cols[6][i],
                       cols[7][i], cols[8][i]});
  } else {
    pairs.push_back(a.pair);
  }
  for (const auto& p : pairs) p.validate();

  ReportTable t;
  t.columns = {"pair", "weight", "margin", "loss"};
  t.integer_columns = {"pair"};
  for (std::size_t i = 0; i < pairs.size(); ++i)
    t.rows.push_back({double(i), pair_weight(pairs[i], a.config), pair_margin(pairs[i], a.config),
                      pair_margin_loss(pairs[i], a.config)});
  const ReplayLoss total = weighted_replay_loss(pairs, a.config);
  err << pairs.size() << " pairs: weighted replay loss " << num(total.value) << '\n';
  out << render(t, g.json ? ReportFormat::Json : ReportFormat::Csv);
  return kExitOk;
}

// plot ------------------------------------------------------------------------

struct PlotArgs {
  std::vector<std::string> inputs;
  std::string x;
  std::vector<std::string> y;
  std::string group_by;
  std::string kind = "line";
  std::string title, xlabel, ylabel, out;
};

int cmd_plot(const PlotArgs& a, const Globals&, std::ostream&, std::ostream& err) {
  struct Source {
    std::string label, path;
  };
  std::vector<Source> sources;
  for (const auto& spec : a.inputs) {
    const auto eq = spec.find('=');
    if (eq != std::string::npos && !fs::exists(spec))
      sources.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
    else
      sources.push_back({"", spec});
  }
  for (const auto& s : sources) checked_input(s.path);
  const fs::path out_path = checked_output(a.out);
  const PlotKind kind = parse_plot_kind(a.kind);

  std::vector<PlotSeries> series;
  for (const auto& src : sources) {
    auto in = open_input(src.path);
    const CsvTable csv = read_csv(in);
    const std::string prefix =
        !src.label.empty() ? src.label : (sources.size() > 1 ? fs::path(src.path).stem().string() : std::string());
    const auto xs = csv.numeric_column(a.x);
    for (const auto& ycol : a.y) {
      const auto ys = csv.numeric_column(ycol);
      auto name_for = [&](const std::string& group) {
        std::string name = prefix;
        if (!group.empty()) name += (name.empty() ? "" : ":") + group;
        if (a.y.size() > 1 || name.empty()) name += (name.empty() ? "" : ":") + ycol;
        return name;
      };
      if (a.group_by.empty()) {
        series.push_back({name_for(""), xs, ys});
        continue;
      }
      const std::size_t gi = csv.column(a.group_by);
      std::vector<std::string> order;
      std::map<std::string, PlotSeries> by_group;
      for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        const std::string& key = csv.rows[i].at(gi);
        auto [it, fresh] = by_group.try_emplace(key, PlotSeries{name_for(key), {}, {}});
        if (fresh) order.push_back(key);
        it->second.x.push_back(xs[i]);
        it->second.y.push_back(ys[i]);
      }
      for (const auto& key : order) series.push_back(std::move(by_group.at(key)));
    }
  }

  PlotOptions options;
  options.title = a.title;
  options.x_label = a.xlabel.empty() ? a.x : a.xlabel;
  options.y_label = a.ylabel.empty() ? (a.y.size() == 1 ? a.y.front() : std::string()) : a.ylabel;
  std::ostringstream svg;
  const std::size_t bytes = render_plot(series, kind, options, svg);
  write_file(out_path, svg.str());
  err << "wrote " << series.size() << " series (" << bytes << " bytes) to " << out_path.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient-starvation analytics for binary-reward group policy optimization"};
  app.name("gradstarve");
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_config("--config", "", "Read options from a TOML/INI file; command-line flags override it");
  app.set_version_flag("--version", "gradstarve 0.1.0");

  Globals g;
  app.add_flag("--json", g.json, "Write JSON instead of text/CSV to stdout");

  AdvantageArgs adv;
  auto* c_adv = app.add_subcommand("advantage", "Per-sample advantages for one group of rewards");
  c_adv->add_option("--rewards", adv.rewards, "Comma-separated rewards, e.g. 1,0,0,0")->required();
  c_adv->add_option("--formulation", adv.formulation, "mean | drgrpo | sign | tasa")->capture_default_str();
  c_adv->add_option("--threshold", adv.threshold, "tasa threshold for non-binary rewards")->capture_default_str();

  DegeneracyArgs deg;
  auto* c_deg = app.add_subcommand("degeneracy", "Degenerate-group probability, Jensen report, or log analytics");
  c_deg->add_option("--p", deg.p, "Success probability: print D(p, G)");
  c_deg->add_option("--g", deg.g, "Group size")->capture_default_str();
  c_deg->add_option("--dist", deg.dist, "Prompt distribution CSV (prompt_id,p,weight): Jensen report");
  c_deg->add_option("--log", deg.log, "Group log JSONL: empirical degeneracy");
  c_deg->add_option("--rollouts", deg.rollouts, "Group log JSONL: Jensen report on per-prompt success estimates");
  c_deg->add_flag("--strict", deg.strict, "Abort on the first malformed log line");
  c_deg->add_flag("--normalize", deg.normalize, "Rescale distribution weights to sum to one");
  c_deg->add_option("--format", deg.format, "csv | json")->capture_default_str();
  c_deg->add_option("--out", deg.out, "Write the report here instead of stdout");

  CoeffArgs coeff;
  auto* c_coeff = app.add_subcommand("coeff", "Expected ascent coefficient on grad p, per formulation");
  c_coeff->add_option("--p", coeff.p, "Success probability")->capture_default_str();
  c_coeff->add_option("--g", coeff.g, "Group size")->capture_default_str();
  c_coeff->add_option("--formulation", coeff.formulation, "mean | drgrpo | sign | tasa | all")->capture_default_str();

  TheoremArgs thm;
  auto* c_thm = app.add_subcommand("theoremcheck", "All-fail gradient closed form against K^G enumeration");
  c_thm->add_option("--k", thm.k, "Completions per policy")->capture_default_str();
  c_thm->add_option("--g", thm.g, "Group size")->capture_default_str();
  c_thm->add_option("--trials", thm.trials, "Random policies")->capture_default_str();
  c_thm->add_option("--seed", thm.seed, "RNG seed")->capture_default_str();
  c_thm->add_option("--c", thm.c, "Negative advantage magnitude")->capture_default_str();
  c_thm->add_option("--tol", thm.tol, "Max-norm tolerance")->capture_default_str();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Tabular-policy training runs");
  auto bind = [&](const std::string& name, auto& field, const std::string& help) {
    sim.opts[name] = c_sim->add_option(name, field, help)->capture_default_str();
  };
  bind("--prompts", sim.config.num_prompts, "Number of prompts");
  bind("--k", sim.config.completions, "Completions per prompt");
  bind("--correct", sim.config.correct_per_prompt, "Correct completions per prompt");
  bind("--g", sim.config.group_size, "Group size");
  bind("--steps", sim.config.steps, "Optimizer steps");
  bind("--lr", sim.config.learning_rate, "SGD learning rate");
  bind("--formulation", sim.formulation, "mean | drgrpo | sign | tasa");
  bind("--seed", sim.config.seed, "RNG seed");
  bind("--init", sim.init, "uniform | target | bimodal");
  bind("--init-p", sim.config.init_p, "Starting success probability for target/bimodal");
  bind("--zero-frac", sim.config.bimodal_zero_frac, "bimodal: share of prompts pinned near p=0");
  bind("--one-frac", sim.config.bimodal_one_frac, "bimodal: share of prompts pinned near p=1");
  bind("--endpoint-offset", sim.config.endpoint_offset, "bimodal: logit gap of pinned prompts");
  bind("--groups-per-step", sim.config.groups_per_step, "Groups per optimizer step");
  bind("--window", sim.window, "Steps per recorded window");
  c_sim->add_flag("--frozen", sim.config.frozen, "Sample without updating");
  c_sim->add_option("--seeds", sim.seeds, "Run these seeds in parallel (overrides --seed)")->delimiter(',');
  c_sim->add_option("--preset", sim.preset, "starvation: p=0.25 homogeneous start, lr 0.12");
  c_sim->add_option("--trajectory", sim.trajectory, "Per-step CSV output (one file per seed)");
  c_sim->add_option("--group-log", sim.group_log, "Group log JSONL output (one file per seed)");

  PasskArgs pk;
  auto* c_pk = app.add_subcommand("passk", "Unbiased pass@k estimates");
  c_pk->add_option("--n", pk.n, "Samples drawn");
  c_pk->add_option("--c", pk.c, "Correct samples");
  c_pk->add_option("--k", pk.k, "k");
  c_pk->add_option("--matrix", pk.matrix, "CSV with columns n,c, one row per question");
  c_pk->add_option("--ks", pk.ks, "Comma-separated k values for --matrix")->capture_default_str();

  auto* c_stats = app.add_subcommand("stats", "Hypothesis tests and summaries over per-seed results");
  c_stats->require_subcommand(1, 1);

  PermutationArgs perm;
  auto* c_perm = c_stats->add_subcommand("permutation", "Permutation test on mean difference of two labels");
  c_perm->add_option("--input", perm.input, "Run records CSV (label,seed,accuracy)")->required();
  c_perm->add_option("--a", perm.a, "First label (default: first in file)");
  c_perm->add_option("--b", perm.b, "Second label (default: second in file)");
  c_perm->add_option("--alternative", perm.alternative, "two-sided | greater | less")->capture_default_str();
  c_perm->add_option("--monte-carlo", perm.resamples, "Random resamples instead of exact enumeration");
  c_perm->add_option("--seed", perm.seed, "RNG seed for --monte-carlo")->capture_default_str();

  WelchArgs welch;
  auto* c_welch = c_stats->add_subcommand("welch", "Welch's unequal-variance t-test from summary statistics");
  c_welch->add_option("--mean1", welch.mean1, "Mean of group 1");
  c_welch->add_option("--sd1", welch.sd1, "Std of group 1");
  c_welch->add_option("--n1", welch.n1, "Size of group 1");
  c_welch->add_option("--mean2", welch.mean2, "Mean of group 2");
  c_welch->add_option("--sd2", welch.sd2, "Std of group 2");
  c_welch->add_option("--n2", welch.n2, "Size of group 2");
  c_welch->add_option("--table", welch.table, "Summary CSV with columns label,n,mean,std");
  c_welch->add_option("--a", welch.a, "First label in --table");
  c_welch->add_option("--b", welch.b, "Second label in --table");
  c_welch->add_option("--sd-kind", welch.sd_kind, "population | sample | both")->capture_default_str();

  SummaryArgs summ;
  auto* c_summ = c_stats->add_subcommand("summary", "Per-label mean, median, std, min, max");
  c_summ->add_option("--input", summ.input, "Run records CSV (label,seed,accuracy)")->required();
  c_summ->add_option("--label", summ.label, "Only this label");
  c_summ->add_option("--sd-kind", summ.sd_kind, "population | sample")->capture_default_str();

  ReplayArgs rep;
  auto* c_rep = app.add_subcommand("replay", "Contrastive-pair replay weights and margin loss");
  c_rep->add_option("--tau", rep.config.tau, "Age decay constant")->capture_default_str();
  c_rep->add_option("--ref-coeff", rep.config.ref_coeff, "Reference-margin coefficient")->capture_default_str();
  c_rep->add_option("--lambda-pair", rep.config.lambda_pair, "Replay loss weight")->capture_default_str();
  c_rep->add_option("--clip-lo", rep.config.clip_lo, "Lower weight clip")->capture_default_str();
  c_rep->add_option("--clip-hi", rep.config.clip_hi, "Upper weight clip")->capture_default_str();
  c_rep->add_option("--pairs", rep.pairs, "Pairs CSV with one column per pair field");
  c_rep->add_option("--logp-pos", rep.pair.logp_pos, "Policy log-prob of the positive")->capture_default_str();
  c_rep->add_option("--logp-neg", rep.pair.logp_neg, "Policy log-prob of the negative")->capture_default_str();
  c_rep->add_option("--ref-logp-pos", rep.pair.ref_logp_pos, "Reference log-prob of the positive")
      ->capture_default_str();
  c_rep->add_option("--ref-logp-neg", rep.pair.ref_logp_neg, "Reference log-prob of the negative")
      ->capture_default_str();
  c_rep->add_option("--reward-gap", rep.pair.reward_gap, "Reward difference")->capture_default_str();
  c_rep->add_option("--age-pos", rep.pair.age_pos, "Steps since the positive was archived")->capture_default_str();
  c_rep->add_option("--age-neg", rep.pair.age_neg, "Steps since the negative was archived")->capture_default_str();
  c_rep->add_option("--post-mean", rep.pair.prompt_post_mean, "Posterior mean success of the prompt")
      ->capture_default_str();
  c_rep->add_option("--obs-count", rep.pair.prompt_obs_count, "Observations of the prompt")->capture_default_str();

  PlotArgs plot;
  auto* c_plot = app.add_subcommand("plot", "SVG line or bar chart from CSV columns");
  c_plot->add_option("--input", plot.inputs, "CSV file, or label=file; repeatable")->required();
  c_plot->add_option("--x", plot.x, "x column")->required();
  c_plot->add_option("--y", plot.y, "y column; repeatable")->required();
  c_plot->add_option("--group-by", plot.group_by, "Split rows into series by this column");
  c_plot->add_option("--kind", plot.kind, "line | bar")->capture_default_str();
  c_plot->add_option("--title", plot.title, "Chart title");
  c_plot->add_option("--xlabel", plot.xlabel, "x-axis label (default: x column)");
  c_plot->add_option("--ylabel", plot.ylabel, "y-axis label (default: y column)");
  c_plot->add_option("--out", plot.out, "SVG output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_adv) return cmd_advantage(adv, g, out, err);
    if (*c_deg) return cmd_degeneracy(deg, g, out, err);
    if (*c_coeff) return cmd_coeff(coeff, g, out, err);
    if (*c_thm) return cmd_theoremcheck(thm, g, out, err);
    if (*c_sim) return cmd_simulate(sim, g, out, err);
    if (*c_pk) return cmd_passk(pk, g, out, err);
    if (*c_perm) return cmd_permutation(perm, g, out, err);
    if (*c_welch) return cmd_welch(welch, g, out, err);
    if (*c_summ) return cmd_summary(summ, g, out, err);
    if (*c_rep) return cmd_replay(rep, g, out, err);
    if (*c_plot) return cmd_plot(plot, g, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace gradstarve::cli
