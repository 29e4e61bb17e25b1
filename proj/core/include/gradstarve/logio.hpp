#pragma once

// File formats:
//
//   group log (JSONL)   {"step":0,"prompt_id":"p1","rewards":[0,1,0,0]}  one group per line
//   trajectory (CSV)    step,mean_reward,allfail_frac,allpass_frac,mean_p
//   run records (CSV)   label,seed,accuracy
//   distribution (CSV)  prompt_id,p,weight
//
// Reports serialize reals with 17 significant digits in JSON and 6 in CSV.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gradstarve/core.hpp"
#include "gradstarve/degeneracy.hpp"

namespace gradstarve {

struct GroupLogRecord {
  std::int64_t step = 0;
  std::string prompt_id;
  std::vector<int> rewards;

  friend bool operator==(const GroupLogRecord&, const GroupLogRecord&) = default;
};

struct IngestError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct IngestResult {
  std::vector<GroupLogRecord> records;
  std::vector<IngestError> errors;

  std::vector<GroupOutcome> groups() const;
  /// Record indices grouped by step.
  std::map<std::int64_t, std::vector<std::size_t>> step_index() const;
  /// Rewards pooled per prompt id, in order of first appearance.
  std::vector<PromptRollouts> rollouts_by_prompt() const;
};

/// Parses one JSONL group log. Blank lines are skipped. Lenient mode collects
/// every malformed line; strict mode throws ValidationError on the first one.
/// A stream with no records throws ValidationError in either mode.
IngestResult ingest_group_log(std::istream& in, bool strict = false);

std::string format_group_record(const GroupLogRecord& record);
void write_group_log(const std::vector<GroupLogRecord>& records, std::ostream& out);

std::vector<RunRecord> read_run_records(std::istream& in);
void write_run_records(const std::vector<RunRecord>& records, std::ostream& out);

PromptDistribution read_distribution(std::istream& in);

/// Headed CSV with string cells; no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header; throws ValidationError when absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);

/// Column-oriented numeric report.
struct ReportTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> integer_columns;  // printed without exponent or decimals
};

enum class ReportFormat { Csv, Json };

ReportFormat parse_report_format(const std::string& name);

/// Deterministic serialization. Returns bytes written. Throws NumericError on
/// non-finite values and std::runtime_error when the sink fails.
std::size_t write_report(const ReportTable& table, ReportFormat format, std::ostream& out);

/// %.{digits}g formatting of a finite double.
std::string format_real(double value, int significant_digits);

ReportTable to_table(const DegeneracyReport& report);
ReportTable to_table(const EmpiricalDegeneracy& report);

// Plots ----------------------------------------------------------------------

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

enum class PlotKind { Line, Bar };

PlotKind parse_plot_kind(const std::string& name);

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  double width = 720;
  double height = 440;
};

/// Self-contained SVG with axes, ticks, legend and title. Returns bytes written.
std::size_t render_plot(const std::vector<PlotSeries>& series, PlotKind kind, const PlotOptions& options,
                        std::ostream& out);

}  // namespace gradstarve
