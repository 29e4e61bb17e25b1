#include "gradstarve/logio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace gradstarve {

namespace {

using json = nlohmann::json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& text, std::size_t line, const char* what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ValidationError("line " + std::to_string(line) + ": cannot parse " + what + " '" + text + "'");
  }
  return value;
}

std::int64_t parse_int(const std::string& text, std::size_t line, const char* what) {
  std::size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ValidationError("line " + std::to_string(line) + ": cannot parse " + what + " '" + text + "'");
  }
  return value;
}

// Returns the record or an error message.
GroupLogRecord parse_group_record(const std::string& line, std::string& error) {
  GroupLogRecord record;
  json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) {
    error = "malformed JSON";
    return record;
  }
  if (!doc.is_object()) {
    error = "expected a JSON object";
    return record;
  }
  for (const char* key : {"step", "prompt_id", "rewards"}) {
    if (!doc.contains(key)) {
      error = std::string("missing key '") + key + "'";
      return record;
    }
  }
  const auto& step = doc["step"];
  if (!step.is_number_integer() || step.get<std::int64_t>() < 0) {
    error = "'step' must be a nonnegative integer";
    return record;
  }
  record.step = step.get<std::int64_t>();
  if (!doc["prompt_id"].is_string()) {
    error = "'prompt_id' must be a string";
    return record;
  }
  record.prompt_id = doc["prompt_id"].get<std::string>();
  const auto& rewards = doc["rewards"];
  if (!rewards.is_array() || rewards.empty()) {
    error = "'rewards' must be a nonempty array";
    return record;
  }
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    const auto& r = rewards[i];
    if (!r.is_number_integer() || (r.get<std::int64_t>() != 0 && r.get<std::int64_t>() != 1)) {
      error = "non-binary reward " + r.dump() + " at index " + std::to_string(i);
      return record;
    }
    record.rewards.push_back(static_cast<int>(r.get<std::int64_t>()));
  }
  return record;
}

// Counts bytes as they are written to the wrapped stream.
class CountingWriter {
 public:
  explicit CountingWriter(std::ostream& out) : out_(out) {}
  CountingWriter& operator<<(std::string_view s) {
    out_ << s;
    bytes_ += s.size();
    return *this;
  }
  std::size_t bytes() const { return bytes_; }
  void finish() {
    out_.flush();
    if (!out_) throw std::runtime_error("report sink write failed");
  }

 private:
  std::ostream& out_;
  std::size_t bytes_ = 0;
};

std::string json_escape(const std::string& s) { return json(s).dump(); }

}  // namespace

std::vector<GroupOutcome> IngestResult::groups() const {
  std::vector<GroupOutcome> out;
  out.reserve(records.size());
  for (const auto& r : records) out.emplace_back(r.rewards);
  return out;
}

std::map<std::int64_t, std::vector<std::size_t>> IngestResult::step_index() const {
  std::map<std::int64_t, std::vector<std::size_t>> index;
  for (std::size_t i = 0; i < records.size(); ++i) index[records[i].step].push_back(i);
  return index;
}

std::vector<PromptRollouts> IngestResult::rollouts_by_prompt() const {
  std::vector<PromptRollouts> out;
  std::unordered_map<std::string, std::size_t> position;
  for (const auto& r : records) {
    auto [it, inserted] = position.try_emplace(r.prompt_id, out.size());
    if (inserted) out.push_back({r.prompt_id, {}});
    auto& pooled = out[it->second].rewards;
    pooled.insert(pooled.end(), r.rewards.begin(), r.rewards.end());
  }
  return out;
}

IngestResult ingest_group_log(std::istream& in, bool strict) {
  IngestResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::string error;
    auto record = parse_group_record(line, error);
    if (!error.empty()) {
      if (strict) throw ValidationError("line " + std::to_string(line_no) + ": " + error);
      result.errors.push_back({line_no, std::move(error)});
      continue;
    }
    result.records.push_back(std::move(record));
  }
  if (result.records.empty() && result.errors.empty()) throw ValidationError("group log is empty");
  return result;
}

std::string format_group_record(const GroupLogRecord& record) {
  std::string out = "{\"step\":" + std::to_string(record.step) + ",\"prompt_id\":" + json_escape(record.prompt_id) +
                    ",\"rewards\":[";
  for (std::size_t i = 0; i < record.rewards.size(); ++i) {
    if (i > 0) out += ',';
    out += record.rewards[i] ? '1' : '0';
  }
  out += "]}";
  return out;
}

void write_group_log(const std::vector<GroupLogRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << format_group_record(r) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("group log sink write failed");
}

std::vector<RunRecord> read_run_records(std::istream& in) {
  std::vector<RunRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected label,seed,accuracy");
    }
    if (fields[0] == "label") continue;  // header
    RunRecord record{fields[0], parse_int(fields[1], line_no, "seed"), parse_double(fields[2], line_no, "accuracy")};
    record.validate();
    records.push_back(std::move(record));
  }
  if (records.empty()) throw ValidationError("run-record file has no rows");
  return records;
}

void write_run_records(const std::vector<RunRecord>& records, std::ostream& out) {
  out << "label,seed,accuracy\n";
  for (const auto& r : records) out << r.label << ',' << r.seed << ',' << format_real(r.accuracy, 6) << '\n';
}

PromptDistribution read_distribution(std::istream& in) {
  std::vector<PromptProfile> profiles;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) throw ValidationError("line " + std::to_string(line_no) + ": expected prompt_id,p,weight");
    if (fields[0] == "prompt_id") continue;
    PromptProfile profile{fields[0], parse_double(fields[1], line_no, "p"), parse_double(fields[2], line_no, "weight")};
    profile.validate();
    profiles.push_back(std::move(profile));
  }
  if (profiles.empty()) throw ValidationError("distribution file has no rows");
  return PromptDistribution(std::move(profiles));
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::numeric_column(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.push_back(parse_double(rows[r][c], r + 2, name.c_str()));
  }
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split_csv_line(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                            " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw ValidationError("CSV input is empty");
  return table;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw ValidationError("unknown report format '" + name + "'; expected csv or json");
}

std::string format_real(double value, int significant_digits) {
  if (!std::isfinite(value)) throw NumericError("cannot serialize a non-finite value");
  if (value == 0.0) value = 0.0;  // drop the sign of negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant_digits, value);
  return buf;
}

std::size_t write_report(const ReportTable& table, ReportFormat format, std::ostream& out) {
  std::vector<bool> integer(table.columns.size(), false);
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    integer[c] = std::find(table.integer_columns.begin(), table.integer_columns.end(), table.columns[c]) !=
                 table.integer_columns.end();
  }
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw ValidationError("report row width does not match header");
  }
  const int digits = format == ReportFormat::Json ? 17 : 6;
  auto cell = [&](double v, std::size_t c) {
    if (integer[c]) {
      if (!std::isfinite(v)) throw NumericError("cannot serialize a non-finite value");
      return std::to_string(std::llround(v));
    }
    return format_real(v, digits);
  };

  CountingWriter w(out);
  if (format == ReportFormat::Csv) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (c > 0) w << ",";
      w << table.columns[c];
    }
    w << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c > 0) w << ",";
        w << cell(row[c], c);
      }
      w << "\n";
    }
  } else {
    w << "[";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      w << (r == 0 ? "\n  {" : ",\n  {");
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c > 0) w << ", ";
        w << json_escape(table.columns[c]) << ": " << cell(table.rows[r][c], c);
      }
      w << "}";
    }
    w << (table.rows.empty() ? "]\n" : "\n]\n");
  }
  w.finish();
  return w.bytes();
}

ReportTable to_table(const DegeneracyReport& report) {
  ReportTable table;
  table.columns = {"d_real", "d_iid", "variance_bound", "mean_p", "var_p", "endpoint_mass_zero",
                   "endpoint_mass_one", "group_size"};
  table.integer_columns = {"group_size"};
  table.rows.push_back({report.d_real, report.d_iid, report.variance_bound, report.mean_p, report.var_p,
                        report.endpoint_mass_zero, report.endpoint_mass_one, static_cast<double>(report.group_size)});
  return table;
}

ReportTable to_table(const EmpiricalDegeneracy& report) {
  ReportTable table;
  table.columns = {"degenerate_frac", "allfail_frac", "allpass_frac", "groups", "allfail", "allpass"};
  table.integer_columns = {"groups", "allfail", "allpass"};
  table.rows.push_back({report.degenerate_frac, report.allfail_frac, report.allpass_frac,
                        static_cast<double>(report.groups), static_cast<double>(report.allfail),
                        static_cast<double>(report.allpass)});
  return table;
}

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "line") return PlotKind::Line;
  if (name == "bar") return PlotKind::Bar;
  throw ValidationError("unknown plot kind '" + name + "'; expected line or bar");
}

}  // namespace gradstarve
