#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolsup/trace.hpp"

namespace toolsup::stats {

struct LogEntry {
  std::string id;
  std::string group = "all";
  trace::Trajectory trajectory;
};

/// One JSON object per line: {"id", "group", "trace"}. "trajectory" is
/// accepted for "trace" and "task" for "group", so score requests double as
/// logs. Blank lines are skipped; other malformed lines throw
/// Error{MalformedRequest} naming the line number.
std::vector<LogEntry> read_log(std::istream& in);

/// Tool names in call order. By default every tool_call whose body parses to
/// an object with a string "name" counts; `executed_only` keeps only calls
/// that pass the argument schema.
std::vector<std::string> call_names(const trace::Trajectory& trajectory, bool executed_only = false);

struct ToolUsage {
  std::size_t samples = 0;
  std::size_t calls = 0;
  std::size_t composite = 0;  // samples with >= 2 distinct tool names
  std::map<std::string, std::size_t> per_tool;

  void add(const std::vector<std::string>& names);
  void merge(const ToolUsage& other);

  double mean_calls() const;
  double composite_ratio() const;
  bool distribution_defined() const { return calls > 0; }
  /// Per-tool share of all calls; empty when no call exists.
  std::map<std::string, double> fractions() const;
};

struct UsageReport {
  ToolUsage overall;
  std::map<std::string, ToolUsage> groups;
  bool empty_log() const { return overall.samples == 0; }

  nlohmann::json to_json() const;
};

UsageReport usage_report(const std::vector<LogEntry>& logs, bool executed_only = false);

/// group,samples,mean_tool_calls,composite_ratio,<one column per tool>,other
/// with an "all" row last. Tool shares are empty when undefined.
void write_report_csv(std::ostream& out, const UsageReport& report);
/// The same columns as an aligned text table.
void write_report_table(std::ostream& out, const UsageReport& report);

}  // namespace toolsup::stats
