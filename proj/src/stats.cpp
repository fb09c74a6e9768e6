#include "toolsup/stats.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "toolsup/error.hpp"
#include "toolsup/toolbox.hpp"

namespace toolsup::stats {

using nlohmann::json;

namespace {

struct Column {
  std::string header;
  std::string wire;
};

const std::vector<Column>& tool_columns() {
  static const std::vector<Column> cols = [] {
    std::vector<Column> c;
    const std::array<std::string_view, 6> short_names{"zoom", "rotate", "flip", "draw_hline", "draw_vline", "mark_points"};
    for (std::size_t i = 0; i < tools::kAllTools.size(); ++i) {
      c.push_back({std::string(short_names[i]), std::string(tools::tool_name(tools::kAllTools[i]))});
    }
    return c;
  }();
  return cols;
}

std::vector<std::string> row_cells(const std::string& group, const ToolUsage& u) {
  std::vector<std::string> cells{group, std::to_string(u.samples), fmt::format("{:.4f}", u.mean_calls()),
                                 fmt::format("{:.4f}", u.composite_ratio())};
  const auto fr = u.fractions();
  double known = 0.0;
  for (const auto& col : tool_columns()) {
    const auto it = fr.find(col.wire);
    const double v = it == fr.end() ? 0.0 : it->second;
    known += v;
    cells.push_back(u.distribution_defined() ? fmt::format("{:.4f}", v) : "");
  }
  cells.push_back(u.distribution_defined() ? fmt::format("{:.4f}", std::max(0.0, 1.0 - known)) : "");
  return cells;
}

std::vector<std::string> header_cells() {
  std::vector<std::string> h{"group", "samples", "mean_tool_calls", "composite_ratio"};
  for (const auto& col : tool_columns()) h.push_back(col.header);
  h.push_back("other");
  return h;
}

std::vector<std::vector<std::string>> report_rows(const UsageReport& report) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& [group, usage] : report.groups) rows.push_back(row_cells(group, usage));
  rows.push_back(row_cells("all", report.overall));
  return rows;
}

json usage_json(const ToolUsage& u) {
  json j = {{"samples", u.samples},
            {"calls", u.calls},
            {"mean_tool_calls", u.mean_calls()},
            {"composite_ratio", u.composite_ratio()},
            {"distribution_defined", u.distribution_defined()},
            {"per_tool_calls", u.per_tool}};
  j["per_tool_fraction"] = u.fractions();
  return j;
}

}  // namespace

std::vector<LogEntry> read_log(std::istream& in) {
  std::vector<LogEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, false);
    const char* key = j.is_object() && j.contains("trace") ? "trace" : "trajectory";
    if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
      throw Error(ErrorCode::MalformedRequest, fmt::format("log line {}: expected an object with a 'trace' string", line_no));
    }
    LogEntry e;
    e.id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : std::to_string(line_no);
    if (j.contains("group") && j["group"].is_string()) {
      e.group = j["group"].get<std::string>();
    } else if (j.contains("task") && j["task"].is_string()) {
      e.group = j["task"].get<std::string>();
    }
    e.trajectory = trace::parse_trace(j[key].get<std::string>()).trajectory;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::string> call_names(const trace::Trajectory& trajectory, bool executed_only) {
  std::vector<std::string> names;
  for (const auto& turn : trajectory.turns) {
    if (!turn.tool_call) continue;
    if (executed_only) {
      if (turn.call) names.emplace_back(tools::tool_name(turn.call->name));
      continue;
    }
    const json body = json::parse(*turn.tool_call, nullptr, false);
    if (body.is_object() && body.contains("name") && body["name"].is_string()) {
      names.push_back(body["name"].get<std::string>());
    }
  }
  return names;
}

void ToolUsage::add(const std::vector<std::string>& names) {
  ++samples;
  calls += names.size();
  for (const auto& n : names) ++per_tool[n];
  if (std::set<std::string>(names.begin(), names.end()).size() >= 2) ++composite;
}

void ToolUsage::merge(const ToolUsage& other) {
  samples += other.samples;
  calls += other.calls;
  composite += other.composite;
  for (const auto& [name, n] : other.per_tool) per_tool[name] += n;
}

double ToolUsage::mean_calls() const {
  return samples == 0 ? 0.0 : static_cast<double>(calls) / static_cast<double>(samples);
}

double ToolUsage::composite_ratio() const {
  return samples == 0 ? 0.0 : static_cast<double>(composite) / static_cast<double>(samples);
}

std::map<std::string, double> ToolUsage::fractions() const {
  std::map<std::string, double> out;
  if (calls == 0) return out;
  for (const auto& [name, n] : per_tool) out[name] = static_cast<double>(n) / static_cast<double>(calls);
  return out;
}

json UsageReport::to_json() const {
  json groups_json = json::object();
  for (const auto& [g, u] : groups) groups_json[g] = usage_json(u);
  return {{"empty_log", empty_log()}, {"overall", usage_json(overall)}, {"groups", std::move(groups_json)}};
}

UsageReport usage_report(const std::vector<LogEntry>& logs, bool executed_only) {
  UsageReport report;
  for (const auto& e : logs) {
    const auto names = call_names(e.trajectory, executed_only);
    report.overall.add(names);
    report.groups[e.group].add(names);
  }
  return report;
}

void write_report_csv(std::ostream& out, const UsageReport& report) {
  const auto join = [](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
    return s;
  };
  out << join(header_cells()) << '\n';
  for (const auto& row : report_rows(report)) out << join(row) << '\n';
}

void write_report_table(std::ostream& out, const UsageReport& report) {
  auto rows = report_rows(report);
  rows.insert(rows.begin(), header_cells());
  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (i) line += "  ";
      line += i == 0 ? fmt::format("{:<{}}", rows[r][i], widths[i]) : fmt::format("{:>{}}", rows[r][i], widths[i]);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : widths) total += w;
      out << std::string(total + 2 * (widths.size() - 1), '-') << '\n';
    }
  }
  if (report.empty_log()) out << "(empty log)\n";
  else if (!report.overall.distribution_defined()) out << "(no tool calls: distribution undefined)\n";
}

}  // namespace toolsup::stats
