#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "toolsup/error.hpp"
#include "toolsup/stats.hpp"

namespace toolsup::stats {
namespace {

std::vector<LogEntry> fixture_log() {
  std::ifstream in(FIXTURES_DIR "/stats_log.jsonl");
  return read_log(in);
}

TEST(Stats, CraftedLogSummary) {
  const auto report = usage_report(fixture_log());
  const auto& all = report.overall;
  EXPECT_EQ(all.samples, 3u);
  EXPECT_EQ(all.calls, 4u);
  EXPECT_DOUBLE_EQ(all.mean_calls(), 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(all.composite_ratio(), 1.0 / 3.0);
  const auto fr = all.fractions();
  EXPECT_DOUBLE_EQ(fr.at("image_zoom_in_tool"), 0.75);
  EXPECT_DOUBLE_EQ(fr.at("image_rotate_tool"), 0.25);
  ASSERT_EQ(report.groups.size(), 2u);
  EXPECT_DOUBLE_EQ(report.groups.at("charts").mean_calls(), 2.0);
  EXPECT_DOUBLE_EQ(report.groups.at("charts").composite_ratio(), 0.5);
  EXPECT_FALSE(report.groups.at("docs").distribution_defined());
  EXPECT_TRUE(report.groups.at("docs").fractions().empty());
}

TEST(Stats, ExecutedOnlyDropsSchemaFailures) {
  const auto report = usage_report(fixture_log(), true);
  EXPECT_EQ(report.overall.calls, 3u);
  EXPECT_DOUBLE_EQ(report.overall.fractions().at("image_zoom_in_tool"), 2.0 / 3.0);
}

TEST(Stats, CsvAndTable) {
  const auto report = usage_report(fixture_log());
  std::ostringstream csv;
  write_report_csv(csv, report);
  std::istringstream lines(csv.str());
  std::string header, charts, docs, all;
  std::getline(lines, header);
  std::getline(lines, charts);
  std::getline(lines, docs);
  std::getline(lines, all);
  EXPECT_EQ(header,
            "group,samples,mean_tool_calls,composite_ratio,zoom,rotate,flip,draw_hline,draw_vline,mark_points,other");
  EXPECT_EQ(all, "all,3,1.3333,0.3333,0.7500,0.2500,0.0000,0.0000,0.0000,0.0000,0.0000");
  EXPECT_EQ(docs, "docs,1,0.0000,0.0000,,,,,,,");
  std::ostringstream table;
  write_report_table(table, report);
  EXPECT_NE(table.str().find("charts"), std::string::npos);
}

TEST(Stats, EmptyAndUndefined) {
  std::istringstream empty("\n\n");
  const auto report = usage_report(read_log(empty));
  EXPECT_TRUE(report.empty_log());
  EXPECT_EQ(report.overall.mean_calls(), 0.0);
  std::ostringstream table;
  write_report_table(table, report);
  EXPECT_NE(table.str().find("(empty log)"), std::string::npos);
  EXPECT_EQ(report.to_json()["empty_log"], true);
}

TEST(Stats, UnknownToolsCountAsOther) {
  std::istringstream in(
      R"({"id":"x","trace":"<think>t</think><tool_call>{\"name\":\"image_blur_tool\",\"arguments\":{}}</tool_call><think>t</think><answer>1</answer>"})"
      "\n");
  const auto report = usage_report(read_log(in));
  EXPECT_EQ(report.overall.calls, 1u);
  std::ostringstream csv;
  write_report_csv(csv, report);
  EXPECT_NE(csv.str().find("0.0000,1.0000\n"), std::string::npos);
  std::istringstream again(in.str());
  EXPECT_EQ(usage_report(read_log(again), true).overall.calls, 0u);
}

TEST(Stats, MalformedLineNamesLineNumber) {
  std::istringstream in("{\"trace\":\"x\"}\nnot json\n");
  try {
    read_log(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedRequest);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Stats, AcceptsScoreRequestsAsLogs) {
  std::istringstream in(R"({"id":"r","task":"zoom","trajectory":"<think>t</think><answer>1</answer>"})"
                        "\n");
  const auto log = read_log(in);
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log[0].group, "zoom");
}

TEST(Stats, MergeMatchesCombinedAdd) {
  ToolUsage a, b, both;
  a.add({"x", "y"});
  b.add({"x"});
  both.add({"x", "y"});
  both.add({"x"});
  a.merge(b);
  EXPECT_EQ(a.samples, both.samples);
  EXPECT_EQ(a.calls, both.calls);
  EXPECT_EQ(a.composite, both.composite);
  EXPECT_EQ(a.per_tool, both.per_tool);
}

}  // namespace
}  // namespace toolsup::stats
