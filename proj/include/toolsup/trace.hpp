#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "toolsup/task.hpp"
#include "toolsup/toolbox.hpp"

namespace toolsup::trace {

enum class ViolationKind {
  UnclosedTag,           // <tag> without its closing tag
  UnexpectedClosingTag,  // </tag> with nothing open
  StrayText,             // non-whitespace text outside any tag
  InvalidToolCallJson,   // tool_call body is not a JSON object
  ToolCallSchema,        // JSON parsed but fails the tool argument schema
  MissingThink,          // a turn whose action has no preceding <think>
  MissingAction,         // <think> not followed by a tool call or answer
  MultipleActions,       // two actions without a <think> between them
  AnswerNotFinal,        // an answer followed by further turns
  MissingAnswer,         // the final turn does not answer
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::size_t turn = 0;  // 0-based turn the violation belongs to
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct FreeText {
  friend bool operator==(const FreeText&, const FreeText&) = default;
};
struct Numeric {
  double value = 0.0;
  friend bool operator==(const Numeric&, const Numeric&) = default;
};
struct ElementIndexMap {
  std::map<std::string, long> indices;
  friend bool operator==(const ElementIndexMap&, const ElementIndexMap&) = default;
};
struct ImageIndex {
  long index = 0;
  friend bool operator==(const ImageIndex&, const ImageIndex&) = default;
};

struct AnswerPayload {
  std::string raw;
  std::variant<FreeText, Numeric, ElementIndexMap, ImageIndex> value;

  friend bool operator==(const AnswerPayload&, const AnswerPayload&) = default;
};

/// Classifies an answer body: a JSON object of non-negative integers is an
/// element map, "image N" an image index, a finite decimal a number, and
/// anything else free text.
AnswerPayload parse_answer(std::string_view raw);

struct TraceTurn {
  std::optional<std::string> think;
  std::optional<std::string> tool_call;  // raw body between the tags
  std::optional<std::string> answer;     // raw body between the tags
  std::optional<tools::ToolCall> call;   // set when the body validated

  bool has_action() const { return tool_call.has_value() || answer.has_value(); }

  friend bool operator==(const TraceTurn& a, const TraceTurn& b) {
    return a.think == b.think && a.tool_call == b.tool_call && a.answer == b.answer;
  }
};

struct Trajectory {
  std::vector<TraceTurn> turns;
  std::optional<AnswerPayload> answer;  // only when the final turn answers

  /// Every <tool_call> segment, valid or not.
  std::size_t tool_call_count() const;
  /// Schema-valid calls in order.
  std::vector<tools::ToolCall> tool_calls() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct ParseResult {
  Trajectory trajectory;
  std::vector<Violation> violations;
};

/// Total: every input yields a trajectory; malformations become violations.
ParseResult parse_trace(std::string_view text);

/// Canonical text form; parse_trace(serialize_trace(t)).trajectory == t for
/// well-formed trajectories.
std::string serialize_trace(const Trajectory& trajectory);

/// Lineage indices the answer refers to. Element maps give one entry per
/// element (in key order); entries outside the lineage are nullopt.
struct AnswerStates {
  std::vector<std::optional<std::size_t>> indices;
  std::vector<std::string> out_of_lineage;  // descriptions of rejected references

  bool valid() const { return out_of_lineage.empty() && !indices.empty(); }
};

/// For rotate/flip tasks a bare non-negative integer answer names an image.
/// Answers that reference no image fall back to the last lineage index.
AnswerStates extract_answer_state(const Trajectory& trajectory, std::size_t lineage_length,
                                  TaskKind task);

inline constexpr double kDefaultFormatWeight = 0.5;

/// w_fmt when the trace is fully well formed, otherwise 0.
double format_reward(const Trajectory& trajectory, const std::vector<Violation>& violations,
                     double w_fmt = kDefaultFormatWeight);

}  // namespace toolsup::trace
