#include "toolsup/trace.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

#include "toolsup/error.hpp"

namespace toolsup::trace {

using nlohmann::json;

namespace {

enum class Tag { Think, ToolCall, Answer, ToolResponse };

struct TagSpec {
  Tag tag;
  std::string_view open;
  std::string_view close;
};

constexpr std::array<TagSpec, 4> kTags{{
    {Tag::Think, "<think>", "</think>"},
    {Tag::ToolCall, "<tool_call>", "</tool_call>"},
    {Tag::Answer, "<answer>", "</answer>"},
    {Tag::ToolResponse, "<tool_response>", "</tool_response>"},
}};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Position of the next opening or closing tag at or after `from`.
std::size_t next_tag(std::string_view text, std::size_t from) {
  std::size_t best = std::string_view::npos;
  for (const auto& spec : kTags) {
    best = std::min(best, text.find(spec.open, from));
    best = std::min(best, text.find(spec.close, from));
  }
  return best;
}

std::size_t next_open_tag(std::string_view text, std::size_t from) {
  std::size_t best = std::string_view::npos;
  for (const auto& spec : kTags) best = std::min(best, text.find(spec.open, from));
  return best;
}

std::optional<double> parse_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<long> parse_image_reference(std::string_view s) {
  std::string lowered;
  for (char c : s) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  std::string_view rest = lowered;
  if (rest.starts_with("image")) {
    rest.remove_prefix(5);
  } else if (rest.starts_with("img")) {
    rest.remove_prefix(3);
  } else {
    return std::nullopt;
  }
  rest = trim(rest);
  if (!rest.empty() && rest.front() == '#') rest = trim(rest.substr(1));
  if (rest.empty() || !std::all_of(rest.begin(), rest.end(),
                                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return std::nullopt;
  }
  long value = 0;
  const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), value);
  if (ec != std::errc() || ptr != rest.data() + rest.size()) return std::nullopt;
  return value;
}

class TurnBuilder {
 public:
  void think(std::string body) {
    if (current_ && (current_->think || current_->has_action())) flush();
    if (!current_) current_.emplace();
    current_->think = std::move(body);
  }

  // Returns the violation implied by where the action landed, if any.
  std::optional<ViolationKind> action(Tag tag, std::string body) {
    std::optional<ViolationKind> problem;
    if (current_ && current_->has_action()) {
      flush();
      problem = ViolationKind::MultipleActions;
    }
    if (!current_) {
      current_.emplace();
      if (!problem) problem = ViolationKind::MissingThink;
    }
    if (tag == Tag::ToolCall) {
      current_->tool_call = std::move(body);
    } else {
      current_->answer = std::move(body);
    }
    return problem;
  }

  std::size_t index() const { return turns_.size(); }

  std::vector<TraceTurn> finish() {
    flush();
    return std::move(turns_);
  }

 private:
  void flush() {
    if (current_) turns_.push_back(std::move(*current_));
    current_.reset();
  }

  std::vector<TraceTurn> turns_;
  std::optional<TraceTurn> current_;
};

}  // namespace

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::UnclosedTag: return "unclosed_tag";
    case ViolationKind::UnexpectedClosingTag: return "unexpected_closing_tag";
    case ViolationKind::StrayText: return "stray_text";
    case ViolationKind::InvalidToolCallJson: return "invalid_tool_call_json";
    case ViolationKind::ToolCallSchema: return "tool_call_schema";
    case ViolationKind::MissingThink: return "missing_think";
    case ViolationKind::MissingAction: return "missing_action";
    case ViolationKind::MultipleActions: return "multiple_actions";
    case ViolationKind::AnswerNotFinal: return "answer_not_final";
    case ViolationKind::MissingAnswer: return "missing_answer";
  }
  return "unknown";
}

AnswerPayload parse_answer(std::string_view raw) {
  AnswerPayload payload{std::string(raw), FreeText{}};
  const std::string_view body = trim(raw);

  if (!body.empty() && body.front() == '{') {
    const json parsed = json::parse(body, nullptr, false);
    if (!parsed.is_discarded() && parsed.is_object() && !parsed.empty()) {
      ElementIndexMap map;
      bool all_indices = true;
      for (const auto& [key, value] : parsed.items()) {
        if (!value.is_number_integer() || value.get<long>() < 0) {
          all_indices = false;
          break;
        }
        map.indices[key] = value.get<long>();
      }
      if (all_indices) {
        payload.value = std::move(map);
        return payload;
      }
    }
  }
  if (auto index = parse_image_reference(body)) {
    payload.value = ImageIndex{*index};
    return payload;
  }
  if (auto number = parse_decimal(body)) {
    payload.value = Numeric{*number};
  }
  return payload;
}

std::size_t Trajectory::tool_call_count() const {
  return static_cast<std::size_t>(
      std::count_if(turns.begin(), turns.end(), [](const TraceTurn& t) { return t.tool_call.has_value(); }));
}

std::vector<tools::ToolCall> Trajectory::tool_calls() const {
  std::vector<tools::ToolCall> calls;
  for (const auto& t : turns) {
    if (t.call) calls.push_back(*t.call);
  }
  return calls;
}

ParseResult parse_trace(std::string_view text) {
  ParseResult result;
  auto& violations = result.violations;
  TurnBuilder builder;

  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos >= text.size()) break;

    const TagSpec* open = nullptr;
    const TagSpec* close = nullptr;
    for (const auto& spec : kTags) {
      if (text.substr(pos).starts_with(spec.open)) open = &spec;
      if (text.substr(pos).starts_with(spec.close)) close = &spec;
    }

    if (close) {
      violations.push_back({ViolationKind::UnexpectedClosingTag, builder.index(),
                            std::string(close->close)});
      pos += close->close.size();
      continue;
    }
    if (!open) {
      const std::size_t end = std::min(next_tag(text, pos), text.size());
      violations.push_back({ViolationKind::StrayText, builder.index(),
                            std::string(trim(text.substr(pos, end - pos)))});
      pos = end;
      continue;
    }

    const std::size_t body_start = pos + open->open.size();
    const std::size_t close_at = text.find(open->close, body_start);
    const std::size_t reopen_at = next_open_tag(text, body_start);
    std::string body;
    if (close_at == std::string_view::npos || reopen_at < close_at) {
      const std::size_t end = std::min(reopen_at, text.size());
      body = std::string(text.substr(body_start, end - body_start));
      violations.push_back({ViolationKind::UnclosedTag, builder.index(), std::string(open->open)});
      pos = end;
    } else {
      body = std::string(text.substr(body_start, close_at - body_start));
      pos = close_at + open->close.size();
    }

    switch (open->tag) {
      case Tag::Think:
        builder.think(std::move(body));
        break;
      case Tag::ToolCall:
      case Tag::Answer:
        if (auto problem = builder.action(open->tag, std::move(body))) {
          violations.push_back({*problem, builder.index(), {}});
        }
        break;
      case Tag::ToolResponse:
        break;  // environment output interleaved with the model's turns
    }
  }

  auto& traj = result.trajectory;
  traj.turns = builder.finish();

  for (std::size_t i = 0; i < traj.turns.size(); ++i) {
    auto& turn = traj.turns[i];
    if (!turn.has_action()) violations.push_back({ViolationKind::MissingAction, i, {}});
    if (turn.tool_call) {
      const json body = json::parse(*turn.tool_call, nullptr, false);
      if (body.is_discarded() || !body.is_object()) {
        violations.push_back({ViolationKind::InvalidToolCallJson, i, std::string(trim(*turn.tool_call))});
      } else {
        try {
          turn.call = tools::ToolCall::from_json(body);
        } catch (const Error& e) {
          violations.push_back({ViolationKind::ToolCallSchema, i, e.what()});
        }
      }
    }
    if (turn.answer && i + 1 < traj.turns.size()) {
      violations.push_back({ViolationKind::AnswerNotFinal, i, {}});
    }
  }

  if (!traj.turns.empty() && traj.turns.back().answer) {
    traj.answer = parse_answer(*traj.turns.back().answer);
  } else {
    violations.push_back({ViolationKind::MissingAnswer,
                          traj.turns.empty() ? 0 : traj.turns.size() - 1, {}});
  }

  std::stable_sort(violations.begin(), violations.end(),
                   [](const Violation& a, const Violation& b) { return a.turn < b.turn; });
  return result;
}

std::string serialize_trace(const Trajectory& trajectory) {
  std::string out;
  for (std::size_t i = 0; i < trajectory.turns.size(); ++i) {
    const auto& turn = trajectory.turns[i];
    if (i > 0) out += '\n';
    if (turn.think) out += "<think>" + *turn.think + "</think>";
    if (turn.tool_call) out += "<tool_call>" + *turn.tool_call + "</tool_call>";
    if (turn.answer) out += "<answer>" + *turn.answer + "</answer>";
  }
  return out;
}

AnswerStates extract_answer_state(const Trajectory& trajectory, std::size_t lineage_length,
                                  TaskKind task) {
  AnswerStates states;
  if (lineage_length == 0) return states;

  auto add = [&](const std::string& what, long index) {
    if (index >= 0 && static_cast<std::size_t>(index) < lineage_length) {
      states.indices.emplace_back(static_cast<std::size_t>(index));
    } else {
      states.indices.emplace_back(std::nullopt);
      states.out_of_lineage.push_back(what + " -> " + std::to_string(index));
    }
  };

  if (trajectory.answer) {
    const auto& value = trajectory.answer->value;
    if (const auto* map = std::get_if<ElementIndexMap>(&value)) {
      for (const auto& [element, index] : map->indices) add(element, index);
      return states;
    }
    if (const auto* image = std::get_if<ImageIndex>(&value)) {
      add("image", image->index);
      return states;
    }
    if (const auto* number = std::get_if<Numeric>(&value);
        number && task == TaskKind::RotFlip && number->value >= 0 &&
        number->value == std::floor(number->value)) {
      add("image", static_cast<long>(number->value));
      return states;
    }
  }
  states.indices.emplace_back(lineage_length - 1);
  return states;
}

double format_reward(const Trajectory& trajectory, const std::vector<Violation>& violations,
                     double w_fmt) {
  if (!violations.empty() || trajectory.turns.empty()) return 0.0;
  for (std::size_t i = 0; i < trajectory.turns.size(); ++i) {
    const auto& turn = trajectory.turns[i];
    const bool last = i + 1 == trajectory.turns.size();
    if (!turn.think) return 0.0;
    if (turn.tool_call.has_value() == turn.answer.has_value()) return 0.0;
    if (turn.tool_call && !turn.call) return 0.0;
    if (turn.answer && !last) return 0.0;
  }
  if (!trajectory.turns.back().answer || !trajectory.answer) return 0.0;
  return w_fmt;
}

}  // namespace toolsup::trace
