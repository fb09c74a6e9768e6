#pragma once

#include <optional>
#include <string_view>

namespace toolsup {

/// Task families. The first four carry tool supervision; `Qa` is any
/// question answered under an external judge.
enum class TaskKind { Zoom, RotFlip, ReadValue, CompareCount, Qa };

inline std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Zoom: return "zoom";
    case TaskKind::RotFlip: return "rotflip";
    case TaskKind::ReadValue: return "read_value";
    case TaskKind::CompareCount: return "compare_count";
    case TaskKind::Qa: return "qa";
  }
  return "qa";
}

inline std::optional<TaskKind> task_from_string(std::string_view s) {
  if (s == "zoom") return TaskKind::Zoom;
  if (s == "rotflip") return TaskKind::RotFlip;
  if (s == "read_value" || s == "read-value") return TaskKind::ReadValue;
  if (s == "compare_count" || s == "compare-count") return TaskKind::CompareCount;
  if (s == "qa") return TaskKind::Qa;
  return std::nullopt;
}

/// Synthetic chart tasks are scored numerically instead of by a judge.
inline bool is_synthetic_chart(TaskKind kind) {
  return kind == TaskKind::ReadValue || kind == TaskKind::CompareCount;
}

}  // namespace toolsup
