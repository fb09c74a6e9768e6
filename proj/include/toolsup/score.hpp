#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "toolsup/error.hpp"
#include "toolsup/judge.hpp"
#include "toolsup/orientation.hpp"
#include "toolsup/raster.hpp"
#include "toolsup/rewards.hpp"
#include "toolsup/task.hpp"

namespace toolsup::svc {

struct ImageSize {
  int width = 0;
  int height = 0;
};

/// A decoded request.
///
/// Wire form (one JSON object):
///   id            string (required)
///   stage         1 | 2 (required)
///   task          zoom | rotflip | read_value | compare_count | qa
///   trajectory    trace text
///   exactly one image source:
///     image_path (alias "image"): PNG path, relative to the batch base dir
///     image_b64:  inline base64 PNG
///     image_size: [W, H], geometry-only replay
///   initial_orientation  orientation name of the original (default identity)
///   ground_truth  see rewards::ground_truth_from_json; required for stage 1
///   question      text
///   answer        target: number or [numbers] for synthetic charts, else text
///   answer_range  number or [numbers], one per numeric target
///   max_turns     tool-call cap (default 10)
///   config        reward overrides (flat)
struct ScoreRequest {
  std::string id;
  int stage = 1;
  TaskKind task = TaskKind::Qa;
  std::string trajectory;
  std::variant<raster::Image, ImageSize> original{ImageSize{}};
  tools::Orientation initial;
  std::optional<rewards::GroundTruth> gt;
  std::optional<rewards::AnswerTarget> target;
  int max_turns = 10;
  rewards::RewardConfig cfg;
};

struct ScoreContext {
  rewards::RewardConfig defaults;
  rewards::Judge* judge = nullptr;
  std::filesystem::path base_dir = ".";
  bool timing = false;
};

/// Throws Error{MalformedRequest} (or Io for unreadable images).
ScoreRequest parse_request(const nlohmann::json& j, const ScoreContext& ctx);

/// Replays the trace and scores it. Returns {"breakdown", "violations"}.
/// Throws Error on judge failure.
nlohmann::json score_request(const ScoreRequest& req, rewards::Judge* judge);

/// Never throws. Success: {"id", "ok": true, "breakdown", "violations"}
/// (+ "timing_ms" when enabled); failure: {"id", "ok": false,
/// "error": {"code", "message"}}.
nlohmann::json score_one(const nlohmann::json& request, const ScoreContext& ctx);
/// Parses a request line; invalid JSON yields an error response with a null id.
nlohmann::json score_line(const std::string& line, const ScoreContext& ctx);

/// Scores a batch in input order. Every response whose id occurs more than
/// once gets a {"kind": "duplicate_id"} violation.
std::vector<nlohmann::json> score_batch(const std::vector<nlohmann::json>& requests, const ScoreContext& ctx,
                                        unsigned threads = 1);

/// Appends a duplicate_id violation to a successful response.
void flag_duplicate(nlohmann::json& response);

/// Machine-readable error code, e.g. "malformed_request".
std::string error_code_name(ErrorCode code);

/// Process exit status for an error: 2 bad input, 3 judge failure, 4 internal.
int exit_code_for(ErrorCode code);

}  // namespace toolsup::svc
