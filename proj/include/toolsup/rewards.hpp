#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "toolsup/orientation.hpp"
#include "toolsup/primitive.hpp"
#include "toolsup/raster.hpp"
#include "toolsup/task.hpp"
#include "toolsup/toolbox.hpp"
#include "toolsup/trace.hpp"

namespace toolsup::rewards {

struct RewardConfig {
  double w_fp = 0.1;
  double w_fn = 1.0;
  bool zoom_binarize = false;
  double zoom_threshold = 0.5;
  double w_fmt = trace::kDefaultFormatWeight;
  bool draw_discrete = false;       // indicator credit instead of the margin score
  double discrete_radius = 10.0;
  double anls_threshold = 0.5;

  /// Throws Error{InvalidArguments} when a weight or threshold is out of range.
  void validate() const;
};

struct ZoomGT {
  std::vector<raster::BBox> boxes;
};
struct RotFlipGT {
  tools::Orientation target;
};
struct DrawGT {
  std::vector<Primitive> primitives;
};
using GroundTruth = std::variant<ZoomGT, RotFlipGT, DrawGT>;

// JSON forms:
//   {"kind": "x_line", "x": c} | {"kind": "y_line", "y": c} | {"kind": "point", "x": .., "y": ..}
//   {"kind": "zoom", "boxes": [[x1,y1,x2,y2], ...]}
//   {"kind": "rotflip", "o_star": "<orientation name>"}
//   {"kind": "draw", "primitives": [...]}
// Decoding failures throw Error{MalformedRequest}.
nlohmann::json primitive_to_json(const Primitive& p);
Primitive primitive_from_json(const nlohmann::json& j);
nlohmann::json ground_truth_to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const nlohmann::json& j);

// -- zoom ------------------------------------------------------------------

/// 2TP / (2TP + w_fp*FP + w_fn*FN) over half-open pixel areas; 0 without overlap.
double modf1(const raster::BBox& b, const raster::BBox& g, double w_fp, double w_fn);

/// Best modf1 against any ground-truth box, optionally binarized.
double zoom_reward(const raster::BBox& b, const std::vector<raster::BBox>& gts,
                   const RewardConfig& cfg);

// -- rotate/flip -----------------------------------------------------------

inline double orientation_reward(const tools::Orientation& state, const tools::Orientation& target) {
  return !state.non_axis_aligned && !target.non_axis_aligned && state == target ? 1.0 : 0.0;
}

// -- draw ------------------------------------------------------------------

/// Distance between same-kind primitives; +inf across kinds.
double primitive_distance(const Primitive& p, const Primitive& g);
/// Margin for a ground-truth kind on a W x H image.
double primitive_tolerance(PrimitiveKind kind, double width, double height);
/// max(0, 1 - d/T); 0 across kinds.
double primitive_similarity(const Primitive& p, const Primitive& g, double width, double height);

struct MatchPair {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double similarity = 0.0;
};

struct DrawMatch {
  double s_tp = 0.0;
  std::vector<MatchPair> pairs;  // sorted by pred index
};

DrawMatch hungarian_match(const std::vector<Primitive>& preds, const std::vector<Primitive>& gts,
                          double width, double height);

struct DrawScore {
  double reward = 0.0;
  DrawMatch match;
};

/// 2*S_TP / (|preds| + |gts|), 0 when both are empty.
DrawScore draw_reward(const std::vector<Primitive>& preds, const std::vector<Primitive>& gts,
                      double width, double height);
/// Same aggregation with credit 1[d < radius] per matched pair.
DrawScore draw_reward_discrete(const std::vector<Primitive>& preds, const std::vector<Primitive>& gts,
                               double radius = 10.0);

// -- aggregation -----------------------------------------------------------

struct Stage1Result {
  double global = 0.0;
  double answer = 0.0;
  double final = 0.0;
};

/// per_state[i] is the reward of lineage index i+1. Answer indices are
/// lineage indices; index 0 (the untouched input) and invalid entries
/// contribute 0 to the per-element mean.
Stage1Result stage1_aggregate(std::span<const double> per_state,
                              const std::vector<std::optional<std::size_t>>& answer_indices,
                              double fmt);

/// max(0, 1 - |ans - target| / range). Throws InvalidArguments for range <= 0.
double s_norm(double ans, double target, double range);

inline double stage2_final(double answer, double fmt) { return answer + fmt; }

/// 1[answer > 0.5] * 1[tool_count > 0].
inline double tool_conditioned_reward(double answer, std::size_t tool_count) {
  return answer > 0.5 && tool_count > 0 ? 1.0 : 0.0;
}

/// Every decimal number in `text`, in order of appearance.
std::vector<double> extract_numbers(std::string_view text);

class Judge;

struct AnswerTarget {
  std::string text;             // reference answer for judged tasks
  std::vector<double> values;   // numeric targets for synthetic charts
  std::vector<double> ranges;   // one range per value
  std::string question;
};

/// Synthetic charts: mean s_norm over the targets, reading the first
/// numbers of the answer (0 when too few). Other tasks: the judge verdict.
/// Judge failures propagate as Error{JudgeUnavailable}.
double answer_reward(const trace::AnswerPayload& answer, const AnswerTarget& target, TaskKind task,
                     Judge& judge);

// -- per-episode -----------------------------------------------------------

/// Reward of one lineage state. Appends violation descriptions (e.g. an
/// unmappable zoom box) to `notes`.
double state_reward(const tools::LineageEntry& entry, const GroundTruth& gt, const RewardConfig& cfg,
                    std::vector<std::string>* notes = nullptr,
                    std::optional<DrawMatch>* audit = nullptr);

struct DrawAudit {
  std::size_t state = 0;  // lineage index
  DrawMatch match;
};

struct RewardBreakdown {
  int stage = 1;
  bool has_tool_rewards = false;  // per-state terms were computed
  bool has_answer = false;        // answer reward was computed
  std::vector<double> per_state;  // lineage indices 1..T
  double global_tool = 0.0;
  double answer_tool = 0.0;
  double format = 0.0;
  double answer = 0.0;
  double final_stage1 = 0.0;
  double final_stage2 = 0.0;
  std::size_t tool_calls = 0;
  std::vector<std::optional<std::size_t>> answer_states;
  std::vector<DrawAudit> draw_audit;
  std::vector<std::string> notes;

  /// Fields of the terms that were computed, keys sorted.
  nlohmann::json to_json() const;
};

/// Per-state rewards for lineage indices 1..T of an executed episode.
std::vector<double> per_state_rewards(const tools::EpisodeState& state, const GroundTruth& gt,
                                      const RewardConfig& cfg, std::vector<std::string>* notes = nullptr,
                                      std::vector<DrawAudit>* audit = nullptr);

struct EpisodeTargets {
  const GroundTruth* gt = nullptr;        // required for tool rewards
  const AnswerTarget* answer = nullptr;   // required for the answer reward
};

/// Scores an executed episode. Stage 1 computes the tool terms (needs a
/// ground truth), stage 2 the answer terms (needs a target, and a judge for
/// non-synthetic tasks). `with_other_stage` adds the other stage's terms.
RewardBreakdown score_episode(int stage, TaskKind task, const trace::ParseResult& parsed,
                              const tools::EpisodeState& state, const EpisodeTargets& targets,
                              const RewardConfig& cfg, Judge* judge, bool with_other_stage = false);

}  // namespace toolsup::rewards
