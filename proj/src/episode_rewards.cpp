#include <cmath>

#include <fmt/format.h>

#include "toolsup/error.hpp"
#include "toolsup/judge.hpp"
#include "toolsup/rewards.hpp"

namespace toolsup::rewards {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedRequest, what); }

double finite_number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) malformed(fmt::format("'{}' must be a number", key));
  const double v = j[key].get<double>();
  if (!std::isfinite(v) || v < 0) malformed(fmt::format("'{}' must be finite and non-negative", key));
  return v;
}

}  // namespace

json primitive_to_json(const Primitive& p) {
  switch (p.kind) {
    case PrimitiveKind::XLine: return {{"kind", "x_line"}, {"x", p.x}};
    case PrimitiveKind::YLine: return {{"kind", "y_line"}, {"y", p.y}};
    case PrimitiveKind::Point: return {{"kind", "point"}, {"x", p.x}, {"y", p.y}};
  }
  return {};
}

Primitive primitive_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) malformed("primitive needs a 'kind'");
  const auto kind = j["kind"].get<std::string>();
  if (kind == "x_line") return Primitive::x_line(finite_number(j, "x"));
  if (kind == "y_line") return Primitive::y_line(finite_number(j, "y"));
  if (kind == "point") return Primitive::point(finite_number(j, "x"), finite_number(j, "y"));
  malformed(fmt::format("unknown primitive kind '{}'", kind));
}

json ground_truth_to_json(const GroundTruth& gt) {
  if (const auto* zoom = std::get_if<ZoomGT>(&gt)) {
    json boxes = json::array();
    for (const auto& b : zoom->boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
    return {{"kind", "zoom"}, {"boxes", std::move(boxes)}};
  }
  if (const auto* rotflip = std::get_if<RotFlipGT>(&gt)) {
    return {{"kind", "rotflip"}, {"o_star", std::string(tools::orientation_name(rotflip->target))}};
  }
  json prims = json::array();
  for (const auto& p : std::get<DrawGT>(gt).primitives) prims.push_back(primitive_to_json(p));
  return {{"kind", "draw"}, {"primitives", std::move(prims)}};
}

GroundTruth ground_truth_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    malformed("ground_truth needs a 'kind'");
  }
  const auto kind = j["kind"].get<std::string>();
  if (kind == "zoom") {
    if (!j.contains("boxes") || !j["boxes"].is_array() || j["boxes"].empty()) {
      malformed("zoom ground truth needs non-empty 'boxes'");
    }
    ZoomGT gt;
    for (const auto& b : j["boxes"]) {
      if (!b.is_array() || b.size() != 4) malformed("a box is [x1, y1, x2, y2]");
      for (const auto& v : b) {
        if (!v.is_number() || !std::isfinite(v.get<double>())) malformed("box coordinates must be numbers");
      }
      const auto box = raster::box_from_coords(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                                               b[3].get<double>());
      if (box.empty()) malformed("ground-truth boxes must have positive area");
      gt.boxes.push_back(box);
    }
    return gt;
  }
  if (kind == "rotflip") {
    if (!j.contains("o_star") || !j["o_star"].is_string()) malformed("rotflip ground truth needs 'o_star'");
    const auto o = tools::orientation_from_name(j["o_star"].get<std::string>());
    if (!o) malformed(fmt::format("unknown orientation '{}'", j["o_star"].get<std::string>()));
    return RotFlipGT{*o};
  }
  if (kind == "draw") {
    if (!j.contains("primitives") || !j["primitives"].is_array() || j["primitives"].empty()) {
      malformed("draw ground truth needs non-empty 'primitives'");
    }
    DrawGT gt;
    for (const auto& p : j["primitives"]) gt.primitives.push_back(primitive_from_json(p));
    return gt;
  }
  malformed(fmt::format("unknown ground_truth kind '{}'", kind));
}

double state_reward(const tools::LineageEntry& entry, const GroundTruth& gt, const RewardConfig& cfg,
                    std::vector<std::string>* notes, std::optional<DrawMatch>* audit) {
  if (const auto* zoom = std::get_if<ZoomGT>(&gt)) {
    if (!entry.producer || entry.producer->name != tools::ToolName::ZoomIn) return 0.0;
    if (!entry.zoom_box_original) {
      if (notes) notes->push_back("unmappable_box");
      return 0.0;
    }
    return zoom_reward(*entry.zoom_box_original, zoom->boxes, cfg);
  }
  if (const auto* rotflip = std::get_if<RotFlipGT>(&gt)) {
    return orientation_reward(entry.orientation, rotflip->target);
  }
  const auto& draw = std::get<DrawGT>(gt);
  if (entry.overlays.empty()) return 0.0;
  DrawScore score = cfg.draw_discrete
                        ? draw_reward_discrete(entry.overlays, draw.primitives, cfg.discrete_radius)
                        : draw_reward(entry.overlays, draw.primitives, entry.width, entry.height);
  if (audit) *audit = std::move(score.match);
  return score.reward;
}

std::vector<double> per_state_rewards(const tools::EpisodeState& state, const GroundTruth& gt,
                                      const RewardConfig& cfg, std::vector<std::string>* notes,
                                      std::vector<DrawAudit>* audit) {
  const auto& lineage = state.lineage();
  std::vector<double> rewards;
  rewards.reserve(lineage.size() > 0 ? lineage.size() - 1 : 0);
  for (std::size_t i = 1; i < lineage.size(); ++i) {
    std::vector<std::string> local;
    std::optional<DrawMatch> match;
    rewards.push_back(state_reward(lineage[i], gt, cfg, &local, &match));
    if (notes) {
      for (const auto& n : local) notes->push_back(fmt::format("state {}: {}", i, n));
    }
    if (audit && match) audit->push_back({i, std::move(*match)});
  }
  return rewards;
}

json RewardBreakdown::to_json() const {
  json out = json::object();
  out["stage"] = stage;
  out["format"] = format;
  out["tool_calls"] = tool_calls;
  if (has_tool_rewards) {
    out["per_state"] = per_state;
    out["global_tool"] = global_tool;
    out["answer_tool"] = answer_tool;
    out["final_stage1"] = final_stage1;
    json states = json::array();
    for (const auto& s : answer_states) states.push_back(s ? json(*s) : json(nullptr));
    out["answer_states"] = std::move(states);
    if (!draw_audit.empty()) {
      json audits = json::array();
      for (const auto& a : draw_audit) {
        json pairs = json::array();
        for (const auto& p : a.match.pairs) {
          pairs.push_back({{"pred", p.pred}, {"gt", p.gt}, {"similarity", p.similarity}});
        }
        audits.push_back({{"state", a.state}, {"s_tp", a.match.s_tp}, {"pairs", std::move(pairs)}});
      }
      out["draw_audit"] = std::move(audits);
    }
  }
  if (has_answer) {
    out["answer"] = answer;
    out["final_stage2"] = final_stage2;
  }
  if (!notes.empty()) out["notes"] = notes;
  return out;
}

RewardBreakdown score_episode(int stage, TaskKind task, const trace::ParseResult& parsed,
                              const tools::EpisodeState& state, const EpisodeTargets& targets,
                              const RewardConfig& cfg, Judge* judge, bool with_other_stage) {
  if (stage != 1 && stage != 2) throw Error(ErrorCode::MalformedRequest, "stage must be 1 or 2");
  RewardBreakdown b;
  b.stage = stage;
  b.tool_calls = parsed.trajectory.tool_call_count();
  b.format = trace::format_reward(parsed.trajectory, parsed.violations, cfg.w_fmt);

  if (stage == 1 || (with_other_stage && targets.gt)) {
    if (!targets.gt) throw Error(ErrorCode::MalformedRequest, "stage-1 scoring needs a ground truth");
    b.has_tool_rewards = true;
    b.per_state = per_state_rewards(state, *targets.gt, cfg, &b.notes, &b.draw_audit);
    const auto states = trace::extract_answer_state(parsed.trajectory, state.lineage().size(), task);
    b.answer_states = states.indices;
    for (const auto& bad : states.out_of_lineage) b.notes.push_back("index_out_of_lineage: " + bad);
    const auto agg = stage1_aggregate(b.per_state, b.answer_states, b.format);
    b.global_tool = agg.global;
    b.answer_tool = agg.answer;
    b.final_stage1 = agg.final;
  }
  if (stage == 2 || (with_other_stage && targets.answer)) {
    if (!targets.answer) throw Error(ErrorCode::MalformedRequest, "stage-2 scoring needs an answer target");
    b.has_answer = true;
    if (parsed.trajectory.answer) {
      if (!is_synthetic_chart(task) && !judge) throw Error(ErrorCode::JudgeUnavailable, "no judge configured");
      ExactMatchJudge unused;
      b.answer = answer_reward(*parsed.trajectory.answer, *targets.answer, task, judge ? *judge : unused);
    }
    b.final_stage2 = stage2_final(b.answer, b.format);
  }
  return b;
}

}  // namespace toolsup::rewards
