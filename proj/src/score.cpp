#include "toolsup/score.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <thread>

#include <fmt/format.h>

#include "toolsup/base64.hpp"
#include "toolsup/config.hpp"
#include "toolsup/error.hpp"
#include "toolsup/png.hpp"
#include "toolsup/toolbox.hpp"
#include "toolsup/trace.hpp"

namespace toolsup::svc {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedRequest, what); }

std::vector<double> numbers_of(const json& v, const char* key) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array() && !v.empty()) {
    for (const auto& x : v) {
      if (!x.is_number()) malformed(fmt::format("'{}' must contain numbers", key));
      out.push_back(x.get<double>());
    }
  } else {
    malformed(fmt::format("'{}' must be a number or a list of numbers", key));
  }
  for (double d : out) {
    if (!std::isfinite(d)) malformed(fmt::format("'{}' must be finite", key));
  }
  return out;
}

bool gt_matches_task(const rewards::GroundTruth& gt, TaskKind task) {
  switch (task) {
    case TaskKind::Zoom: return std::holds_alternative<rewards::ZoomGT>(gt);
    case TaskKind::RotFlip: return std::holds_alternative<rewards::RotFlipGT>(gt);
    case TaskKind::ReadValue:
    case TaskKind::CompareCount: return std::holds_alternative<rewards::DrawGT>(gt);
    case TaskKind::Qa: return true;
  }
  return false;
}

json violation_json(std::string_view kind, std::optional<std::size_t> turn, const std::string& detail) {
  json v = {{"kind", kind}};
  if (turn) v["turn"] = *turn;
  if (!detail.empty()) v["detail"] = detail;
  return v;
}

json error_response(const json& id, ErrorCode code, const std::string& message) {
  return {{"id", id}, {"ok", false}, {"error", {{"code", error_code_name(code)}, {"message", message}}}};
}

}  // namespace

std::string error_code_name(ErrorCode code) {
  const std::string_view camel = to_string(code);
  std::string out;
  for (std::size_t i = 0; i < camel.size(); ++i) {
    const char c = camel[i];
    if (std::isupper(static_cast<unsigned char>(c))) {
      if (i > 0) out += '_';
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      out += c;
    }
  }
  return out;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::JudgeUnavailable: return 3;
    case ErrorCode::Internal: return 4;
    default: return 2;
  }
}

ScoreRequest parse_request(const json& j, const ScoreContext& ctx) {
  if (!j.is_object()) malformed("request must be a JSON object");
  ScoreRequest r;
  if (!j.contains("id") || !j["id"].is_string()) malformed("'id' must be a string");
  r.id = j["id"].get<std::string>();

  if (!j.contains("stage") || !j["stage"].is_number_integer()) malformed("'stage' must be 1 or 2");
  r.stage = j["stage"].get<int>();
  if (r.stage != 1 && r.stage != 2) malformed("'stage' must be 1 or 2");

  if (!j.contains("task") || !j["task"].is_string()) malformed("'task' must be a string");
  const auto task = task_from_string(j["task"].get<std::string>());
  if (!task) malformed(fmt::format("unknown task '{}'", j["task"].get<std::string>()));
  r.task = *task;

  if (!j.contains("trajectory") || !j["trajectory"].is_string()) malformed("'trajectory' must be a string");
  r.trajectory = j["trajectory"].get<std::string>();

  const char* path_key = j.contains("image_path") ? "image_path" : "image";
  const int sources = (j.contains(path_key) ? 1 : 0) + (j.contains("image_b64") ? 1 : 0) + (j.contains("image_size") ? 1 : 0);
  if (sources != 1) malformed("exactly one of image_path, image_b64, image_size is required");
  if (j.contains(path_key)) {
    if (!j[path_key].is_string()) malformed("image path must be a string");
    std::filesystem::path p = j[path_key].get<std::string>();
    if (p.is_relative()) p = ctx.base_dir / p;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(p, ec)) malformed(fmt::format("image not found: {}", p.string()));
    try {
      r.original = raster::read_png(p);
    } catch (const Error& e) {
      malformed(fmt::format("unreadable image {}: {}", p.string(), e.what()));
    }
  } else if (j.contains("image_b64")) {
    if (!j["image_b64"].is_string()) malformed("'image_b64' must be a string");
    const auto bytes = base64_decode(j["image_b64"].get<std::string>());
    if (!bytes) malformed("'image_b64' is not valid base64");
    try {
      r.original = raster::decode_png(*bytes);
    } catch (const Error& e) {
      malformed(fmt::format("'image_b64' is not a PNG: {}", e.what()));
    }
  } else {
    const auto& s = j["image_size"];
    if (!s.is_array() || s.size() != 2 || !s[0].is_number_integer() || !s[1].is_number_integer() ||
        s[0].get<int>() <= 0 || s[1].get<int>() <= 0) {
      malformed("'image_size' must be [width, height] with positive integers");
    }
    r.original = ImageSize{s[0].get<int>(), s[1].get<int>()};
  }

  if (j.contains("initial_orientation")) {
    if (!j["initial_orientation"].is_string()) malformed("'initial_orientation' must be a string");
    const auto o = tools::orientation_from_name(j["initial_orientation"].get<std::string>());
    if (!o) malformed("unknown initial_orientation");
    r.initial = *o;
  }

  if (j.contains("ground_truth") && !j["ground_truth"].is_null()) {
    r.gt = rewards::ground_truth_from_json(j["ground_truth"]);
    if (!gt_matches_task(*r.gt, r.task)) malformed("ground_truth kind does not match the task");
  }
  if (r.stage == 1 && !r.gt) malformed("stage-1 requests need a ground_truth");

  if (j.contains("answer") && !j["answer"].is_null()) {
    rewards::AnswerTarget t;
    if (j.contains("question") && j["question"].is_string()) t.question = j["question"].get<std::string>();
    if (is_synthetic_chart(r.task)) {
      t.values = numbers_of(j["answer"], "answer");
      if (!j.contains("answer_range")) malformed("synthetic chart answers need 'answer_range'");
      t.ranges = numbers_of(j["answer_range"], "answer_range");
      if (t.ranges.size() != t.values.size()) malformed("'answer_range' needs one range per answer value");
      for (double range : t.ranges) {
        if (range <= 0) malformed("'answer_range' must be positive");
      }
    } else if (j["answer"].is_string()) {
      t.text = j["answer"].get<std::string>();
    } else if (j["answer"].is_number()) {
      t.text = j["answer"].dump();
    } else {
      malformed("'answer' must be text");
    }
    r.target = std::move(t);
  }
  if (r.stage == 2 && !r.target) malformed("stage-2 requests need an 'answer'");

  if (j.contains("max_turns")) {
    if (!j["max_turns"].is_number_integer() || j["max_turns"].get<int>() < 1) malformed("'max_turns' must be positive");
    r.max_turns = j["max_turns"].get<int>();
  }

  r.cfg = ctx.defaults;
  if (j.contains("config")) apply_reward_overrides(r.cfg, j["config"]);
  return r;
}

json score_request(const ScoreRequest& req, rewards::Judge* judge) {
  const auto parsed = trace::parse_trace(req.trajectory);
  json violations = json::array();
  for (const auto& v : parsed.violations) violations.push_back(violation_json(trace::to_string(v.kind), v.turn, v.detail));

  auto state = std::holds_alternative<raster::Image>(req.original)
                   ? tools::EpisodeState(std::get<raster::Image>(req.original), req.initial, req.max_turns)
                   : tools::EpisodeState::geometry_only(std::get<ImageSize>(req.original).width,
                                                        std::get<ImageSize>(req.original).height, req.initial,
                                                        req.max_turns);
  const auto& turns = parsed.trajectory.turns;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (!turns[i].call) continue;
    try {
      state = state.apply(*turns[i].call);
    } catch (const Error& e) {
      json v = violation_json("execution_error", i, e.what());
      v["code"] = error_code_name(e.code());
      violations.push_back(std::move(v));
    }
  }

  const rewards::EpisodeTargets targets{req.gt ? &*req.gt : nullptr, req.target ? &*req.target : nullptr};
  auto breakdown = rewards::score_episode(req.stage, req.task, parsed, state, targets, req.cfg, judge);
  for (const auto& note : breakdown.notes) {
    unsigned long s = 0;
    char kind[64] = {0};
    if (std::sscanf(note.c_str(), "state %lu: %63s", &s, kind) == 2) {
      json v = {{"kind", kind}, {"state", s}};
      violations.push_back(std::move(v));
    } else if (note.rfind("index_out_of_lineage: ", 0) == 0) {
      violations.push_back(violation_json("index_out_of_lineage", std::nullopt, note.substr(22)));
    } else {
      violations.push_back(violation_json("note", std::nullopt, note));
    }
  }
  breakdown.notes.clear();
  return {{"breakdown", breakdown.to_json()}, {"violations", std::move(violations)}};
}

json score_one(const json& request, const ScoreContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  json id = request.is_object() && request.contains("id") ? request["id"] : json(nullptr);
  try {
    const auto req = parse_request(request, ctx);
    auto scored = score_request(req, ctx.judge);
    json out = {{"id", req.id}, {"ok", true}, {"breakdown", std::move(scored["breakdown"])},
                {"violations", std::move(scored["violations"])}};
    if (ctx.timing) {
      out["timing_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    return out;
  } catch (const Error& e) {
    return error_response(id, e.code(), e.what());
  } catch (const std::exception& e) {
    return error_response(id, ErrorCode::Internal, e.what());
  }
}

json score_line(const std::string& line, const ScoreContext& ctx) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) return error_response(nullptr, ErrorCode::MalformedRequest, "request is not valid JSON");
  return score_one(j, ctx);
}

void flag_duplicate(json& response) {
  if (response.value("ok", false)) response["violations"].push_back({{"kind", "duplicate_id"}});
}

std::vector<json> score_batch(const std::vector<json>& requests, const ScoreContext& ctx, unsigned threads) {
  std::vector<json> out(requests.size());
  threads = std::max(1u, threads);
  if (threads == 1 || requests.size() < 2) {
    for (std::size_t i = 0; i < requests.size(); ++i) out[i] = score_one(requests[i], ctx);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < requests.size(); i += threads) out[i] = score_one(requests[i], ctx);
      });
    }
    for (auto& th : pool) th.join();
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& r : requests) {
    if (r.is_object() && r.contains("id") && r["id"].is_string()) ++counts[r["id"].get<std::string>()];
  }
  for (auto& resp : out) {
    if (resp["id"].is_string() && counts[resp["id"].get<std::string>()] > 1) flag_duplicate(resp);
  }
  return out;
}

}  // namespace toolsup::svc
