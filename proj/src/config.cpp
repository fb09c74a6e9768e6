#include "toolsup/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include <fmt/format.h>

#include "toolsup/error.hpp"

namespace toolsup::svc {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const char* expected) {
  throw Error(ErrorCode::MalformedRequest, fmt::format("config key '{}' must be {}", key, expected));
}

std::function<void(const std::string&, const json&)> number(double& field) {
  return [&field](const std::string& key, const json& v) {
    if (!v.is_number()) bad(key, "a number");
    field = v.get<double>();
  };
}

std::function<void(const std::string&, const json&)> integer(int& field) {
  return [&field](const std::string& key, const json& v) {
    if (!v.is_number_integer()) bad(key, "an integer");
    field = v.get<int>();
  };
}

std::function<void(const std::string&, const json&)> flag(bool& field) {
  return [&field](const std::string& key, const json& v) {
    if (!v.is_boolean()) bad(key, "a boolean");
    field = v.get<bool>();
  };
}

using Setters = std::map<std::string, std::function<void(const std::string&, const json&)>>;

Setters reward_setters(rewards::RewardConfig& r) {
  return {{"w_fp", number(r.w_fp)},
          {"w_fn", number(r.w_fn)},
          {"zoom_binarize", flag(r.zoom_binarize)},
          {"zoom_threshold", number(r.zoom_threshold)},
          {"w_fmt", number(r.w_fmt)},
          {"draw_discrete", flag(r.draw_discrete)},
          {"discrete_radius", number(r.discrete_radius)},
          {"anls_threshold", number(r.anls_threshold)}};
}

Setters all_setters(Config& c) {
  auto s = reward_setters(c.rewards);
  auto& g = c.grpo;
  auto& e = c.env;
  s.insert({{"group_size", integer(g.group_size)},
            {"clip", number(g.clip)},
            {"learning_rate", number(g.learning_rate)},
            {"kl_coef", number(g.kl_coef)},
            {"steps_per_stage", integer(g.steps_per_stage)},
            {"eps_std", number(g.eps_std)},
            {"prompts_per_step", integer(g.prompts_per_step)},
            {"epochs", integer(g.epochs)},
            {"env_width", integer(e.width)},
            {"env_height", integer(e.height)},
            {"horizon", integer(e.horizon)},
            {"p_salient_correct", number(e.p_salient_correct)},
            {"p_salient_distractor", number(e.p_salient_distractor)},
            {"hint_with_evidence", number(e.hint_with_evidence)},
            {"hint_blind", number(e.hint_blind)},
            {"hint_after_wrong_tool", number(e.hint_after_wrong_tool)}});
  return s;
}

void apply_flat(const Setters& setters, const json& flat) {
  if (!flat.is_object()) throw Error(ErrorCode::MalformedRequest, "config must be a JSON object");
  for (const auto& [key, value] : flat.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::MalformedRequest, fmt::format("unknown config key '{}'", key));
    it->second(key, value);
  }
}

}  // namespace

void apply_config(Config& cfg, const json& flat) {
  apply_flat(all_setters(cfg), flat);
  try {
    cfg.rewards.validate();
    cfg.grpo.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedRequest, e.what());
  }
}

void apply_reward_overrides(rewards::RewardConfig& cfg, const json& flat) {
  apply_flat(reward_setters(cfg), flat);
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedRequest, e.what());
  }
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, fmt::format("cannot open config {}", path.string()));
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::MalformedRequest, fmt::format("{} is not valid JSON", path.string()));
  Config cfg;
  apply_config(cfg, j);
  return cfg;
}

json config_to_json(const Config& c) {
  const auto& r = c.rewards;
  const auto& g = c.grpo;
  const auto& e = c.env;
  return {{"w_fp", r.w_fp},
          {"w_fn", r.w_fn},
          {"zoom_binarize", r.zoom_binarize},
          {"zoom_threshold", r.zoom_threshold},
          {"w_fmt", r.w_fmt},
          {"draw_discrete", r.draw_discrete},
          {"discrete_radius", r.discrete_radius},
          {"anls_threshold", r.anls_threshold},
          {"group_size", g.group_size},
          {"clip", g.clip},
          {"learning_rate", g.learning_rate},
          {"kl_coef", g.kl_coef},
          {"steps_per_stage", g.steps_per_stage},
          {"eps_std", g.eps_std},
          {"prompts_per_step", g.prompts_per_step},
          {"epochs", g.epochs},
          {"env_width", e.width},
          {"env_height", e.height},
          {"horizon", e.horizon},
          {"p_salient_correct", e.p_salient_correct},
          {"p_salient_distractor", e.p_salient_distractor},
          {"hint_with_evidence", e.hint_with_evidence},
          {"hint_blind", e.hint_blind},
          {"hint_after_wrong_tool", e.hint_after_wrong_tool}};
}

}  // namespace toolsup::svc
