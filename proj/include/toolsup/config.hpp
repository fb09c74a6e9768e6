#pragma once

#include <filesystem>

#include "json.hpp"
#include "toolsup/currsim.hpp"
#include "toolsup/rewards.hpp"

namespace toolsup::svc {

/// Every tunable in one flat document:
///   reward:  w_fp, w_fn, zoom_binarize, zoom_threshold, w_fmt, draw_discrete,
///            discrete_radius, anls_threshold
///   grpo:    group_size, clip, learning_rate, kl_coef, steps_per_stage,
///            eps_std, prompts_per_step, epochs
///   toy env: env_width, env_height, horizon, p_salient_correct,
///            p_salient_distractor, hint_with_evidence, hint_blind,
///            hint_after_wrong_tool
struct Config {
  rewards::RewardConfig rewards;
  currsim::GrpoConfig grpo;
  currsim::EnvConfig env;
};

/// Applies the keys present in `flat`. Unknown keys and mistyped values
/// throw Error{MalformedRequest}.
void apply_config(Config& cfg, const nlohmann::json& flat);
/// Applies reward keys only; any other key is rejected.
void apply_reward_overrides(rewards::RewardConfig& cfg, const nlohmann::json& flat);

Config load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const Config& cfg);

}  // namespace toolsup::svc
