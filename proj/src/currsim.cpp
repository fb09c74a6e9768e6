#include "toolsup/currsim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "toolsup/error.hpp"
#include "toolsup/synth.hpp"

namespace toolsup::currsim {

using nlohmann::json;

namespace {

constexpr std::size_t kZoomCandidates = 4;
constexpr std::size_t kLineCandidates = 4;
constexpr std::size_t kMarkCandidates = 4;
constexpr std::size_t kAnswerOptions = 4;

const std::vector<std::string>& answer_words() {
  static const std::vector<std::string> words{"amber", "birch", "cobalt", "delta",  "ember", "fjord",
                                              "garnet", "harbor", "indigo", "jasper", "kelp",  "lumen"};
  return words;
}

std::size_t task_index(TaskKind t) {
  switch (t) {
    case TaskKind::Zoom: return 0;
    case TaskKind::RotFlip: return 1;
    case TaskKind::ReadValue: return 2;
    default: return 3;
  }
}

std::size_t feature(ActionClass cls, bool salient) { return static_cast<std::size_t>(cls) * 2 + (salient ? 1 : 0); }

raster::BBox random_box(Rng& rng, int w, int h) {
  const int bw = static_cast<int>(rng.uniform_int(40, 120));
  const int bh = static_cast<int>(rng.uniform_int(40, 120));
  const int x = static_cast<int>(rng.uniform_int(0, w - bw));
  const int y = static_cast<int>(rng.uniform_int(0, h - bh));
  return {x, y, x + bw, y + bh};
}

tools::ToolCall zoom_call(const raster::BBox& b) {
  return tools::make_zoom({double(b.x1), double(b.y1), double(b.x2), double(b.y2)}, 0);
}

LastAction last_of(ActionClass c) {
  switch (c) {
    case ActionClass::Zoom: return LastAction::Zoom;
    case ActionClass::Rotate90:
    case ActionClass::Rotate180:
    case ActionClass::Rotate270: return LastAction::Rotate;
    case ActionClass::FlipH:
    case ActionClass::FlipV: return LastAction::Flip;
    case ActionClass::HLine:
    case ActionClass::VLine: return LastAction::Line;
    case ActionClass::Mark: return LastAction::Mark;
    default: return LastAction::None;
  }
}

std::vector<std::string> numeric_options(Rng& rng, long correct, long min_offset, long max_offset, bool non_negative) {
  std::vector<std::string> out{std::to_string(correct)};
  std::vector<long> used{correct};
  while (out.size() < kAnswerOptions) {
    const long off = rng.uniform_int(min_offset, max_offset);
    long v = rng.bernoulli(0.5) ? correct + off : correct - off;
    if (non_negative && v < 0) v = correct + off;
    if (std::find(used.begin(), used.end(), v) != used.end()) continue;
    used.push_back(v);
    out.push_back(std::to_string(v));
  }
  return out;
}

}  // namespace

TaskInstance make_instance(std::uint64_t seed, const EnvConfig& cfg) {
  Rng rng(seed);
  TaskInstance inst;
  const int W = cfg.width;
  const int H = cfg.height;
  switch (rng.uniform_int(0, 3)) {
    case 0: inst.task = TaskKind::Zoom; break;
    case 1: inst.task = TaskKind::RotFlip; break;
    case 2: inst.task = TaskKind::ReadValue; break;
    default: inst.task = TaskKind::CompareCount; break;
  }
  const auto salient = [&](bool correct) {
    return rng.bernoulli(correct ? cfg.p_salient_correct : cfg.p_salient_distractor);
  };

  // Zoom candidates.
  std::optional<raster::BBox> gt_box;
  if (inst.task == TaskKind::Zoom) gt_box = random_box(rng, W, H);
  const std::size_t zoom_correct = gt_box ? static_cast<std::size_t>(rng.uniform_int(0, kZoomCandidates - 1)) : kZoomCandidates;
  for (std::size_t i = 0; i < kZoomCandidates; ++i) {
    raster::BBox box;
    if (i == zoom_correct) {
      box = *gt_box;
    } else {
      do box = random_box(rng, W, H);
      while (gt_box && !box.intersect(*gt_box).empty());
    }
    inst.tools.push_back({ActionClass::Zoom, false, i == zoom_correct, zoom_call(box)});
  }

  // Rotate / flip actions; a rotate/flip task starts from an augmented image
  // and the single inverse action is correct.
  tools::Orientation o_star;
  if (inst.task == TaskKind::RotFlip) {
    const auto aug = synth::augmentations()[static_cast<std::size_t>(rng.uniform_int(0, 4))];
    inst.initial = aug;
    o_star = tools::inverse(aug);
  }
  const std::array<std::pair<ActionClass, tools::Orientation>, 5> rotflip{{
      {ActionClass::Rotate90, tools::Orientation::rotation(1)},
      {ActionClass::Rotate180, tools::Orientation::rotation(2)},
      {ActionClass::Rotate270, tools::Orientation::rotation(3)},
      {ActionClass::FlipH, tools::Orientation::hflip()},
      {ActionClass::FlipV, tools::Orientation::vflip()},
  }};
  for (const auto& [cls, o] : rotflip) {
    const bool correct = inst.task == TaskKind::RotFlip && o == o_star;
    tools::ToolCall call;
    switch (cls) {
      case ActionClass::Rotate90: call = tools::make_rotate(90); break;
      case ActionClass::Rotate180: call = tools::make_rotate(180); break;
      case ActionClass::Rotate270: call = tools::make_rotate(270); break;
      case ActionClass::FlipH: call = tools::make_flip(raster::FlipDirection::Horizontal); break;
      default: call = tools::make_flip(raster::FlipDirection::Vertical); break;
    }
    inst.tools.push_back({cls, false, correct, std::move(call)});
  }

  // Line candidates.
  std::optional<Primitive> gt_line;
  if (inst.task == TaskKind::ReadValue) {
    gt_line = rng.bernoulli(0.5) ? Primitive::x_line(static_cast<double>(rng.uniform_int(20, W - 20)))
                                 : Primitive::y_line(static_cast<double>(rng.uniform_int(20, H - 20)));
  }
  const std::size_t line_correct = gt_line ? static_cast<std::size_t>(rng.uniform_int(0, kLineCandidates - 1)) : kLineCandidates;
  for (std::size_t i = 0; i < kLineCandidates; ++i) {
    if (i == line_correct) {
      const bool vertical = gt_line->kind == PrimitiveKind::XLine;
      inst.tools.push_back({vertical ? ActionClass::VLine : ActionClass::HLine, false, true,
                            vertical ? tools::make_vline(static_cast<int>(gt_line->x), 0)
                                     : tools::make_hline(static_cast<int>(gt_line->y), 0)});
      continue;
    }
    for (;;) {
      const bool vertical = rng.bernoulli(0.5);
      const int pos = static_cast<int>(rng.uniform_int(5, (vertical ? W : H) - 5));
      if (gt_line && (gt_line->kind == PrimitiveKind::XLine) == vertical) {
        const double c = vertical ? gt_line->x : gt_line->y;
        if (std::abs(pos - c) <= (vertical ? W : H) / 4.0) continue;
      }
      inst.tools.push_back({vertical ? ActionClass::VLine : ActionClass::HLine, false, false,
                            vertical ? tools::make_vline(pos, 0) : tools::make_hline(pos, 0)});
      break;
    }
  }

  // Mark candidates.
  std::vector<std::array<double, 2>> gt_points;
  const auto random_points = [&](std::size_t n) {
    std::vector<std::array<double, 2>> pts;
    for (std::size_t i = 0; i < n; ++i) {
      pts.push_back({static_cast<double>(rng.uniform_int(10, W - 10)), static_cast<double>(rng.uniform_int(10, H - 10))});
    }
    return pts;
  };
  if (inst.task == TaskKind::CompareCount) gt_points = random_points(static_cast<std::size_t>(rng.uniform_int(2, 5)));
  const std::size_t mark_correct =
      gt_points.empty() ? kMarkCandidates : static_cast<std::size_t>(rng.uniform_int(0, kMarkCandidates - 1));
  for (std::size_t i = 0; i < kMarkCandidates; ++i) {
    const bool correct = i == mark_correct;
    auto pts = correct ? gt_points : random_points(gt_points.empty() ? 3 : gt_points.size());
    inst.tools.push_back({ActionClass::Mark, false, correct, tools::make_mark(std::move(pts), 0)});
  }

  for (auto& c : inst.tools) c.salient = salient(c.correct);

  // Ground truth, question and answer options.
  switch (inst.task) {
    case TaskKind::Zoom: {
      inst.gt = rewards::ZoomGT{{*gt_box}};
      auto words = answer_words();
      rng.shuffle(words);
      inst.answer_options.assign(words.begin(), words.begin() + kAnswerOptions);
      inst.question = "Which word is printed in the small region of the image?";
      inst.target.text = inst.answer_options[0];
      break;
    }
    case TaskKind::RotFlip: {
      inst.gt = rewards::RotFlipGT{o_star};
      auto words = answer_words();
      rng.shuffle(words);
      inst.answer_options.assign(words.begin(), words.begin() + kAnswerOptions);
      inst.question = "What is the title of this document?";
      inst.target.text = inst.answer_options[0];
      break;
    }
    case TaskKind::ReadValue: {
      inst.gt = rewards::DrawGT{{*gt_line}};
      const long value = rng.uniform_int(0, 100);
      inst.answer_options = numeric_options(rng, value, 10, 20, false);
      inst.question = fmt::format("What is the {}-value of point A?", gt_line->kind == PrimitiveKind::XLine ? "x" : "y");
      inst.target.values = {static_cast<double>(value)};
      inst.target.ranges = {20.0};
      break;
    }
    default: {
      rewards::DrawGT gt;
      for (const auto& p : gt_points) gt.primitives.push_back(Primitive::point(p[0], p[1]));
      inst.gt = std::move(gt);
      const auto total = rng.uniform_int(8, 20);
      const auto count = static_cast<long>(gt_points.size());
      inst.answer_options = numeric_options(rng, count, (total + 1) / 2, total, true);
      inst.question = "How many points have x greater than A?";
      inst.target.values = {static_cast<double>(count)};
      inst.target.ranges = {static_cast<double>(total)};
      break;
    }
  }
  inst.target.question = inst.question;

  inst.hint_correct = {rng.bernoulli(cfg.hint_with_evidence), rng.bernoulli(cfg.hint_blind),
                       rng.bernoulli(cfg.hint_after_wrong_tool)};
  for (auto& w : inst.hint_wrong_choice) w = static_cast<std::size_t>(rng.uniform_int(1, kAnswerOptions - 1));
  inst.other_choice = static_cast<std::size_t>(rng.uniform_int(0, kAnswerOptions - 2));
  return inst;
}

std::vector<double> Policy::probabilities(const Observation& obs) const {
  std::vector<double> p(obs.features.size());
  const double* row = &theta_[obs.key * kFeatures];
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) max_logit = std::max(max_logit, row[obs.features[i]]);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(row[obs.features[i]] - max_logit);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

double Policy::log_prob(const Observation& obs, std::size_t action) const {
  const double* row = &theta_[obs.key * kFeatures];
  double max_logit = -std::numeric_limits<double>::infinity();
  for (auto f : obs.features) max_logit = std::max(max_logit, row[f]);
  double sum = 0.0;
  for (auto f : obs.features) sum += std::exp(row[f] - max_logit);
  return row[obs.features[action]] - max_logit - std::log(sum);
}

Episode rollout(const TaskInstance& inst, const Policy& policy, const EnvConfig& cfg, Rng& rng, int stage) {
  Episode ep;
  ep.initial_width = cfg.width;
  ep.initial_height = cfg.height;
  auto state = tools::EpisodeState::geometry_only(cfg.width, cfg.height, {}, cfg.horizon);
  bool evidence = false;
  bool any_tool = false;
  LastAction last = LastAction::None;
  const auto* rotflip_gt = std::get_if<rewards::RotFlipGT>(&inst.gt);

  const std::size_t n_tools = inst.tools.size();
  for (int turn = 0; turn < cfg.horizon; ++turn) {
    Observation obs;
    const std::size_t bucket = static_cast<std::size_t>(std::min(turn, static_cast<int>(kTurnBuckets) - 1));
    obs.key = ((task_index(inst.task) * kTurnBuckets + bucket) * 2 + (evidence ? 1 : 0)) * kLastActions +
              static_cast<std::size_t>(last);
    obs.features.reserve(n_tools + 2);
    for (const auto& c : inst.tools) obs.features.push_back(feature(c.cls, c.salient));
    obs.features.push_back(feature(ActionClass::AnswerHinted, false));
    obs.features.push_back(feature(ActionClass::AnswerOther, false));

    const auto probs = policy.probabilities(obs);
    const double u = rng.uniform();
    std::size_t chosen = probs.size() - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) {
        chosen = i;
        break;
      }
    }
    ep.decisions.push_back({obs, chosen, probs[chosen]});

    trace::TraceTurn t;
    t.think = fmt::format("turn {}", turn + 1);
    if (chosen < n_tools) {
      const auto& cand = inst.tools[chosen];
      state = state.apply(*cand.call);
      any_tool = true;
      last = last_of(cand.cls);
      ep.tools_used.push_back(cand.call->name);
      evidence = rotflip_gt ? state.last().orientation == rotflip_gt->target : cand.correct;
      t.tool_call = cand.call->to_json().dump();
      t.call = cand.call;
      ep.trajectory.turns.push_back(std::move(t));
      continue;
    }
    const std::size_t hint_kind = !any_tool ? 1 : (evidence ? 0 : 2);
    const std::size_t hinted = inst.hint_correct[hint_kind] ? 0 : inst.hint_wrong_choice[hint_kind];
    std::size_t option = hinted;
    if (chosen == n_tools + 1) {
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < inst.answer_options.size(); ++i) {
        if (i != hinted) rest.push_back(i);
      }
      option = rest[inst.other_choice % rest.size()];
    }
    ep.answer = inst.answer_options[option];
    ep.answered = true;
    ep.answer_correct = option == 0;
    if (stage == 1) {
      const std::size_t image = chosen == n_tools ? state.lineage().size() - 1 : 0;
      t.answer = fmt::format("image {}", image);
    } else {
      t.answer = ep.answer;
    }
    ep.trajectory.answer = trace::parse_answer(*t.answer);
    ep.trajectory.turns.push_back(std::move(t));
    break;
  }
  ep.state = std::make_shared<const tools::EpisodeState>(std::move(state));
  return ep;
}

void GrpoConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArguments, what);
  };
  require(group_size >= 2, "group_size must be at least 2");
  require(clip > 0 && clip < 1, "clip must be in (0,1)");
  require(std::isfinite(learning_rate) && learning_rate > 0, "learning_rate must be positive");
  require(kl_coef == 0.0, "kl_coef must be 0");
  require(steps_per_stage >= 1, "steps_per_stage must be positive");
  require(eps_std > 0, "eps_std must be positive");
  require(prompts_per_step >= 1, "prompts_per_step must be positive");
  require(epochs >= 1, "epochs must be positive");
}

std::vector<double> grpo_advantages(const std::vector<double>& rewards, double eps_std) {
  if (rewards.empty()) return {};
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> adv(rewards.size());
  const bool flat = std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards[0]; });
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = flat ? 0.0 : (rewards[i] - mean) / std::max(sd, eps_std);
  return adv;
}

double surrogate(const Policy& policy, const std::vector<Sample>& samples, double clip, std::vector<double>* grad) {
  if (grad) grad->assign(policy.theta().size(), 0.0);
  if (samples.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  double total = 0.0;
  for (const auto& s : samples) {
    const auto& d = *s.decision;
    const auto probs = policy.probabilities(d.obs);
    const double ratio = probs[d.chosen] / d.old_prob;
    const double a = s.advantage;
    const double unclipped = ratio * a;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * a;
    total += std::min(unclipped, clipped);
    if (!grad || unclipped > clipped) continue;  // the clipped branch is flat in theta
    // d ratio / d theta_f = ratio * (1[f == chosen feature] - sum_b p_b 1[f == feature_b])
    double* g = &(*grad)[d.obs.key * kFeatures];
    const double scale = inv_n * a * ratio;
    g[d.obs.features[d.chosen]] += scale;
    for (std::size_t b = 0; b < probs.size(); ++b) g[d.obs.features[b]] -= scale * probs[b];
  }
  return total * inv_n;
}

void grpo_update(Policy& policy, const std::vector<Sample>& samples, const GrpoConfig& cfg) {
  std::vector<double> grad;
  for (int e = 0; e < cfg.epochs; ++e) {
    surrogate(policy, samples, cfg.clip, &grad);
    auto& theta = policy.theta();
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += cfg.learning_rate * grad[i];
  }
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::ToolSrl: return "toolsrl";
    case Mode::AccuracyOnly: return "accuracy_only";
    case Mode::ToolConditioned: return "tool_conditioned";
    case Mode::GlobalOnly: return "global_only";
    case Mode::AnswerOnly: return "answer_only";
    case Mode::Combined: return "combined";
  }
  return "toolsrl";
}

std::optional<Mode> mode_from_string(std::string_view s) {
  for (Mode m : {Mode::ToolSrl, Mode::AccuracyOnly, Mode::ToolConditioned, Mode::GlobalOnly, Mode::AnswerOnly,
                 Mode::Combined}) {
    if (to_string(m) == s) return m;
  }
  if (s == "accuracy-only") return Mode::AccuracyOnly;
  if (s == "tool-conditioned") return Mode::ToolConditioned;
  if (s == "global-only") return Mode::GlobalOnly;
  if (s == "answer-only") return Mode::AnswerOnly;
  return std::nullopt;
}

Curriculum::Curriculum(RunOptions options) : opt_(std::move(options)) {
  opt_.grpo.validate();
  opt_.rewards.validate();
}

namespace {

// Whether `mode` trains on tool rewards during `phase`.
bool uses_tool_rewards(Mode mode, int phase) {
  switch (mode) {
    case Mode::ToolSrl:
    case Mode::GlobalOnly:
    case Mode::AnswerOnly: return phase == 1;
    case Mode::Combined: return true;
    default: return false;
  }
}

}  // namespace

Scored Curriculum::score(const TaskInstance& inst, const Episode& ep, Mode mode, int phase) {
  const auto parsed = trace::parse_trace(ep.trace_text());
  const bool tools = uses_tool_rewards(mode, phase);
  rewards::EpisodeTargets targets{&inst.gt, &inst.target};
  if (tools) ++tool_reward_evaluations_;
  Scored out;
  out.breakdown = rewards::score_episode(tools ? 1 : 2, inst.task, parsed, *ep.state, targets, opt_.rewards, &judge_);
  const auto& b = out.breakdown;
  if (!tools) {
    out.answer = b.answer;
  } else if (ep.answered) {
    out.answer = rewards::answer_reward(trace::parse_answer(ep.answer), inst.target, inst.task, judge_);
  }
  switch (mode) {
    case Mode::ToolSrl: out.train_reward = phase == 1 ? b.final_stage1 : b.final_stage2; break;
    case Mode::AccuracyOnly: out.train_reward = b.final_stage2; break;
    case Mode::ToolConditioned:
      out.train_reward = b.final_stage2 + rewards::tool_conditioned_reward(b.answer, b.tool_calls);
      break;
    case Mode::GlobalOnly: out.train_reward = phase == 1 ? b.global_tool + b.format : b.final_stage2; break;
    case Mode::AnswerOnly: out.train_reward = phase == 1 ? b.answer_tool + b.format : b.final_stage2; break;
    case Mode::Combined: out.train_reward = b.final_stage1 + out.answer; break;
  }
  return out;
}

RunResult Curriculum::run(Mode mode) {
  RunResult result;
  const auto& g = opt_.grpo;
  const std::size_t prompts = static_cast<std::size_t>(g.prompts_per_step);
  const std::size_t group = static_cast<std::size_t>(g.group_size);
  const std::size_t before = tool_reward_evaluations_;

  for (int phase = 1; phase <= 2; ++phase) {
    for (int s = 0; s < g.steps_per_stage; ++s) {
      const int step = (phase - 1) * g.steps_per_stage + s;
      std::vector<Episode> episodes;
      episodes.reserve(prompts * group);
      std::vector<double> advantages;
      StepMetrics m;
      m.step = step;
      m.mode = mode;
      m.seed = opt_.seed;
      const bool log_step = opt_.log_every > 0 && step % opt_.log_every == 0;

      for (std::size_t p = 0; p < prompts; ++p) {
        const std::uint64_t prompt_id = static_cast<std::uint64_t>(step) * prompts + p;
        const auto inst = make_instance(derive_seed(opt_.seed, 0x1A57, prompt_id), opt_.env);
        std::vector<double> rewards;
        for (std::size_t k = 0; k < group; ++k) {
          Rng rng(derive_seed(opt_.seed, 0x6E00 + prompt_id, k));
          episodes.push_back(rollout(inst, result.policy, opt_.env, rng, uses_tool_rewards(mode, phase) ? 1 : 2));
          const auto& ep = episodes.back();
          const auto scored = score(inst, ep, mode, phase);
          rewards.push_back(scored.train_reward);
          m.mean_reward += scored.train_reward;
          m.accuracy += scored.answer;
          m.mean_tool_calls += static_cast<double>(ep.tools_used.size());
          for (auto t : ep.tools_used) {
            const auto idx = static_cast<std::size_t>(
                std::find(tools::kAllTools.begin(), tools::kAllTools.end(), t) - tools::kAllTools.begin());
            m.per_tool[idx] += 1.0;
          }
          if (log_step && p == 0) {
            const int stage = uses_tool_rewards(mode, phase) ? 1 : 2;
            json rec;
            rec["request"] = episode_request(fmt::format("sim-{}-{}-{}-{}", to_string(mode), opt_.seed, step, k), stage,
                                             inst, ep, opt_.env);
            rec["breakdown"] = scored.breakdown.to_json();
            rec["train_reward"] = scored.train_reward;
            result.logged.push_back(std::move(rec));
          }
        }
        const auto adv = grpo_advantages(rewards, g.eps_std);
        advantages.insert(advantages.end(), adv.begin(), adv.end());
      }

      std::vector<Sample> samples;
      for (std::size_t i = 0; i < episodes.size(); ++i) {
        if (advantages[i] == 0.0) continue;
        for (const auto& d : episodes[i].decisions) samples.push_back({&d, advantages[i]});
      }
      grpo_update(result.policy, samples, g);

      const double n = static_cast<double>(episodes.size());
      m.mean_reward /= n;
      m.accuracy /= n;
      m.mean_tool_calls /= n;
      for (double& v : m.per_tool) v /= n;
      result.steps.push_back(m);
    }
  }
  result.tool_reward_evaluations = tool_reward_evaluations_ - before;
  return result;
}

json episode_request(const std::string& id, int stage, const TaskInstance& inst, const Episode& ep,
                     const EnvConfig& cfg) {
  json req = {
      {"id", id},
      {"stage", stage},
      {"task", std::string(toolsup::to_string(inst.task))},
      {"trajectory", ep.trace_text()},
      {"image_size", {cfg.width, cfg.height}},
      {"ground_truth", rewards::ground_truth_to_json(inst.gt)},
      {"question", inst.question},
  };
  if (inst.target.values.empty()) {
    req["answer"] = inst.target.text;
  } else {
    req["answer"] = inst.target.values.size() == 1 ? json(inst.target.values[0]) : json(inst.target.values);
    req["answer_range"] = inst.target.ranges.size() == 1 ? json(inst.target.ranges[0]) : json(inst.target.ranges);
  }
  return req;
}

void write_metrics_csv(std::ostream& out, const std::vector<StepMetrics>& steps, bool header) {
  if (header) {
    out << "step,mode,seed,mean_reward,mean_tool_calls,accuracy,zoom,rotate,flip,draw_hline,draw_vline,mark_points\n";
  }
  for (const auto& m : steps) {
    out << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g}", m.step, to_string(m.mode), m.seed, m.mean_reward,
                       m.mean_tool_calls, m.accuracy);
    for (double v : m.per_tool) out << fmt::format(",{:.17g}", v);
    out << '\n';
  }
}

std::vector<StepMetrics> read_metrics_csv(std::istream& in) {
  std::vector<StepMetrics> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first && line.rfind("step,", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 12) throw Error(ErrorCode::MalformedRequest, fmt::format("metrics row has {} columns", cells.size()));
    StepMetrics m;
    try {
      m.step = std::stoi(cells[0]);
      const auto mode = mode_from_string(cells[1]);
      if (!mode) throw Error(ErrorCode::MalformedRequest, "unknown mode " + cells[1]);
      m.mode = *mode;
      m.seed = std::stoull(cells[2]);
      m.mean_reward = std::stod(cells[3]);
      m.mean_tool_calls = std::stod(cells[4]);
      m.accuracy = std::stod(cells[5]);
      for (std::size_t i = 0; i < 6; ++i) m.per_tool[i] = std::stod(cells[6 + i]);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::MalformedRequest, "bad metrics row: " + line);
    }
    out.push_back(m);
  }
  return out;
}

RunSummary summarize(const std::vector<StepMetrics>& steps, int steps_per_stage, int tail) {
  RunSummary s;
  std::size_t n2 = 0;
  for (const auto& m : steps) {
    if (m.step >= steps_per_stage) {
      s.stage2_tool_calls += m.mean_tool_calls;
      ++n2;
    }
  }
  if (n2 > 0) s.stage2_tool_calls /= static_cast<double>(n2);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(tail, 1)), steps.size());
  for (std::size_t i = steps.size() - k; i < steps.size(); ++i) s.final_answer += steps[i].accuracy;
  if (k > 0) s.final_answer /= static_cast<double>(k);
  return s;
}

}  // namespace toolsup::currsim
