#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "toolsup/currsim.hpp"
#include "toolsup/score.hpp"

namespace toolsup::currsim {
namespace {

TEST(Grpo, AdvantagesAreStandardized) {
  const auto adv = grpo_advantages({1, 2, 3, 4}, 1e-6);
  double mean = 0, var = 0;
  for (double a : adv) mean += a;
  mean /= 4;
  for (double a : adv) var += (a - mean) * (a - mean);
  EXPECT_NEAR(mean, 0, 1e-12);
  EXPECT_NEAR(var / 4, 1, 1e-12);
  EXPECT_GT(adv[3], adv[0]);
  for (double a : grpo_advantages({0.5, 0.5, 0.5}, 1e-6)) EXPECT_EQ(a, 0.0);
  EXPECT_TRUE(grpo_advantages({}, 1e-6).empty());
}

TEST(Grpo, ConfigValidation) {
  GrpoConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.clip = -0.1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.group_size = 1;
  EXPECT_THROW(cfg.validate(), Error);
}

struct Batch {
  Policy old_policy;
  Policy policy;
  std::vector<Episode> episodes;
  std::vector<Sample> samples;
};

Batch make_batch(std::uint64_t seed) {
  Batch b;
  Rng init(seed);
  for (auto& t : b.old_policy.theta()) t = 0.3 * init.normal();
  EnvConfig env;
  Rng rng(seed + 1);
  for (int i = 0; i < 6; ++i) {
    const auto inst = make_instance(derive_seed(seed, 7, static_cast<std::uint64_t>(i)), env);
    b.episodes.push_back(rollout(inst, b.old_policy, env, rng));
  }
  b.policy = b.old_policy;
  for (auto& t : b.policy.theta()) t += 0.05 * init.normal();
  for (const auto& ep : b.episodes) {
    const double adv = init.uniform(-1.5, 1.5);
    for (const auto& d : ep.decisions) b.samples.push_back({&d, adv});
  }
  return b;
}

TEST(Grpo, SurrogateGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed : {3u, 4u, 5u}) {
    Batch b = make_batch(seed);
    std::vector<double> grad;
    surrogate(b.policy, b.samples, 0.2, &grad);
    std::vector<std::size_t> touched;
    for (std::size_t i = 0; i < grad.size(); ++i)
      if (grad[i] != 0.0) touched.push_back(i);
    ASSERT_FALSE(touched.empty());
    const double h = 1e-6;
    for (std::size_t idx : touched) {
      Policy plus = b.policy, minus = b.policy;
      plus.theta()[idx] += h;
      minus.theta()[idx] -= h;
      const double fd = (surrogate(plus, b.samples, 0.2) - surrogate(minus, b.samples, 0.2)) / (2 * h);
      EXPECT_LE(std::abs(fd - grad[idx]), 1e-4 * std::max(std::abs(fd), 1e-3)) << idx;
    }
  }
}

TEST(Grpo, UpdateIncreasesSurrogate) {
  Batch b = make_batch(8);
  b.policy = b.old_policy;
  const double before = surrogate(b.policy, b.samples, 0.2);
  GrpoConfig cfg;
  cfg.learning_rate = 0.5;
  grpo_update(b.policy, b.samples, cfg);
  EXPECT_GT(surrogate(b.policy, b.samples, 0.2), before);
}

TEST(Policy, ProbabilitiesNormalize) {
  Policy p;
  Rng rng(1);
  for (auto& t : p.theta()) t = rng.normal();
  Observation obs;
  obs.key = 5;
  obs.features = {0, 3, 7, 20, 21};
  const auto probs = p.probabilities(obs);
  double sum = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    sum += probs[i];
    EXPECT_NEAR(std::log(probs[i]), p.log_prob(obs, i), 1e-12);
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Env, InstancesAreDeterministicAndWellFormed) {
  EnvConfig env;
  std::array<int, 4> kinds{};
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto a = make_instance(s, env);
    const auto b = make_instance(s, env);
    EXPECT_EQ(rewards::ground_truth_to_json(a.gt), rewards::ground_truth_to_json(b.gt));
    EXPECT_EQ(a.question, b.question);
    ASSERT_GE(a.answer_options.size(), 2u);
    int correct = 0;
    for (const auto& c : a.tools) correct += c.correct;
    EXPECT_GE(correct, 1);
    switch (a.task) {
      case TaskKind::Zoom: kinds[0]++; break;
      case TaskKind::RotFlip: kinds[1]++; break;
      case TaskKind::ReadValue: kinds[2]++; break;
      case TaskKind::CompareCount: kinds[3]++; break;
      default: ADD_FAILURE();
    }
  }
  for (int k : kinds) EXPECT_GT(k, 20);
}

TEST(Env, RolloutDeterministicAndBounded) {
  EnvConfig env;
  Policy p;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto inst = make_instance(s, env);
    Rng r1(s), r2(s);
    const auto a = rollout(inst, p, env, r1);
    const auto b = rollout(inst, p, env, r2);
    EXPECT_EQ(a.trace_text(), b.trace_text());
    EXPECT_LE(a.decisions.size(), static_cast<std::size_t>(env.horizon));
    const auto parsed = trace::parse_trace(a.trace_text());
    if (a.answered) EXPECT_TRUE(parsed.violations.empty()) << a.trace_text();
    EXPECT_EQ(parsed.trajectory.tool_calls().size(), a.tools_used.size());
  }
}

TEST(Curriculum, StageOneScoreMatchesService) {
  RunOptions opt;
  Curriculum cur(opt);
  svc::ScoreContext ctx;
  rewards::ExactMatchJudge judge;
  ctx.judge = &judge;
  Policy p;
  Rng rng(17);
  for (std::uint64_t s = 0; s < 60; ++s) {
    const auto inst = make_instance(s, opt.env);
    for (int stage : {1, 2}) {
      const auto ep = rollout(inst, p, opt.env, rng, stage);
      const auto req = episode_request("e", stage, inst, ep, opt.env);
      const auto resp = svc::score_one(req, ctx);
      ASSERT_TRUE(resp["ok"].get<bool>()) << resp.dump();
      const auto scored = cur.score(inst, ep, Mode::ToolSrl, stage);
      if (stage == 1) {
        EXPECT_NEAR(resp["breakdown"]["final_stage1"].get<double>(), scored.breakdown.final_stage1, 1e-12);
        EXPECT_NEAR(scored.train_reward, scored.breakdown.final_stage1, 1e-12);
      } else {
        EXPECT_NEAR(resp["breakdown"]["answer"].get<double>(), scored.answer, 1e-12);
      }
    }
  }
}

TEST(Curriculum, ModeRewards) {
  RunOptions opt;
  Curriculum cur(opt);
  Policy p;
  Rng rng(3);
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto inst = make_instance(s, opt.env);
    const auto ep = rollout(inst, p, opt.env, rng, 2);
    const auto acc = cur.score(inst, ep, Mode::AccuracyOnly, 2);
    EXPECT_NEAR(acc.train_reward, acc.answer + acc.breakdown.format, 1e-12);
    const auto tc = cur.score(inst, ep, Mode::ToolConditioned, 2);
    EXPECT_NEAR(tc.train_reward, acc.train_reward + rewards::tool_conditioned_reward(acc.answer, ep.tools_used.size()), 1e-12);
    const auto ep1 = rollout(inst, p, opt.env, rng, 1);
    const auto g = cur.score(inst, ep1, Mode::GlobalOnly, 1);
    EXPECT_NEAR(g.train_reward, g.breakdown.global_tool + g.breakdown.format, 1e-12);
    const auto a = cur.score(inst, ep1, Mode::AnswerOnly, 1);
    EXPECT_NEAR(a.train_reward, a.breakdown.answer_tool + a.breakdown.format, 1e-12);
  }
}

TEST(Curriculum, ShortRunIsDeterministic) {
  RunOptions opt;
  opt.grpo.steps_per_stage = 3;
  opt.seed = 2;
  opt.log_every = 2;
  const auto a = Curriculum(opt).run(Mode::ToolSrl);
  const auto b = Curriculum(opt).run(Mode::ToolSrl);
  ASSERT_EQ(a.steps.size(), 6u);
  EXPECT_EQ(a.policy.theta(), b.policy.theta());
  EXPECT_GT(a.tool_reward_evaluations, 0u);
  EXPECT_FALSE(a.logged.empty());
  const auto acc = Curriculum(opt).run(Mode::AccuracyOnly);
  EXPECT_EQ(acc.tool_reward_evaluations, 0u);
}

TEST(Metrics, CsvRoundTripAndSummary) {
  std::vector<StepMetrics> steps;
  for (int i = 0; i < 6; ++i) {
    StepMetrics m;
    m.step = i;
    m.mode = Mode::Combined;
    m.seed = 4;
    m.mean_reward = 0.1 * i + 1.0 / 3.0;
    m.mean_tool_calls = i < 3 ? 1.0 : 2.0;
    m.accuracy = 0.25 * (i % 3);
    m.per_tool = {0.1, 0.2, 0.3, 0.4, 0.5, 1.0 / 7.0};
    steps.push_back(m);
  }
  std::stringstream ss;
  write_metrics_csv(ss, steps);
  const auto back = read_metrics_csv(ss);
  ASSERT_EQ(back.size(), steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    EXPECT_EQ(back[i].mean_reward, steps[i].mean_reward);
    EXPECT_EQ(back[i].per_tool, steps[i].per_tool);
    EXPECT_EQ(back[i].mode, Mode::Combined);
  }
  const auto s = summarize(steps, 3, 2);
  EXPECT_EQ(s.stage2_tool_calls, 2.0);
  EXPECT_DOUBLE_EQ(s.final_answer, (0.25 + 0.5) / 2);
  std::stringstream bad("step,mode\n1,toolsrl,0\n");
  EXPECT_THROW(read_metrics_csv(bad), Error);
}

TEST(Modes, Names) {
  for (Mode m : {Mode::ToolSrl, Mode::AccuracyOnly, Mode::ToolConditioned, Mode::GlobalOnly, Mode::AnswerOnly,
                 Mode::Combined})
    EXPECT_EQ(mode_from_string(to_string(m)), m);
  EXPECT_EQ(mode_from_string("accuracy-only"), Mode::AccuracyOnly);
  EXPECT_FALSE(mode_from_string("ppo"));
}

}  // namespace
}  // namespace toolsup::currsim
