#include <gtest/gtest.h>

#include <thread>

#include "httplib.h"
#include "oracles.hpp"
#include "toolsup/anls.hpp"
#include "toolsup/error.hpp"
#include "toolsup/hungarian.hpp"
#include "toolsup/judge.hpp"
#include "toolsup/rewards.hpp"
#include "toolsup/rng.hpp"

namespace toolsup::rewards {
namespace {

using raster::BBox;

BBox random_box(Rng& rng, int size) {
  const int x1 = static_cast<int>(rng.uniform_int(0, size - 1));
  const int y1 = static_cast<int>(rng.uniform_int(0, size - 1));
  return {x1, y1, static_cast<int>(rng.uniform_int(x1 + 1, size)), static_cast<int>(rng.uniform_int(y1 + 1, size))};
}

TEST(ModF1, WorkedCases) {
  const BBox g{0, 0, 10, 10};
  const BBox b{0, 0, 20, 20};
  EXPECT_DOUBLE_EQ(modf1(b, g, 0.1, 1.0), 200.0 / 230.0);
  EXPECT_DOUBLE_EQ(modf1(b, g, 1.0, 1.0), 0.4);
  EXPECT_EQ(modf1(g, g, 0.1, 1.0), 1.0);
  EXPECT_EQ(modf1(g, {10, 0, 20, 10}, 0.1, 1.0), 0.0);
}

TEST(ModF1, MatchesPixelMasks) {
  Rng rng(31);
  for (int i = 0; i < 300; ++i) {
    const BBox b = random_box(rng, 32);
    const BBox g = random_box(rng, 32);
    const double w_fp = rng.uniform(0.05, 2.0);
    const double w_fn = rng.uniform(0.05, 2.0);
    EXPECT_EQ(modf1(b, g, w_fp, w_fn),
              oracle::mask_modf1({b.x1, b.y1, b.x2, b.y2}, {g.x1, g.y1, g.x2, g.y2}, w_fp, w_fn, 32));
  }
}

TEST(ModF1, UnitWeightsGiveDice) {
  Rng rng(32);
  for (int i = 0; i < 200; ++i) {
    const BBox b = random_box(rng, 40);
    const BBox g = random_box(rng, 40);
    const double tp = static_cast<double>(b.intersect(g).area());
    EXPECT_NEAR(modf1(b, g, 1, 1), 2 * tp / static_cast<double>(b.area() + g.area()), 1e-15);
  }
}

TEST(ModF1, MonotoneInFalsePositiveWeight) {
  Rng rng(33);
  for (int i = 0; i < 200; ++i) {
    const BBox b = random_box(rng, 40);
    const BBox g = random_box(rng, 40);
    double prev = 2.0;
    for (double w = 0.05; w < 3; w += 0.25) {
      const double s = modf1(b, g, w, 1.0);
      EXPECT_LE(s, prev + 1e-15);
      prev = s;
    }
  }
}

TEST(ZoomReward, MaxOverGroundTruthAndBinarize) {
  RewardConfig cfg;
  EXPECT_EQ(zoom_reward({0, 0, 10, 10}, {{50, 50, 60, 60}, {0, 0, 10, 10}}, cfg), 1.0);
  EXPECT_NEAR(zoom_reward({0, 0, 20, 20}, {{0, 0, 10, 10}}, cfg), 0.8695652173913043, 1e-15);
  cfg.zoom_binarize = true;
  EXPECT_EQ(zoom_reward({0, 0, 20, 20}, {{0, 0, 10, 10}}, cfg), 1.0);
  cfg.w_fp = 1.0;
  EXPECT_EQ(zoom_reward({0, 0, 20, 20}, {{0, 0, 10, 10}}, cfg), 0.0);
  cfg.zoom_threshold = 0.4;
  EXPECT_EQ(zoom_reward({0, 0, 20, 20}, {{0, 0, 10, 10}}, cfg), 1.0);
}

TEST(OrientationReward, InversePairsScoreOne) {
  using tools::Orientation;
  const Orientation r90 = Orientation::rotation(1);
  EXPECT_EQ(orientation_reward(tools::compose(Orientation::rotation(3), r90), Orientation::identity()), 1.0);
  EXPECT_EQ(orientation_reward(tools::compose(Orientation::rotation(2), Orientation::hflip()), Orientation::identity()),
            0.0);
  Orientation skew;
  skew.non_axis_aligned = true;
  EXPECT_EQ(orientation_reward(skew, Orientation::identity()), 0.0);
}

TEST(Similarity, MarginsAndKinds) {
  const double W = 400, H = 200;
  EXPECT_EQ(primitive_similarity(Primitive::x_line(100), Primitive::x_line(100), W, H), 1.0);
  EXPECT_DOUBLE_EQ(primitive_similarity(Primitive::x_line(150), Primitive::x_line(100), W, H), 0.5);
  EXPECT_DOUBLE_EQ(primitive_similarity(Primitive::y_line(75), Primitive::y_line(100), W, H), 0.5);
  EXPECT_EQ(primitive_similarity(Primitive::x_line(300), Primitive::x_line(100), W, H), 0.0);
  const double tp = std::hypot(100.0, 50.0);
  EXPECT_EQ(primitive_similarity(Primitive::point(0, 0), Primitive::point(100, 50), W, H), 0.0);
  EXPECT_NEAR(primitive_similarity(Primitive::point(0, 0), Primitive::point(30, 40), W, H), 1 - 50 / tp, 1e-15);
  EXPECT_EQ(primitive_similarity(Primitive::x_line(100), Primitive::point(100, 0), W, H), 0.0);
  EXPECT_EQ(primitive_similarity(Primitive::x_line(100), Primitive::y_line(100), W, H), 0.0);
}

TEST(DrawReward, WorkedCases) {
  const double W = 400, H = 200;
  const std::vector<Primitive> gts = {Primitive::x_line(100), Primitive::y_line(50)};
  EXPECT_EQ(draw_reward(gts, gts, W, H).reward, 1.0);
  const std::vector<Primitive> preds = {Primitive::x_line(100), Primitive::y_line(75)};
  auto s = draw_reward(preds, gts, W, H);
  EXPECT_DOUBLE_EQ(s.match.s_tp, 1.5);
  EXPECT_DOUBLE_EQ(s.reward, 0.75);
  EXPECT_EQ(draw_reward({}, gts, W, H).reward, 0.0);
  EXPECT_EQ(draw_reward({}, {}, W, H).reward, 0.0);
  EXPECT_DOUBLE_EQ(draw_reward({Primitive::x_line(100)}, gts, W, H).reward, 2.0 / 3.0);
}

TEST(DrawReward, PairsListEveryAssignedRow) {
  auto m = hungarian_match({Primitive::point(0, 0), Primitive::x_line(5)}, {Primitive::point(1, 0)}, 100, 100);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0].pred, 0u);
  auto z = hungarian_match({Primitive::x_line(5)}, {Primitive::y_line(5)}, 100, 100);
  ASSERT_EQ(z.pairs.size(), 1u);
  EXPECT_EQ(z.pairs[0].similarity, 0.0);
  EXPECT_EQ(z.s_tp, 0.0);
}

TEST(DrawReward, DiscreteBoundary) {
  const std::vector<Primitive> gt = {Primitive::x_line(100)};
  EXPECT_EQ(draw_reward_discrete({Primitive::x_line(109.5)}, gt).reward, 1.0);
  EXPECT_EQ(draw_reward_discrete({Primitive::x_line(110)}, gt).reward, 0.0);
  EXPECT_EQ(draw_reward_discrete({Primitive::x_line(100)}, gt).reward, 1.0);
  EXPECT_EQ(draw_reward_discrete({Primitive::x_line(125)}, gt).reward, 0.0);
  EXPECT_EQ(draw_reward_discrete({Primitive::point(106, 8)}, {Primitive::point(100, 0)}).reward, 0.0);
  EXPECT_EQ(draw_reward_discrete({Primitive::point(105, 8)}, {Primitive::point(100, 0)}).reward, 1.0);
}

std::vector<Primitive> random_primitives(Rng& rng, std::size_t n) {
  std::vector<Primitive> out;
  for (std::size_t i = 0; i < n; ++i) {
    switch (rng.uniform_int(0, 2)) {
      case 0: out.push_back(Primitive::x_line(rng.uniform(0, 200))); break;
      case 1: out.push_back(Primitive::y_line(rng.uniform(0, 100))); break;
      default: out.push_back(Primitive::point(rng.uniform(0, 200), rng.uniform(0, 100)));
    }
  }
  return out;
}

TEST(DrawReward, BoundedAndPermutationSymmetric) {
  Rng rng(34);
  for (int i = 0; i < 300; ++i) {
    auto preds = random_primitives(rng, static_cast<std::size_t>(rng.uniform_int(0, 5)));
    auto gts = random_primitives(rng, static_cast<std::size_t>(rng.uniform_int(1, 5)));
    const double r = draw_reward(preds, gts, 200, 100).reward;
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    rng.shuffle(preds);
    rng.shuffle(gts);
    EXPECT_NEAR(draw_reward(preds, gts, 200, 100).reward, r, 1e-12);
    EXPECT_EQ(draw_reward(gts, gts, 200, 100).reward, 1.0);
  }
}

TEST(Hungarian, MatchesBruteForce) {
  Rng rng(35);
  for (int i = 0; i < 300; ++i) {
    const auto rows = static_cast<std::size_t>(rng.uniform_int(0, 5));
    const auto cols = static_cast<std::size_t>(rng.uniform_int(0, 5));
    WeightMatrix w(rows, cols);
    std::vector<std::vector<double>> dense(rows, std::vector<double>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double v = rng.bernoulli(0.3) ? static_cast<double>(rng.uniform_int(0, 2)) / 2 : rng.uniform();
        w(r, c) = dense[r][c] = v;
      }
    }
    const auto got = max_weight_assignment(w);
    const auto want = oracle::brute_force_assignment(dense);
    EXPECT_NEAR(got.total, want.total, 1e-9);
    EXPECT_EQ(got.row_to_col, want.row_to_col);
  }
}

TEST(Hungarian, TieBreakIsLexicographic) {
  WeightMatrix w(2, 2, 1.0);
  const auto a = max_weight_assignment(w);
  EXPECT_EQ(a.row_to_col, (std::vector<std::optional<std::size_t>>{0, 1}));
  WeightMatrix z(2, 3, 0.0);
  EXPECT_EQ(max_weight_assignment(z).row_to_col, (std::vector<std::optional<std::size_t>>{0, 1}));
  WeightMatrix tall(3, 1, 0.0);
  tall(2, 0) = 1.0;
  EXPECT_EQ(max_weight_assignment(tall).row_to_col,
            (std::vector<std::optional<std::size_t>>{std::nullopt, std::nullopt, 0}));
}

TEST(Aggregate, StageOneFixtures) {
  const std::vector<double> per = {0.2, 0.9, 0.4};
  auto a = stage1_aggregate(per, {2}, 0.5);
  EXPECT_DOUBLE_EQ(a.global, 0.9);
  EXPECT_DOUBLE_EQ(a.answer, 0.9);
  EXPECT_DOUBLE_EQ(a.final, 1.4);
  a = stage1_aggregate(per, {3}, 0.5);
  EXPECT_DOUBLE_EQ(a.answer, 0.4);
  EXPECT_DOUBLE_EQ(a.final, 1.15);
  a = stage1_aggregate(per, {std::nullopt}, 0.5);
  EXPECT_EQ(a.answer, 0.0);
  EXPECT_DOUBLE_EQ(a.final, 0.95);
  a = stage1_aggregate(per, {0}, 0.0);
  EXPECT_EQ(a.answer, 0.0);
  a = stage1_aggregate(per, {1, 2, std::nullopt}, 0.0);
  EXPECT_DOUBLE_EQ(a.answer, (0.2 + 0.9) / 3);
  a = stage1_aggregate({}, {0}, 0.5);
  EXPECT_EQ(a.final, 0.5);
}

TEST(Aggregate, StageOneBounds) {
  Rng rng(36);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> per(static_cast<std::size_t>(rng.uniform_int(0, 6)));
    for (auto& v : per) v = rng.uniform();
    std::vector<std::optional<std::size_t>> idx;
    for (int k = 0; k < rng.uniform_int(1, 3); ++k) idx.emplace_back(rng.uniform_int(0, 7));
    const auto a = stage1_aggregate(per, idx, 0.5);
    EXPECT_GE(a.final, 0.0);
    EXPECT_LE(a.final, 1.5);
    for (double v : per) EXPECT_GE(a.global, v);
  }
}

TEST(Aggregate, StageTwoAndToolConditioned) {
  EXPECT_EQ(stage2_final(1, 0.5), 1.5);
  EXPECT_EQ(stage2_final(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(stage2_final(0.9, 0.5), 1.4);
  EXPECT_DOUBLE_EQ(s_norm(12, 10, 20), 0.9);
  EXPECT_EQ(s_norm(10, 10, 20), 1.0);
  EXPECT_EQ(s_norm(40, 10, 20), 0.0);
  EXPECT_EQ(s_norm(30, 10, 20), 0.0);
  EXPECT_THROW(s_norm(1, 1, 0), Error);
  EXPECT_EQ(tool_conditioned_reward(1.0, 2), 1.0);
  EXPECT_EQ(tool_conditioned_reward(1.0, 0), 0.0);
  EXPECT_EQ(tool_conditioned_reward(0.5, 3), 0.0);
}

TEST(Numbers, Extraction) {
  EXPECT_EQ(extract_numbers("x = 12, y=-3.5 and +4"), (std::vector<double>{12, -3.5, 4}));
  EXPECT_EQ(extract_numbers("the 3rd point is at (15,10)."), (std::vector<double>{3, 15, 10}));
  EXPECT_EQ(extract_numbers("v2 a1.5 7."), (std::vector<double>{7}));
  EXPECT_TRUE(extract_numbers("none").empty());
}

TEST(AnswerReward, SyntheticAndJudged) {
  ExactMatchJudge judge;
  AnswerTarget t;
  t.values = {10};
  t.ranges = {20};
  EXPECT_DOUBLE_EQ(answer_reward(trace::parse_answer("12"), t, TaskKind::ReadValue, judge), 0.9);
  EXPECT_EQ(answer_reward(trace::parse_answer("unknown"), t, TaskKind::ReadValue, judge), 0.0);
  t.values = {10, 20};
  t.ranges = {20, 40};
  EXPECT_DOUBLE_EQ(answer_reward(trace::parse_answer("(12, 20)"), t, TaskKind::ReadValue, judge), 0.95);
  EXPECT_EQ(answer_reward(trace::parse_answer("12"), t, TaskKind::ReadValue, judge), 0.0);
  AnswerTarget q;
  q.text = "Red Car";
  EXPECT_EQ(answer_reward(trace::parse_answer("  red   car "), q, TaskKind::Qa, judge), 1.0);
  EXPECT_EQ(answer_reward(trace::parse_answer("blue car"), q, TaskKind::Qa, judge), 0.0);
}

TEST(GroundTruth, JsonRoundTrip) {
  const std::vector<GroundTruth> gts = {
      ZoomGT{{{1, 2, 3, 4}, {0, 0, 10, 10}}},
      RotFlipGT{tools::Orientation::rotation(3)},
      DrawGT{{Primitive::x_line(4), Primitive::y_line(5.5), Primitive::point(1, 2)}},
  };
  for (const auto& gt : gts) {
    const auto j = ground_truth_to_json(gt);
    EXPECT_EQ(ground_truth_to_json(ground_truth_from_json(j)), j);
  }
  EXPECT_THROW(ground_truth_from_json({{"kind", "zoom"}, {"boxes", {{1, 1, 1, 5}}}}), Error);
  EXPECT_THROW(ground_truth_from_json({{"kind", "rotflip"}, {"o_star", "r45"}}), Error);
  EXPECT_THROW(ground_truth_from_json({{"kind", "draw"}, {"primitives", {{{"kind", "circle"}}}}}), Error);
  EXPECT_THROW(ground_truth_from_json({{"kind", "mask"}}), Error);
}

TEST(RewardConfig, Validation) {
  RewardConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.w_fp = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.zoom_threshold = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(EpisodeScore, StageOneZoomBreakdown) {
  auto parsed = trace::parse_trace(
      R"(<think>a</think><tool_call>{"name":"image_zoom_in_tool","arguments":{"bbox_2d":[0,0,20,20]}}</tool_call>)"
      R"(<think>b</think><tool_call>{"name":"image_zoom_in_tool","arguments":{"bbox_2d":[0,0,10,10],"target_image":0}}</tool_call>)"
      "<think>c</think><answer>image 1</answer>");
  ASSERT_TRUE(parsed.violations.empty());
  auto state = tools::EpisodeState::geometry_only(100, 100);
  for (const auto& c : parsed.trajectory.tool_calls()) state = state.apply(c);
  GroundTruth gt = ZoomGT{{{0, 0, 10, 10}}};
  auto b = score_episode(1, TaskKind::Zoom, parsed, state, {&gt, nullptr}, {}, nullptr);
  ASSERT_EQ(b.per_state.size(), 2u);
  EXPECT_DOUBLE_EQ(b.per_state[0], 200.0 / 230.0);
  EXPECT_EQ(b.per_state[1], 1.0);
  EXPECT_EQ(b.global_tool, 1.0);
  EXPECT_DOUBLE_EQ(b.answer_tool, 200.0 / 230.0);
  EXPECT_DOUBLE_EQ(b.final_stage1, 0.5 * (1.0 + 200.0 / 230.0) + 0.5);
  const auto j = b.to_json();
  EXPECT_FALSE(j.contains("answer"));
  EXPECT_EQ(j["tool_calls"], 2);
  EXPECT_THROW(score_episode(2, TaskKind::Zoom, parsed, state, {&gt, nullptr}, {}, nullptr), Error);
}

TEST(EpisodeScore, StageTwoNeedsJudgeForOpenTasks) {
  auto parsed = trace::parse_trace("<think>a</think><answer>red</answer>");
  auto state = tools::EpisodeState::geometry_only(10, 10);
  AnswerTarget t;
  t.text = "red";
  try {
    score_episode(2, TaskKind::Qa, parsed, state, {nullptr, &t}, {}, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::JudgeUnavailable);
  }
  ExactMatchJudge judge;
  auto b = score_episode(2, TaskKind::Qa, parsed, state, {nullptr, &t}, {}, &judge);
  EXPECT_EQ(b.answer, 1.0);
  EXPECT_EQ(b.final_stage2, 1.5);
}

TEST(Anls, WorkedCases) {
  const std::vector<std::string> hello = {"hello"};
  EXPECT_EQ(anls("hello", hello), 1.0);
  EXPECT_EQ(anls("  HeLLo ", hello), 1.0);
  EXPECT_DOUBLE_EQ(anls("hallo", hello), 0.8);
  EXPECT_EQ(anls("xyz", hello), 0.0);
  const std::vector<std::string> ten = {"abcdefghij"};
  EXPECT_EQ(anls("abcdXXXXXX", ten), 0.0);
  EXPECT_DOUBLE_EQ(anls("abcdeXXXXX", ten), 0.0);
  EXPECT_DOUBLE_EQ(anls("abcdefXXXX", ten), 0.6);
  const std::vector<std::string> two = {"cat", "hello"};
  EXPECT_DOUBLE_EQ(anls("hallo", two), 0.8);
  EXPECT_EQ(levenshtein("caf\xc3\xa9", "cafe"), 1u);
  EXPECT_EQ(anls("", std::vector<std::string>{""}), 1.0);
}

TEST(Anls, MatchesEditDistanceOracle) {
  Rng rng(37);
  const std::string alphabet = "abcAB ";
  for (int i = 0; i < 300; ++i) {
    auto gen = [&] {
      std::string s;
      for (int k = 0; k < rng.uniform_int(0, 8); ++k) s += alphabet[static_cast<std::size_t>(rng.uniform_int(0, 5))];
      return s;
    };
    const std::string a = gen();
    const std::vector<std::string> refs = {gen(), gen()};
    EXPECT_EQ(levenshtein(a, refs[0]), oracle::edit_distance(a, refs[0]));
    EXPECT_DOUBLE_EQ(anls(a, refs), oracle::anls_oracle(a, refs));
  }
}

TEST(Judge, PromptNamesAllParts) {
  const auto p = judge_prompt("Q?", "ans", "ref");
  EXPECT_NE(p.find("Q?"), std::string::npos);
  EXPECT_NE(p.find("ans"), std::string::npos);
  EXPECT_NE(p.find("ref"), std::string::npos);
}

TEST(Judge, HttpBridge) {
  httplib::Server server;
  server.Post("/judge", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    if (body["answer"] == "boom") {
      res.status = 500;
      return;
    }
    if (body["answer"] == "odd") {
      res.set_content(R"({"verdict":"maybe"})", "application/json");
      return;
    }
    const bool match = body["answer"] == body["target"] && body.contains("prompt");
    res.set_content(nlohmann::json{{"verdict", match ? "match" : "no_match"}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpJudge judge("127.0.0.1", port, "/judge", std::chrono::seconds(5));
  EXPECT_TRUE(judge.judge("q", "a", "a"));
  EXPECT_FALSE(judge.judge("q", "a", "b"));
  EXPECT_THROW(judge.judge("q", "boom", "a"), Error);
  EXPECT_THROW(judge.judge("q", "odd", "a"), Error);
  server.stop();
  t.join();
  HttpJudge dead("127.0.0.1", port, "/judge", std::chrono::milliseconds(300));
  try {
    dead.judge("q", "a", "a");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::JudgeUnavailable);
  }
}

}  // namespace
}  // namespace toolsup::rewards
