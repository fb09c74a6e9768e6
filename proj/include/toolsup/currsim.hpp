#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolsup/judge.hpp"
#include "toolsup/rewards.hpp"
#include "toolsup/rng.hpp"
#include "toolsup/task.hpp"
#include "toolsup/toolbox.hpp"
#include "toolsup/trace.hpp"

namespace toolsup::currsim {

// -- environment -----------------------------------------------------------

/// Action classes the policy distinguishes. Each concrete action is one
/// class plus a perceived "salient" bit.
enum class ActionClass {
  Zoom, Rotate90, Rotate180, Rotate270, FlipH, FlipV, HLine, VLine, Mark, AnswerHinted, AnswerOther
};
inline constexpr std::size_t kActionClasses = 11;
inline constexpr std::size_t kFeatures = kActionClasses * 2;

enum class LastAction { None, Zoom, Rotate, Flip, Line, Mark };
inline constexpr std::size_t kLastActions = 6;
inline constexpr std::size_t kTurnBuckets = 3;
inline constexpr std::size_t kToyTasks = 4;  // zoom, rotflip, read_value, compare_count
inline constexpr std::size_t kStateKeys = kToyTasks * kTurnBuckets * 2 * kLastActions;

struct EnvConfig {
  int width = 400;
  int height = 300;
  int horizon = 6;
  double p_salient_correct = 0.8;
  double p_salient_distractor = 0.2;
  double hint_with_evidence = 0.9;
  double hint_blind = 0.4;
  double hint_after_wrong_tool = 0.2;
};

struct Candidate {
  ActionClass cls;
  bool salient = false;
  bool correct = false;
  std::optional<tools::ToolCall> call;  // nullopt for answers
};

/// One prompt: a task with ground truth, candidate actions and the
/// pre-drawn environment randomness, so an episode is a deterministic
/// function of the instance and the chosen actions.
struct TaskInstance {
  TaskKind task = TaskKind::Zoom;
  std::string question;
  rewards::GroundTruth gt;
  tools::Orientation initial;  // augmentation of rotate/flip tasks
  rewards::AnswerTarget target;
  std::vector<std::string> answer_options;  // [0] is correct
  std::vector<Candidate> tools;              // every tool action offered
  std::array<bool, 3> hint_correct{};        // evidence / blind / wrong tool
  std::array<std::size_t, 3> hint_wrong_choice{};  // distractor used when a hint is wrong
  std::size_t other_choice = 1;              // option index used by AnswerOther
};

TaskInstance make_instance(std::uint64_t seed, const EnvConfig& cfg);

struct Observation {
  std::size_t key = 0;                 // state-feature index
  std::vector<std::size_t> features;   // feature per available action
};

struct Decision {
  Observation obs;
  std::size_t chosen = 0;
  double old_prob = 0.0;
};

struct Episode {
  std::vector<Decision> decisions;
  trace::Trajectory trajectory;
  std::vector<tools::ToolName> tools_used;
  std::string answer;  // chosen option text, whatever the stage
  bool answered = false;
  bool answer_correct = false;
  int initial_width = 0;
  int initial_height = 0;
  std::shared_ptr<const tools::EpisodeState> state;  // lineage after the last call

  std::string trace_text() const { return trace::serialize_trace(trajectory); }
};

// -- policy ----------------------------------------------------------------

/// Tabular linear-softmax policy: logit(a | s) = theta[key(s)][feature(a)].
class Policy {
 public:
  Policy() : theta_(kStateKeys * kFeatures, 0.0) {}

  std::vector<double> probabilities(const Observation& obs) const;
  double log_prob(const Observation& obs, std::size_t action) const;

  std::vector<double>& theta() { return theta_; }
  const std::vector<double>& theta() const { return theta_; }

 private:
  std::vector<double> theta_;
};

/// Runs one episode. Draws actions from `policy` with `rng`. A stage-1
/// answer reports the image it relies on ("image N": the latest processed
/// image for the hinted answer, the original for the other); a stage-2
/// answer is the chosen option text.
Episode rollout(const TaskInstance& inst, const Policy& policy, const EnvConfig& cfg, Rng& rng, int stage = 2);

// -- GRPO ------------------------------------------------------------------

struct GrpoConfig {
  int group_size = 16;
  double clip = 0.2;
  double learning_rate = 5.0;
  double kl_coef = 0.0;
  int steps_per_stage = 200;
  double eps_std = 1e-6;
  int prompts_per_step = 4;
  int epochs = 2;

  /// Throws Error{InvalidArguments}.
  void validate() const;
};

/// (r - mean) / max(std, eps_std) with the population standard deviation.
std::vector<double> grpo_advantages(const std::vector<double>& rewards, double eps_std);

struct Sample {
  const Decision* decision = nullptr;
  double advantage = 0.0;
};

/// Mean over samples of min(ratio*A, clip(ratio, 1-eps, 1+eps)*A), with
/// ratio = pi(a|s) / old_prob. Writes the analytic gradient when requested.
double surrogate(const Policy& policy, const std::vector<Sample>& samples, double clip,
                 std::vector<double>* grad = nullptr);

/// `epochs` gradient-ascent steps on the clipped surrogate.
void grpo_update(Policy& policy, const std::vector<Sample>& samples, const GrpoConfig& cfg);

// -- curriculum ------------------------------------------------------------

enum class Mode { ToolSrl, AccuracyOnly, ToolConditioned, GlobalOnly, AnswerOnly, Combined };

std::string_view to_string(Mode mode);
std::optional<Mode> mode_from_string(std::string_view s);

struct Scored {
  double train_reward = 0.0;
  double answer = 0.0;
  rewards::RewardBreakdown breakdown;
};

struct StepMetrics {
  int step = 0;
  Mode mode = Mode::ToolSrl;
  std::uint64_t seed = 0;
  double mean_reward = 0.0;
  double mean_tool_calls = 0.0;
  double accuracy = 0.0;  // mean answer reward
  std::array<double, 6> per_tool{};  // mean calls per episode, in kAllTools order
};

struct RunResult {
  std::vector<StepMetrics> steps;
  std::size_t tool_reward_evaluations = 0;
  std::vector<nlohmann::json> logged;  // score requests of logged episodes
  Policy policy;
};

struct RunOptions {
  GrpoConfig grpo;
  EnvConfig env;
  rewards::RewardConfig rewards;
  std::uint64_t seed = 0;
  int log_every = 0;  // log the first group of every n-th step; 0 = off
};

class Curriculum {
 public:
  explicit Curriculum(RunOptions options);

  /// Reward the given mode trains on at `phase` (1 or 2).
  Scored score(const TaskInstance& inst, const Episode& ep, Mode mode, int phase);

  RunResult run(Mode mode);

  std::size_t tool_reward_evaluations() const { return tool_reward_evaluations_; }

 private:
  RunOptions opt_;
  rewards::ExactMatchJudge judge_;
  std::size_t tool_reward_evaluations_ = 0;
};

/// Stage-1 or stage-2 score request for a logged episode (svc wire form).
nlohmann::json episode_request(const std::string& id, int stage, const TaskInstance& inst, const Episode& ep,
                               const EnvConfig& cfg);

/// Metrics CSV: step,mode,seed,mean_reward,mean_tool_calls,accuracy,zoom,rotate,flip,
/// draw_hline,draw_vline,mark_points
void write_metrics_csv(std::ostream& out, const std::vector<StepMetrics>& steps, bool header = true);
std::vector<StepMetrics> read_metrics_csv(std::istream& in);

/// Summary over a finished run: stage-2 mean tool calls and the final
/// answer reward (mean over the last `tail` steps).
struct RunSummary {
  double stage2_tool_calls = 0.0;
  double final_answer = 0.0;
};
RunSummary summarize(const std::vector<StepMetrics>& steps, int steps_per_stage, int tail = 20);

}  // namespace toolsup::currsim
