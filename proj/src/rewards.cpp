#include "toolsup/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "toolsup/error.hpp"
#include "toolsup/hungarian.hpp"
#include "toolsup/judge.hpp"

namespace toolsup::rewards {

void RewardConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArguments, what);
  };
  require(std::isfinite(w_fp) && w_fp > 0, "w_fp must be positive");
  require(std::isfinite(w_fn) && w_fn > 0, "w_fn must be positive");
  require(zoom_threshold > 0 && zoom_threshold <= 1, "zoom_threshold must be in (0,1]");
  require(anls_threshold > 0 && anls_threshold <= 1, "anls_threshold must be in (0,1]");
  require(std::isfinite(w_fmt) && w_fmt >= 0, "w_fmt must be non-negative");
  require(std::isfinite(discrete_radius) && discrete_radius > 0, "discrete_radius must be positive");
}

double modf1(const raster::BBox& b, const raster::BBox& g, double w_fp, double w_fn) {
  const auto tp = static_cast<double>(b.intersect(g).area());
  if (tp <= 0) return 0.0;
  const double fp = static_cast<double>(b.area()) - tp;
  const double fn = static_cast<double>(g.area()) - tp;
  return 2 * tp / (2 * tp + w_fp * fp + w_fn * fn);
}

double zoom_reward(const raster::BBox& b, const std::vector<raster::BBox>& gts, const RewardConfig& cfg) {
  double best = 0.0;
  for (const auto& g : gts) best = std::max(best, modf1(b, g, cfg.w_fp, cfg.w_fn));
  if (cfg.zoom_binarize) return best >= cfg.zoom_threshold ? 1.0 : 0.0;
  return best;
}

double primitive_distance(const Primitive& p, const Primitive& g) {
  if (p.kind != g.kind) return std::numeric_limits<double>::infinity();
  switch (g.kind) {
    case PrimitiveKind::XLine: return std::abs(p.x - g.x);
    case PrimitiveKind::YLine: return std::abs(p.y - g.y);
    case PrimitiveKind::Point: return std::hypot(p.x - g.x, p.y - g.y);
  }
  return std::numeric_limits<double>::infinity();
}

double primitive_tolerance(PrimitiveKind kind, double width, double height) {
  switch (kind) {
    case PrimitiveKind::XLine: return width / 4;
    case PrimitiveKind::YLine: return height / 4;
    case PrimitiveKind::Point: return std::hypot(width / 4, height / 4);
  }
  return 0.0;
}

double primitive_similarity(const Primitive& p, const Primitive& g, double width, double height) {
  const double d = primitive_distance(p, g);
  const double t = primitive_tolerance(g.kind, width, height);
  if (!std::isfinite(d) || t <= 0) return 0.0;
  return std::max(0.0, 1.0 - d / t);
}

namespace {

template <typename Score>
DrawMatch match_with(const std::vector<Primitive>& preds, const std::vector<Primitive>& gts, Score score) {
  DrawMatch out;
  if (preds.empty() || gts.empty()) return out;
  WeightMatrix w(preds.size(), gts.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) w(i, j) = score(preds[i], gts[j]);
  }
  const auto assignment = max_weight_assignment(w);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (const auto j = assignment.row_to_col[i]) {
      out.pairs.push_back({i, *j, w(i, *j)});
      out.s_tp += w(i, *j);
    }
  }
  return out;
}

DrawScore aggregate(DrawMatch match, std::size_t n_pred, std::size_t n_gt) {
  DrawScore score;
  const std::size_t denom = n_pred + n_gt;
  score.reward = denom == 0 ? 0.0 : std::clamp(2 * match.s_tp / static_cast<double>(denom), 0.0, 1.0);
  score.match = std::move(match);
  return score;
}

}  // namespace

DrawMatch hungarian_match(const std::vector<Primitive>& preds, const std::vector<Primitive>& gts,
                          double width, double height) {
  return match_with(preds, gts, [&](const Primitive& p, const Primitive& g) {
    return primitive_similarity(p, g, width, height);
  });
}

DrawScore draw_reward(const std::vector<Primitive>& preds, const std::vector<Primitive>& gts,
                      double width, double height) {
  return aggregate(hungarian_match(preds, gts, width, height), preds.size(), gts.size());
}

DrawScore draw_reward_discrete(const std::vector<Primitive>& preds, const std::vector<Primitive>& gts,
                               double radius) {
  auto match = match_with(preds, gts, [&](const Primitive& p, const Primitive& g) {
    return primitive_distance(p, g) < radius ? 1.0 : 0.0;
  });
  return aggregate(std::move(match), preds.size(), gts.size());
}

Stage1Result stage1_aggregate(std::span<const double> per_state,
                              const std::vector<std::optional<std::size_t>>& answer_indices, double fmt) {
  Stage1Result r;
  if (!per_state.empty()) r.global = *std::max_element(per_state.begin(), per_state.end());
  if (!answer_indices.empty()) {
    double sum = 0.0;
    for (const auto& index : answer_indices) {
      if (index && *index >= 1 && *index <= per_state.size()) sum += per_state[*index - 1];
    }
    r.answer = sum / static_cast<double>(answer_indices.size());
  }
  r.final = 0.5 * (r.global + r.answer) + fmt;
  return r;
}

double s_norm(double ans, double target, double range) {
  if (!(range > 0) || !std::isfinite(range)) {
    throw Error(ErrorCode::InvalidArguments, "answer range must be positive");
  }
  if (!std::isfinite(ans) || !std::isfinite(target)) return 0.0;
  return std::max(0.0, 1.0 - std::abs(ans - target) / range);
}

std::vector<double> extract_numbers(std::string_view text) {
  auto digit = [&](std::size_t i) {
    return i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])) != 0;
  };
  auto word = [&](std::size_t i) {
    const auto c = static_cast<unsigned char>(text[i]);
    return std::isalnum(c) != 0 || c == '_' || c == '.';
  };
  std::vector<double> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t start = i;
    bool number_start = false;
    if (digit(i) && (i == 0 || !word(i - 1))) {
      number_start = true;
    } else if ((text[i] == '-' || text[i] == '+') && digit(i + 1) &&
               (i == 0 || !(word(i - 1) || digit(i - 1)))) {
      number_start = true;
    }
    if (!number_start) {
      ++i;
      continue;
    }
    std::size_t j = (text[i] == '-' || text[i] == '+') ? i + 1 : i;
    while (digit(j)) ++j;
    if (j < text.size() && text[j] == '.' && digit(j + 1)) {
      ++j;
      while (digit(j)) ++j;
    }
    if (text[start] == '+') ++start;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + j, value);
    if (ec == std::errc() && std::isfinite(value)) out.push_back(value);
    i = std::max(j, static_cast<std::size_t>(ptr - text.data()));
    while (i < text.size() && word(i)) ++i;  // skip trailing alphanumerics like "3rd"
  }
  return out;
}

double answer_reward(const trace::AnswerPayload& answer, const AnswerTarget& target, TaskKind task,
                     Judge& judge) {
  if (is_synthetic_chart(task)) {
    if (target.values.empty() || target.values.size() != target.ranges.size()) {
      throw Error(ErrorCode::InvalidArguments, "numeric target needs one range per value");
    }
    const auto numbers = extract_numbers(answer.raw);
    if (numbers.size() < target.values.size()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < target.values.size(); ++i) {
      sum += s_norm(numbers[i], target.values[i], target.ranges[i]);
    }
    return sum / static_cast<double>(target.values.size());
  }
  return judge.judge(target.question, answer.raw, target.text) ? 1.0 : 0.0;
}

}  // namespace toolsup::rewards
