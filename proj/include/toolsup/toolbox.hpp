#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "toolsup/orientation.hpp"
#include "toolsup/primitive.hpp"
#include "toolsup/raster.hpp"

namespace toolsup::tools {

using nlohmann::json;

enum class ToolName { ZoomIn, Rotate, Flip, DrawHorizontalLine, DrawVerticalLine, MarkPoints };

inline constexpr std::array<ToolName, 6> kAllTools{
    ToolName::ZoomIn,           ToolName::Rotate,           ToolName::Flip,
    ToolName::DrawHorizontalLine, ToolName::DrawVerticalLine, ToolName::MarkPoints};

/// Wire name, e.g. "image_zoom_in_tool".
std::string_view tool_name(ToolName name);
std::optional<ToolName> tool_from_name(std::string_view name);

struct ZoomArgs {
  std::array<double, 4> bbox{};
};

struct RotateArgs {
  int angle = 0;
};

struct FlipArgs {
  raster::FlipDirection direction = raster::FlipDirection::Horizontal;
};

/// Shared by the horizontal (location = row) and vertical (location =
/// column) line tools.
struct LineArgs {
  int location = 0;
  raster::Rgb color = raster::palette::red;
  int thickness = 3;
  raster::LineStyle style = raster::LineStyle::Solid;
};

struct MarkArgs {
  std::vector<std::array<double, 2>> points;
  raster::Rgb color = raster::palette::red;
  int size = 6;
  raster::MarkerShape shape = raster::MarkerShape::Circle;
};

using ToolArgs = std::variant<ZoomArgs, RotateArgs, FlipArgs, LineArgs, MarkArgs>;

/// A validated tool invocation. `arguments` keeps the JSON object exactly as
/// received so a call serializes back to the same wire form.
struct ToolCall {
  ToolName name = ToolName::ZoomIn;
  ToolArgs args;
  json arguments = json::object();
  int target_image = -1;

  /// {"name": ..., "arguments": {...}}
  json to_json() const;

  /// Validates a {"name","arguments"} object. Throws Error{InvalidArguments}.
  static ToolCall from_json(const json& call);
  static ToolCall from_arguments(ToolName name, const json& arguments);

  friend bool operator==(const ToolCall& a, const ToolCall& b) {
    return a.name == b.name && a.arguments == b.arguments;
  }
};

// Convenience builders producing the same wire form a model would emit.
ToolCall make_zoom(std::array<double, 4> bbox, int target_image = -1);
ToolCall make_rotate(int angle, int target_image = -1);
ToolCall make_flip(raster::FlipDirection direction, int target_image = -1);
ToolCall make_hline(int row, int target_image = -1);
ToolCall make_vline(int column, int target_image = -1);
ToolCall make_mark(std::vector<std::array<double, 2>> points, int target_image = -1);

/// Affine map from an image's continuous pixel coordinates (pixel i spans
/// [i, i+1)) to those of the episode's original image.
struct Frame {
  // orig_x = m[0]*x + m[1]*y + m[2];  orig_y = m[3]*x + m[4]*y + m[5]
  std::array<double, 6> m{1, 0, 0, 0, 1, 0};
  bool mappable = true;

  std::array<double, 2> to_original(double x, double y) const {
    return {m[0] * x + m[1] * y + m[2], m[3] * x + m[4] * y + m[5]};
  }
  /// this o inner, where `inner` maps a child image into this image's frame.
  Frame then(const std::array<double, 6>& inner) const;
};

struct LineageEntry {
  std::shared_ptr<const raster::Image> image;  // null in geometry-only episodes
  int width = 0;
  int height = 0;
  Orientation orientation;
  std::optional<ToolCall> producer;  // nullopt for the original
  std::size_t source = 0;            // lineage index the producer targeted
  Frame frame;
  /// Primitives drawn on this image so far, in its own pixel frame and with
  /// the raw (unclamped) coordinates of the calls.
  std::vector<Primitive> overlays;
  /// Zoom box of the producer in original-image pixels; nullopt when the
  /// producer is not a zoom or the box cannot be mapped back.
  std::optional<raster::BBox> zoom_box_original;
  bool clamped = false;
};

inline constexpr int kDefaultMaxTurns = 10;

/// Image lineage of one episode. Immutable: apply() returns a new state and
/// shares every previously produced image.
class EpisodeState {
 public:
  explicit EpisodeState(raster::Image original, Orientation initial = {},
                        int max_turns = kDefaultMaxTurns);

  /// Tracks dimensions, orientation, frames and overlays without touching
  /// pixels. Produces the same metadata as a pixel-executing episode.
  static EpisodeState geometry_only(int width, int height, Orientation initial = {},
                                    int max_turns = kDefaultMaxTurns);

  /// Negative k counts from the end (-1 = last); non-negative k is a direct
  /// lineage index. Throws Error{TargetOutOfRange}.
  std::size_t resolve_target(int target_image) const;

  /// Executes one tool call. Throws TurnLimitExceeded, TargetOutOfRange,
  /// InvalidArguments or EmptyRegion; *this is never modified.
  EpisodeState apply(const ToolCall& call) const;

  const std::vector<LineageEntry>& lineage() const noexcept { return lineage_; }
  const LineageEntry& last() const noexcept { return lineage_.back(); }
  int turn() const noexcept { return turn_; }
  int max_turns() const noexcept { return max_turns_; }
  bool executes_pixels() const noexcept { return pixels_; }

 private:
  EpisodeState() = default;

  std::vector<LineageEntry> lineage_;
  int turn_ = 0;
  int max_turns_ = kDefaultMaxTurns;
  bool pixels_ = true;
};

struct TraceRecord {
  ToolCall call;
  std::size_t resolved_target = 0;
};

std::vector<TraceRecord> episode_trace(const EpisodeState& state);
json trace_to_json(const std::vector<TraceRecord>& records);
std::vector<TraceRecord> trace_from_json(const json& records);

/// Re-executes a logged trace from the original image.
EpisodeState replay(raster::Image original, const std::vector<TraceRecord>& records,
                    Orientation initial = {}, int max_turns = kDefaultMaxTurns);

}  // namespace toolsup::tools
