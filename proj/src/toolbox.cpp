#include "toolsup/toolbox.hpp"

#include <cmath>
#include <string>

#include "toolsup/error.hpp"

namespace toolsup::tools {

namespace {

struct ToolEntry {
  ToolName name;
  std::string_view wire;
  std::string_view required;
};

constexpr std::array<ToolEntry, 6> kTools{{
    {ToolName::ZoomIn, "image_zoom_in_tool", "bbox_2d"},
    {ToolName::Rotate, "image_rotate_tool", "angle"},
    {ToolName::Flip, "image_flip_tool", "direction"},
    {ToolName::DrawHorizontalLine, "image_draw_horizontal_line_tool", "height_location"},
    {ToolName::DrawVerticalLine, "image_draw_vertical_line_tool", "width_location"},
    {ToolName::MarkPoints, "image_mark_points_tool", "point_2d"},
}};

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCode::InvalidArguments, message);
}

double as_number(const json& value, std::string_view what) {
  if (!value.is_number()) invalid(std::string(what) + " must be a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) invalid(std::string(what) + " must be finite");
  return v;
}

int as_integer(const json& value, std::string_view what) {
  const double v = as_number(value, what);
  if (v != std::floor(v) || std::abs(v) > 1e9) invalid(std::string(what) + " must be an integer");
  return static_cast<int>(v);
}

std::string as_string(const json& value, std::string_view what) {
  if (!value.is_string()) invalid(std::string(what) + " must be a string");
  return value.get<std::string>();
}

std::array<double, 2> as_pair(const json& value) {
  if (!value.is_array() || value.size() != 2) invalid("point_2d entries must have exactly 2 numbers");
  return {as_number(value[0], "point_2d"), as_number(value[1], "point_2d")};
}

raster::Rgb parse_color(const json& args, raster::Rgb fallback) {
  if (!args.contains("color")) return fallback;
  const std::string name = as_string(args["color"], "color");
  auto color = raster::color_from_name(name);
  if (!color) invalid("unknown color '" + name + "'");
  return *color;
}

int parse_positive(const json& args, const char* key, int fallback) {
  if (!args.contains(key)) return fallback;
  const int v = as_integer(args[key], key);
  if (v < 1) invalid(std::string(key) + " must be >= 1");
  return v;
}

LineArgs parse_line(const json& args, const char* location_key) {
  LineArgs line;
  line.location = as_integer(args[location_key], location_key);
  line.color = parse_color(args, line.color);
  line.thickness = parse_positive(args, "thickness", line.thickness);
  if (args.contains("style")) {
    const std::string style = as_string(args["style"], "style");
    if (style == "solid") {
      line.style = raster::LineStyle::Solid;
    } else if (style == "dashed") {
      line.style = raster::LineStyle::Dashed;
    } else {
      invalid("style must be solid or dashed");
    }
  }
  return line;
}

MarkArgs parse_mark(const json& args) {
  MarkArgs mark;
  const json& points = args["point_2d"];
  if (!points.is_array() || points.empty()) invalid("point_2d must be a non-empty array");
  if (points[0].is_array()) {
    for (const auto& p : points) mark.points.push_back(as_pair(p));
  } else {
    mark.points.push_back(as_pair(points));
  }
  mark.color = parse_color(args, mark.color);
  mark.size = parse_positive(args, "size", mark.size);
  if (args.contains("shape")) {
    const std::string shape = as_string(args["shape"], "shape");
    if (shape == "circle") {
      mark.shape = raster::MarkerShape::Circle;
    } else if (shape == "X" || shape == "x") {
      mark.shape = raster::MarkerShape::X;
    } else if (shape == "star") {
      mark.shape = raster::MarkerShape::Star;
    } else {
      invalid("shape must be circle, X or star");
    }
  }
  return mark;
}

void check_label(const json& args) {
  if (!args.contains("label")) return;
  const json& label = args["label"];
  if (label.is_string()) return;
  if (label.is_array()) {
    for (const auto& l : label) {
      if (!l.is_string()) invalid("label list must contain strings");
    }
    return;
  }
  invalid("label must be a string or a list of strings");
}

using Affine = std::array<double, 6>;

Affine quarter_turn_inverse(int k, int parent_w, int parent_h) {
  const double w = parent_w;
  const double h = parent_h;
  switch (k) {
    case 1: return {0, 1, 0, -1, 0, h};
    case 2: return {-1, 0, w, 0, -1, h};
    case 3: return {0, -1, w, 1, 0, 0};
    default: return {1, 0, 0, 0, 1, 0};
  }
}

std::optional<raster::BBox> map_box_to_original(const Frame& frame, const raster::BBox& box) {
  if (!frame.mappable) return std::nullopt;
  const auto a = frame.to_original(box.x1, box.y1);
  const auto b = frame.to_original(box.x2, box.y2);
  return raster::box_from_coords(a[0], a[1], b[0], b[1]);
}

}  // namespace

std::string_view tool_name(ToolName name) {
  for (const auto& t : kTools) {
    if (t.name == name) return t.wire;
  }
  return "unknown";
}

std::optional<ToolName> tool_from_name(std::string_view name) {
  for (const auto& t : kTools) {
    if (t.wire == name) return t.name;
  }
  return std::nullopt;
}

json ToolCall::to_json() const {
  return json{{"name", std::string(tool_name(name))}, {"arguments", arguments}};
}

ToolCall ToolCall::from_json(const json& call) {
  if (!call.is_object()) invalid("tool call must be a JSON object");
  if (!call.contains("name") || !call["name"].is_string()) invalid("tool call needs a string 'name'");
  const auto name = tool_from_name(call["name"].get<std::string>());
  if (!name) invalid("unknown tool '" + call["name"].get<std::string>() + "'");
  const json arguments = call.contains("arguments") ? call["arguments"] : json::object();
  return from_arguments(*name, arguments);
}

ToolCall ToolCall::from_arguments(ToolName name, const json& arguments) {
  if (!arguments.is_object()) invalid("arguments must be a JSON object");
  for (const auto& t : kTools) {
    if (t.name == name && !arguments.contains(t.required)) {
      invalid(std::string(t.wire) + " requires '" + std::string(t.required) + "'");
    }
  }
  ToolCall call;
  call.name = name;
  call.arguments = arguments;
  check_label(arguments);
  if (arguments.contains("target_image")) {
    call.target_image = as_integer(arguments["target_image"], "target_image");
  }

  switch (name) {
    case ToolName::ZoomIn: {
      const json& bbox = arguments["bbox_2d"];
      if (!bbox.is_array() || bbox.size() != 4) invalid("bbox_2d must have exactly 4 numbers");
      ZoomArgs zoom;
      for (std::size_t i = 0; i < 4; ++i) zoom.bbox[i] = as_number(bbox[i], "bbox_2d");
      call.args = zoom;
      break;
    }
    case ToolName::Rotate:
      call.args = RotateArgs{as_integer(arguments["angle"], "angle")};
      break;
    case ToolName::Flip: {
      const std::string dir = as_string(arguments["direction"], "direction");
      if (dir == "horizontal") {
        call.args = FlipArgs{raster::FlipDirection::Horizontal};
      } else if (dir == "vertical") {
        call.args = FlipArgs{raster::FlipDirection::Vertical};
      } else {
        invalid("direction must be horizontal or vertical");
      }
      break;
    }
    case ToolName::DrawHorizontalLine:
      call.args = parse_line(arguments, "height_location");
      break;
    case ToolName::DrawVerticalLine:
      call.args = parse_line(arguments, "width_location");
      break;
    case ToolName::MarkPoints:
      call.args = parse_mark(arguments);
      break;
  }
  return call;
}

ToolCall make_zoom(std::array<double, 4> bbox, int target_image) {
  return ToolCall::from_arguments(
      ToolName::ZoomIn,
      json{{"bbox_2d", {bbox[0], bbox[1], bbox[2], bbox[3]}}, {"target_image", target_image}});
}

ToolCall make_rotate(int angle, int target_image) {
  return ToolCall::from_arguments(ToolName::Rotate,
                                  json{{"angle", angle}, {"target_image", target_image}});
}

ToolCall make_flip(raster::FlipDirection direction, int target_image) {
  const char* dir = direction == raster::FlipDirection::Horizontal ? "horizontal" : "vertical";
  return ToolCall::from_arguments(ToolName::Flip,
                                  json{{"direction", dir}, {"target_image", target_image}});
}

ToolCall make_hline(int row, int target_image) {
  return ToolCall::from_arguments(ToolName::DrawHorizontalLine,
                                  json{{"height_location", row}, {"target_image", target_image}});
}

ToolCall make_vline(int column, int target_image) {
  return ToolCall::from_arguments(ToolName::DrawVerticalLine,
                                  json{{"width_location", column}, {"target_image", target_image}});
}

ToolCall make_mark(std::vector<std::array<double, 2>> points, int target_image) {
  json list = json::array();
  for (const auto& p : points) list.push_back({p[0], p[1]});
  return ToolCall::from_arguments(ToolName::MarkPoints,
                                  json{{"point_2d", list}, {"target_image", target_image}});
}

Frame Frame::then(const std::array<double, 6>& inner) const {
  Frame out;
  out.mappable = mappable;
  out.m = {m[0] * inner[0] + m[1] * inner[3],
           m[0] * inner[1] + m[1] * inner[4],
           m[0] * inner[2] + m[1] * inner[5] + m[2],
           m[3] * inner[0] + m[4] * inner[3],
           m[3] * inner[1] + m[4] * inner[4],
           m[3] * inner[2] + m[4] * inner[5] + m[5]};
  return out;
}

EpisodeState::EpisodeState(raster::Image original, Orientation initial, int max_turns)
    : max_turns_(max_turns), pixels_(true) {
  LineageEntry root;
  root.width = original.width();
  root.height = original.height();
  root.image = std::make_shared<const raster::Image>(std::move(original));
  root.orientation = initial;
  lineage_.push_back(std::move(root));
}

EpisodeState EpisodeState::geometry_only(int width, int height, Orientation initial,
                                         int max_turns) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidArguments, "image dimensions must be positive");
  }
  EpisodeState state;
  state.max_turns_ = max_turns;
  state.pixels_ = false;
  LineageEntry root;
  root.width = width;
  root.height = height;
  root.orientation = initial;
  state.lineage_.push_back(std::move(root));
  return state;
}

std::size_t EpisodeState::resolve_target(int target_image) const {
  const auto len = static_cast<long>(lineage_.size());
  const long index = target_image < 0 ? len + target_image : target_image;
  if (index < 0 || index >= len) {
    throw Error(ErrorCode::TargetOutOfRange,
                "target_image " + std::to_string(target_image) + " outside lineage of length " +
                    std::to_string(len));
  }
  return static_cast<std::size_t>(index);
}

EpisodeState EpisodeState::apply(const ToolCall& call) const {
  if (turn_ >= max_turns_) {
    throw Error(ErrorCode::TurnLimitExceeded,
                "turn limit of " + std::to_string(max_turns_) + " reached");
  }
  const std::size_t source = resolve_target(call.target_image);
  const LineageEntry& parent = lineage_[source];

  LineageEntry next;
  next.producer = call;
  next.source = source;
  next.width = parent.width;
  next.height = parent.height;
  next.orientation = parent.orientation;
  next.frame = parent.frame;

  std::visit(
      [&](const auto& args) {
        using T = std::decay_t<decltype(args)>;
        if constexpr (std::is_same_v<T, ZoomArgs>) {
          const auto box = raster::box_from_coords(args.bbox[0], args.bbox[1], args.bbox[2],
                                                   args.bbox[3]);
          const auto region = box.clamped(parent.width, parent.height);
          if (!region) throw Error(ErrorCode::EmptyRegion, "zoom box has zero area after clamping");
          const auto [w, h] = raster::zoom_output_size(region->width(), region->height(),
                                                       raster::kZoomMaxEdge);
          next.width = w;
          next.height = h;
          next.frame = parent.frame.then({static_cast<double>(region->width()) / w, 0,
                                          static_cast<double>(region->x1), 0,
                                          static_cast<double>(region->height()) / h,
                                          static_cast<double>(region->y1)});
          next.zoom_box_original = map_box_to_original(parent.frame, *region);
          if (pixels_) {
            next.image = std::make_shared<const raster::Image>(
                raster::crop_resize(*parent.image, *region, raster::kZoomMaxEdge));
          }
        } else if constexpr (std::is_same_v<T, RotateArgs>) {
          const int normalized = ((args.angle % 360) + 360) % 360;
          if (normalized % 90 == 0) {
            const int k = normalized / 90;
            if (k % 2 == 1) std::swap(next.width, next.height);
            next.frame = parent.frame.then(quarter_turn_inverse(k, parent.width, parent.height));
            next.orientation = compose(Orientation::rotation(k), parent.orientation);
          } else {
            const auto [w, h] = raster::rotated_extent(parent.width, parent.height, normalized);
            next.width = w;
            next.height = h;
            next.frame.mappable = false;
            next.orientation.non_axis_aligned = true;
          }
          if (pixels_) {
            next.image = std::make_shared<const raster::Image>(
                raster::rotate_arbitrary(*parent.image, args.angle));
          }
        } else if constexpr (std::is_same_v<T, FlipArgs>) {
          const bool horizontal = args.direction == raster::FlipDirection::Horizontal;
          const double w = parent.width;
          const double h = parent.height;
          next.frame = parent.frame.then(horizontal ? Affine{-1, 0, w, 0, 1, 0}
                                                    : Affine{1, 0, 0, 0, -1, h});
          next.orientation = compose(horizontal ? Orientation::hflip() : Orientation::vflip(),
                                     parent.orientation);
          if (pixels_) {
            next.image =
                std::make_shared<const raster::Image>(raster::flip(*parent.image, args.direction));
          }
        } else if constexpr (std::is_same_v<T, LineArgs>) {
          const bool horizontal = call.name == ToolName::DrawHorizontalLine;
          next.overlays = parent.overlays;
          next.overlays.push_back(horizontal ? Primitive::y_line(args.location)
                                             : Primitive::x_line(args.location));
          const int limit = horizontal ? parent.height : parent.width;
          next.clamped = args.location < 0 || args.location >= limit;
          if (pixels_) {
            auto drawn = horizontal ? raster::draw_hline(*parent.image, args.location, args.color,
                                                         args.thickness, args.style)
                                    : raster::draw_vline(*parent.image, args.location, args.color,
                                                         args.thickness, args.style);
            next.image = std::make_shared<const raster::Image>(std::move(drawn.image));
          }
        } else if constexpr (std::is_same_v<T, MarkArgs>) {
          next.overlays = parent.overlays;
          std::optional<raster::Image> canvas;
          if (pixels_) canvas = *parent.image;
          for (const auto& p : args.points) {
            next.overlays.push_back(Primitive::point(p[0], p[1]));
            const int col = static_cast<int>(std::lround(p[0]));
            const int row = static_cast<int>(std::lround(p[1]));
            if (col < 0 || row < 0 || col >= parent.width || row >= parent.height) {
              next.clamped = true;
            }
            if (canvas) {
              canvas = raster::draw_marker(*canvas, col, row, args.shape, args.size, args.color).image;
            }
          }
          if (canvas) next.image = std::make_shared<const raster::Image>(std::move(*canvas));
        }
      },
      call.args);

  EpisodeState out = *this;
  out.lineage_.push_back(std::move(next));
  out.turn_ = turn_ + 1;
  return out;
}

std::vector<TraceRecord> episode_trace(const EpisodeState& state) {
  std::vector<TraceRecord> records;
  const auto& lineage = state.lineage();
  for (std::size_t i = 1; i < lineage.size(); ++i) {
    records.push_back({*lineage[i].producer, lineage[i].source});
  }
  return records;
}

json trace_to_json(const std::vector<TraceRecord>& records) {
  json out = json::array();
  for (const auto& r : records) {
    out.push_back({{"call", r.call.to_json()}, {"resolved_target", r.resolved_target}});
  }
  return out;
}

std::vector<TraceRecord> trace_from_json(const json& records) {
  if (!records.is_array()) invalid("trace must be a JSON array");
  std::vector<TraceRecord> out;
  for (const auto& r : records) {
    if (!r.is_object() || !r.contains("call") || !r.contains("resolved_target")) {
      invalid("trace record needs 'call' and 'resolved_target'");
    }
    out.push_back({ToolCall::from_json(r["call"]), r["resolved_target"].get<std::size_t>()});
  }
  return out;
}

EpisodeState replay(raster::Image original, const std::vector<TraceRecord>& records,
                    Orientation initial, int max_turns) {
  EpisodeState state(std::move(original), initial, max_turns);
  for (const auto& r : records) {
    if (state.resolve_target(r.call.target_image) != r.resolved_target) {
      throw Error(ErrorCode::Internal, "replayed target does not match the logged target");
    }
    state = state.apply(r.call);
  }
  return state;
}

}  // namespace toolsup::tools
