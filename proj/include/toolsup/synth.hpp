#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolsup/orientation.hpp"
#include "toolsup/raster.hpp"
#include "toolsup/rewards.hpp"
#include "toolsup/task.hpp"

namespace toolsup::synth {

inline constexpr int kReadValueMaxEdge = 768;
inline constexpr int kCompareCountMaxEdge = 512;
inline constexpr int kMinPointDistance = 12;
inline constexpr int kLabelOffset = 8;
inline constexpr int kMarginLeft = 60;
inline constexpr int kMarginRight = 20;
inline constexpr int kMarginTop = 30;
inline constexpr int kMarginBottom = 50;
inline constexpr int kMinPlotExtent = 200;
inline constexpr int kAxisMin = 0;
inline constexpr int kAxisMax = 100;
inline constexpr int kMinAxisSpan = 10;
inline constexpr double kAugmentProbability = 0.7;

/// Integer data -> pixel map. Data x grows to the right from column `left`;
/// data y grows upwards from row `top + (y_max - y_min) * ppu_y`.
struct AxisMap {
  int x_min = 0, x_max = 10;
  int y_min = 0, y_max = 10;
  int left = kMarginLeft;
  int top = kMarginTop;
  int ppu_x = 1;  // pixels per data unit
  int ppu_y = 1;

  std::array<int, 2> to_pixel(int x, int y) const { return {left + (x - x_min) * ppu_x, top + (y_max - y) * ppu_y}; }
  int plot_width() const { return (x_max - x_min) * ppu_x; }
  int plot_height() const { return (y_max - y_min) * ppu_y; }

  friend bool operator==(const AxisMap&, const AxisMap&) = default;
};

enum class ChartKind { Scatter, Polyline };

struct ChartPoint {
  std::string label;
  int data_x = 0;
  int data_y = 0;
  int px = 0;
  int py = 0;
  raster::Rgb color;
  raster::MarkerShape shape = raster::MarkerShape::Circle;
  int size = 4;
  bool labeled = false;
  std::optional<raster::BBox> label_box;  // rendered label extent
};

struct ChartSpec {
  ChartKind kind = ChartKind::Scatter;
  AxisMap axes;
  std::vector<ChartPoint> points;
  int width = 0;
  int height = 0;
  std::uint64_t seed = 0;
};

enum class Cmp { Greater, Less };

/// Strict comparison against the reference point on one or both axes.
struct CompareCondition {
  std::optional<Cmp> x;
  std::optional<Cmp> y;

  bool holds(int px, int py, int ref_x, int ref_y) const;
  std::string describe() const;  // e.g. "x_gt&y_lt"
};

struct SynthSample {
  std::string id;
  TaskKind task = TaskKind::ReadValue;
  raster::Image image{1, 1};
  std::string question;
  std::vector<double> answer;         // one value, or (x, y)
  std::vector<double> answer_range;   // s_norm range per value
  std::string answer_text;
  rewards::DrawGT ground_truth;
  ChartSpec chart;
  std::size_t target_point = 0;       // point the question refers to
  std::optional<CompareCondition> condition;
  std::vector<std::string> qualifying;  // compare-count: qualifying point ids

  /// Manifest record; `image_path` is stored verbatim.
  nlohmann::json record(const std::string& image_path) const;
};

/// Renders a chart. Markers are drawn last so every point pixel keeps its
/// marker color.
raster::Image render_chart(const ChartSpec& chart);

/// Deterministic per (seed, index); any subset of indices can be generated
/// independently.
SynthSample make_read_value(std::uint64_t seed, std::size_t index);
SynthSample make_compare_count(std::uint64_t seed, std::size_t index);

std::vector<SynthSample> gen_read_value(std::uint64_t seed, std::size_t count, unsigned threads = 1);
std::vector<SynthSample> gen_compare_count(std::uint64_t seed, std::size_t count, unsigned threads = 1);

/// Brute-force recount of qualifying points from stored coordinates.
std::size_t recount(const SynthSample& sample);

struct AugmentedDoc {
  raster::Image image{1, 1};
  tools::Orientation applied;
  tools::Orientation inverse;  // the rotate/flip target o*
  std::string question;
  std::string answer;
};

/// The five non-identity augmentations, in sampling order.
const std::array<tools::Orientation, 5>& augmentations();

/// Draws identity with probability 1-p, otherwise one of the five
/// augmentations uniformly.
tools::Orientation sample_augmentation(std::uint64_t seed, double p = kAugmentProbability);

AugmentedDoc augment_doc(const raster::Image& img, std::string question, std::string answer,
                         std::uint64_t seed, double p = kAugmentProbability);

/// Size an image is downscaled to so that it fits target_max x target_max.
std::pair<int, int> downscaled_size(int width, int height, int target_max);

/// Keeps images whose long edge exceeds `min_long_edge` and downscales them
/// to fit `target_max`. Returns (input index, image) pairs.
std::vector<std::pair<std::size_t, raster::Image>> select_highres_and_downscale(
    const std::vector<raster::Image>& imgs, int min_long_edge = 1024, int target_max = 512);

/// Writes images/<id>.png and manifest.jsonl under `dir`.
void write_dataset(const std::filesystem::path& dir, const std::vector<SynthSample>& samples);

}  // namespace toolsup::synth
