#include "toolsup/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "toolsup/error.hpp"
#include "toolsup/font.hpp"
#include "toolsup/png.hpp"
#include "toolsup/rng.hpp"

namespace toolsup::synth {

using nlohmann::json;
using raster::BBox;
using raster::Image;
using raster::Rgb;

namespace {

constexpr Rgb kGrid{225, 225, 225};
constexpr int kLabelScale = 2;
constexpr int kTickScale = 1;
constexpr int kMaxAttempts = 400;

const std::vector<Rgb>& marker_colors() {
  static const std::vector<Rgb> colors{raster::palette::red,    raster::palette::blue,
                                       raster::palette::green,  raster::palette::purple,
                                       raster::palette::orange, raster::palette::magenta,
                                       raster::palette::cyan};
  return colors;
}

const std::vector<raster::MarkerShape>& marker_shapes() {
  static const std::vector<raster::MarkerShape> shapes{raster::MarkerShape::Circle, raster::MarkerShape::X,
                                                       raster::MarkerShape::Star};
  return shapes;
}

std::string_view shape_name(raster::MarkerShape s) {
  switch (s) {
    case raster::MarkerShape::Circle: return "circle";
    case raster::MarkerShape::X: return "X";
    case raster::MarkerShape::Star: return "star";
  }
  return "circle";
}

int tick_step(int ppu, int min_pixels) {
  for (int step : {1, 2, 5, 10, 20, 25, 50, 100}) {
    if (step * ppu >= min_pixels) return step;
  }
  return 100;
}

AxisMap draw_axes(Rng& rng, int max_edge) {
  AxisMap a;
  const auto pick_range = [&](int& lo, int& hi) {
    lo = static_cast<int>(rng.uniform_int(kAxisMin, kAxisMax - kMinAxisSpan));
    hi = static_cast<int>(rng.uniform_int(lo + kMinAxisSpan, kAxisMax));
  };
  const auto pick_ppu = [&](int span, int room) {
    const int hi = std::max(1, room / span);
    const int lo = std::min(hi, (kMinPlotExtent + span - 1) / span);
    return static_cast<int>(rng.uniform_int(lo, std::min(hi, lo * 3)));
  };
  pick_range(a.x_min, a.x_max);
  pick_range(a.y_min, a.y_max);
  a.ppu_x = pick_ppu(a.x_max - a.x_min, max_edge - kMarginLeft - kMarginRight - 1);
  a.ppu_y = pick_ppu(a.y_max - a.y_min, max_edge - kMarginTop - kMarginBottom - 1);
  a.left = kMarginLeft;
  a.top = kMarginTop;
  return a;
}

std::vector<std::string> label_pool(Rng& rng, std::size_t n) {
  std::vector<std::string> pool;
  switch (rng.uniform_int(0, 2)) {
    case 0:
      for (char c = 'A'; c <= 'Z'; ++c) pool.emplace_back(1, c);
      break;
    case 1:
      for (int i = 1; i <= 40; ++i) pool.push_back(std::to_string(i));
      break;
    default:
      for (char c : std::string("PQRSTUVW")) {
        for (int d = 1; d <= 9; ++d) pool.push_back(fmt::format("{}{}", c, d));
      }
      break;
  }
  rng.shuffle(pool);
  pool.resize(std::min(pool.size(), n));
  return pool;
}

BBox marker_box(const ChartPoint& p) { return {p.px - p.size - 1, p.py - p.size - 1, p.px + p.size + 2, p.py + p.size + 2}; }

bool overlaps(const BBox& a, const BBox& b) { return !a.intersect(b).empty(); }

// Tries the four 8-pixel offsets around `p`; the label must stay inside the
// canvas and clear of every marker and every other label.
std::optional<BBox> place_label(const ChartPoint& p, const std::vector<ChartPoint>& others, int width, int height) {
  const auto ext = raster::text_extent(p.label, kLabelScale);
  const int r = p.size;
  const std::array<std::array<int, 2>, 4> origins{{
      {p.px + r + kLabelOffset, p.py - ext.height / 2},
      {p.px - r - kLabelOffset - ext.width, p.py - ext.height / 2},
      {p.px - ext.width / 2, p.py - r - kLabelOffset - ext.height},
      {p.px - ext.width / 2, p.py + r + kLabelOffset},
  }};
  for (const auto& [x, y] : origins) {
    const BBox box{x, y, x + ext.width, y + ext.height};
    if (box.x1 < 0 || box.y1 < 0 || box.x2 > width || box.y2 > height) continue;
    if (overlaps(box, marker_box(p))) continue;
    bool clear = true;
    for (const auto& o : others) {
      if (overlaps(box, marker_box(o)) || (o.label_box && overlaps(box, *o.label_box))) {
        clear = false;
        break;
      }
    }
    if (clear) return box;
  }
  return std::nullopt;
}

struct PointStyle {
  Rgb color;
  raster::MarkerShape shape;
  int size;
};

PointStyle draw_style(Rng& rng) {
  return {rng.pick(marker_colors()), rng.pick(marker_shapes()), static_cast<int>(rng.uniform_int(3, 5))};
}

// Places `n` points; `labels[i]` non-empty means point i is labeled. Returns
// false when the layout could not be completed.
bool place_points(Rng& rng, ChartSpec& chart, const std::vector<std::string>& labels,
                  const std::vector<bool>& show_label, std::optional<PointStyle> shared_style) {
  chart.points.clear();
  const auto& a = chart.axes;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      ChartPoint p;
      p.label = labels[i];
      p.data_x = static_cast<int>(rng.uniform_int(a.x_min, a.x_max));
      p.data_y = static_cast<int>(rng.uniform_int(a.y_min, a.y_max));
      const auto px = a.to_pixel(p.data_x, p.data_y);
      p.px = px[0];
      p.py = px[1];
      const PointStyle style = shared_style ? *shared_style : draw_style(rng);
      p.color = style.color;
      p.shape = style.shape;
      p.size = style.size;
      p.labeled = show_label[i];

      bool ok = true;
      for (const auto& o : chart.points) {
        if (std::hypot(o.px - p.px, o.py - p.py) < kMinPointDistance ||
            (chart.kind == ChartKind::Polyline && o.data_x == p.data_x) ||
            (o.label_box && overlaps(*o.label_box, marker_box(p)))) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      if (p.labeled) {
        p.label_box = place_label(p, chart.points, chart.width, chart.height);
        if (!p.label_box) continue;
      }
      chart.points.push_back(std::move(p));
      placed = true;
    }
    if (!placed) return false;
  }
  return true;
}

ChartSpec layout_chart(Rng& rng, std::uint64_t seed, int max_edge, ChartKind kind,
                       const std::vector<std::string>& labels, const std::vector<bool>& show_label) {
  for (;;) {
    ChartSpec chart;
    chart.kind = kind;
    chart.seed = seed;
    chart.axes = draw_axes(rng, max_edge);
    chart.width = kMarginLeft + chart.axes.plot_width() + kMarginRight + 1;
    chart.height = kMarginTop + chart.axes.plot_height() + kMarginBottom + 1;
    std::optional<PointStyle> shared;
    if (kind == ChartKind::Polyline) shared = draw_style(rng);
    if (place_points(rng, chart, labels, show_label, shared)) {
      if (kind == ChartKind::Polyline) {
        std::stable_sort(chart.points.begin(), chart.points.end(),
                         [](const ChartPoint& l, const ChartPoint& r) { return l.data_x < r.data_x; });
      }
      return chart;
    }
  }
}

json point_json(const ChartPoint& p) {
  json j = {{"label", p.label},
            {"data", {p.data_x, p.data_y}},
            {"pixel", {p.px, p.py}},
            {"color", std::string(raster::color_name(p.color))},
            {"shape", std::string(shape_name(p.shape))},
            {"size", p.size},
            {"labeled", p.labeled}};
  if (p.label_box) j["label_box"] = {p.label_box->x1, p.label_box->y1, p.label_box->x2, p.label_box->y2};
  return j;
}

std::string format_value(double v) {
  if (v == std::floor(v)) return fmt::format("{}", static_cast<long long>(v));
  return fmt::format("{}", v);
}

template <typename Make>
std::vector<SynthSample> generate(std::uint64_t seed, std::size_t count, unsigned threads, Make make) {
  std::vector<SynthSample> out(count);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = make(seed, i);
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += threads) out[i] = make(seed, i);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

std::string_view cmp_word(Cmp c) { return c == Cmp::Greater ? "greater than" : "less than"; }

}  // namespace

bool CompareCondition::holds(int px, int py, int ref_x, int ref_y) const {
  if (x && !(*x == Cmp::Greater ? px > ref_x : px < ref_x)) return false;
  if (y && !(*y == Cmp::Greater ? py > ref_y : py < ref_y)) return false;
  return x.has_value() || y.has_value();
}

std::string CompareCondition::describe() const {
  std::string out;
  if (x) out += *x == Cmp::Greater ? "x_gt" : "x_lt";
  if (y) out += std::string(x ? "&" : "") + (*y == Cmp::Greater ? "y_gt" : "y_lt");
  return out;
}

Image render_chart(const ChartSpec& chart) {
  Image img(chart.width, chart.height);
  const auto& a = chart.axes;
  const int x0 = a.left;
  const int x1 = a.left + a.plot_width();
  const int y0 = a.top;
  const int y1 = a.top + a.plot_height();

  const int x_step = tick_step(a.ppu_x, 28);
  const int y_step = tick_step(a.ppu_y, 16);
  const auto first_tick = [](int lo, int step) { return ((lo + step - 1) / step) * step; };

  for (int v = first_tick(a.x_min, x_step); v <= a.x_max; v += x_step) {
    const int col = a.to_pixel(v, a.y_min)[0];
    raster::draw_segment(img, col, y0, col, y1, kGrid);
    raster::draw_segment(img, col, y1, col, y1 + 4, raster::palette::black);
    const auto text = std::to_string(v);
    const auto ext = raster::text_extent(text, kTickScale);
    raster::draw_text(img, col - ext.width / 2, y1 + 8, text, raster::palette::black, kTickScale);
  }
  for (int v = first_tick(a.y_min, y_step); v <= a.y_max; v += y_step) {
    const int row = a.to_pixel(a.x_min, v)[1];
    raster::draw_segment(img, x0, row, x1, row, kGrid);
    raster::draw_segment(img, x0 - 4, row, x0, row, raster::palette::black);
    const auto text = std::to_string(v);
    const auto ext = raster::text_extent(text, kTickScale);
    raster::draw_text(img, x0 - 8 - ext.width, row - ext.height / 2, text, raster::palette::black, kTickScale);
  }
  raster::draw_segment(img, x0, y1, x1, y1, raster::palette::black);
  raster::draw_segment(img, x0, y0, x0, y1, raster::palette::black);
  raster::draw_text(img, (x0 + x1) / 2, chart.height - 16, "X", raster::palette::black, kLabelScale);
  raster::draw_text(img, 8, (y0 + y1) / 2, "Y", raster::palette::black, kLabelScale);

  if (chart.kind == ChartKind::Polyline) {
    for (std::size_t i = 1; i < chart.points.size(); ++i) {
      const auto& p = chart.points[i - 1];
      const auto& q = chart.points[i];
      raster::draw_segment(img, p.px, p.py, q.px, q.py, p.color, 2);
    }
  }
  for (const auto& p : chart.points) {
    if (p.label_box) raster::draw_text(img, p.label_box->x1, p.label_box->y1, p.label, raster::palette::black, kLabelScale);
  }
  for (const auto& p : chart.points) raster::stamp_marker(img, p.px, p.py, p.shape, p.size, p.color);
  return img;
}

SynthSample make_read_value(std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, 0x5EAD, index));
  SynthSample s;
  s.id = fmt::format("read_value-{}-{:05}", seed, index);
  s.task = TaskKind::ReadValue;

  const auto n = static_cast<std::size_t>(rng.uniform_int(3, 8));
  const auto kind = rng.bernoulli(0.5) ? ChartKind::Scatter : ChartKind::Polyline;
  const auto labels = label_pool(rng, n);
  s.chart = layout_chart(rng, seed, kReadValueMaxEdge, kind, labels, std::vector<bool>(labels.size(), true));
  s.image = render_chart(s.chart);

  s.target_point = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(s.chart.points.size()) - 1));
  const auto& p = s.chart.points[s.target_point];
  const auto& a = s.chart.axes;
  switch (rng.uniform_int(0, 2)) {
    case 0:
      s.question = fmt::format("What is the x-value of point {}?", p.label);
      s.answer = {static_cast<double>(p.data_x)};
      s.answer_range = {static_cast<double>(a.x_max - a.x_min)};
      s.ground_truth.primitives = {Primitive::x_line(p.px)};
      break;
    case 1:
      s.question = fmt::format("What is the y-value of point {}?", p.label);
      s.answer = {static_cast<double>(p.data_y)};
      s.answer_range = {static_cast<double>(a.y_max - a.y_min)};
      s.ground_truth.primitives = {Primitive::y_line(p.py)};
      break;
    default:
      s.question = fmt::format("What are the coordinates (x, y) of point {}?", p.label);
      s.answer = {static_cast<double>(p.data_x), static_cast<double>(p.data_y)};
      s.answer_range = {static_cast<double>(a.x_max - a.x_min), static_cast<double>(a.y_max - a.y_min)};
      s.ground_truth.primitives = {Primitive::x_line(p.px), Primitive::y_line(p.py)};
      break;
  }
  s.answer_text = s.answer.size() == 1 ? format_value(s.answer[0])
                                       : fmt::format("({}, {})", format_value(s.answer[0]), format_value(s.answer[1]));
  return s;
}

SynthSample make_compare_count(std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, 0xC0C0, index));
  SynthSample s;
  s.id = fmt::format("compare_count-{}-{:05}", seed, index);
  s.task = TaskKind::CompareCount;

  const auto n = static_cast<std::size_t>(rng.uniform_int(8, 20));
  const auto ref = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
  const auto ref_label = label_pool(rng, 1).front();
  std::vector<std::string> labels(n);
  std::vector<bool> shown(n, false);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i == ref ? ref_label : fmt::format("p{}", i);
  shown[ref] = true;
  s.chart = layout_chart(rng, seed, kCompareCountMaxEdge, ChartKind::Scatter, labels, shown);
  s.image = render_chart(s.chart);
  s.target_point = ref;

  CompareCondition cond;
  const auto dir = [&] { return rng.bernoulli(0.5) ? Cmp::Greater : Cmp::Less; };
  switch (rng.uniform_int(0, 5)) {
    case 0: cond.x = Cmp::Greater; break;
    case 1: cond.x = Cmp::Less; break;
    case 2: cond.y = Cmp::Greater; break;
    case 3: cond.y = Cmp::Less; break;
    case 4: cond.x = cond.y = dir(); break;
    default:
      cond.x = dir();
      cond.y = *cond.x == Cmp::Greater ? Cmp::Less : Cmp::Greater;
      break;
  }
  s.condition = cond;

  const auto& r = s.chart.points[ref];
  std::vector<std::string> parts;
  if (cond.x) parts.push_back(fmt::format("x {} {}", cmp_word(*cond.x), r.label));
  if (cond.y) parts.push_back(fmt::format("y {} {}", cmp_word(*cond.y), r.label));
  s.question = parts.size() == 1 ? fmt::format("How many points have {}?", parts[0])
                                 : fmt::format("How many points have {} and {}?", parts[0], parts[1]);

  for (std::size_t i = 0; i < s.chart.points.size(); ++i) {
    const auto& p = s.chart.points[i];
    if (i == ref || !cond.holds(p.data_x, p.data_y, r.data_x, r.data_y)) continue;
    s.qualifying.push_back(p.label);
    s.ground_truth.primitives.push_back(Primitive::point(p.px, p.py));
  }
  if (cond.x) s.ground_truth.primitives.push_back(Primitive::x_line(r.px));
  if (cond.y) s.ground_truth.primitives.push_back(Primitive::y_line(r.py));

  s.answer = {static_cast<double>(s.qualifying.size())};
  s.answer_range = {static_cast<double>(s.chart.points.size())};
  s.answer_text = format_value(s.answer[0]);
  return s;
}

std::vector<SynthSample> gen_read_value(std::uint64_t seed, std::size_t count, unsigned threads) {
  return generate(seed, count, threads, make_read_value);
}

std::vector<SynthSample> gen_compare_count(std::uint64_t seed, std::size_t count, unsigned threads) {
  return generate(seed, count, threads, make_compare_count);
}

std::size_t recount(const SynthSample& sample) {
  if (!sample.condition) return 0;
  const auto& pts = sample.chart.points;
  const auto& r = pts.at(sample.target_point);
  std::size_t n = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i != sample.target_point && sample.condition->holds(pts[i].data_x, pts[i].data_y, r.data_x, r.data_y)) ++n;
  }
  return n;
}

json SynthSample::record(const std::string& image_path) const {
  const auto& a = chart.axes;
  json points = json::array();
  for (const auto& p : chart.points) points.push_back(point_json(p));
  json j = {
      {"id", id},
      {"task", std::string(to_string(task))},
      {"image", image_path},
      {"question", question},
      {"answer", answer.size() == 1 ? json(answer[0]) : json(answer)},
      {"answer_text", answer_text},
      {"answer_range", answer_range},
      {"ground_truth", rewards::ground_truth_to_json(ground_truth)},
      {"seed", chart.seed},
      {"target_point", target_point},
      {"chart",
       {{"kind", chart.kind == ChartKind::Scatter ? "scatter" : "polyline"},
        {"width", chart.width},
        {"height", chart.height},
        {"axes",
         {{"x_min", a.x_min}, {"x_max", a.x_max}, {"y_min", a.y_min}, {"y_max", a.y_max},
          {"left", a.left}, {"top", a.top}, {"ppu_x", a.ppu_x}, {"ppu_y", a.ppu_y}}},
        {"points", std::move(points)}}},
  };
  if (condition) {
    j["condition"] = condition->describe();
    j["strict"] = true;
    j["qualifying"] = qualifying;
  }
  return j;
}

const std::array<tools::Orientation, 5>& augmentations() {
  static const std::array<tools::Orientation, 5> all{tools::Orientation::rotation(1), tools::Orientation::rotation(2),
                                                     tools::Orientation::rotation(3), tools::Orientation::hflip(),
                                                     tools::Orientation::vflip()};
  return all;
}

tools::Orientation sample_augmentation(std::uint64_t seed, double p) {
  Rng rng(derive_seed(seed, 0xA0A0, 0));
  if (!rng.bernoulli(p)) return tools::Orientation::identity();
  return augmentations()[static_cast<std::size_t>(rng.uniform_int(0, 4))];
}

AugmentedDoc augment_doc(const Image& img, std::string question, std::string answer, std::uint64_t seed, double p) {
  AugmentedDoc doc;
  doc.applied = sample_augmentation(seed, p);
  doc.inverse = tools::inverse(doc.applied);
  doc.image = tools::apply_orientation(doc.applied, img);
  doc.question = std::move(question);
  doc.answer = std::move(answer);
  return doc;
}

std::pair<int, int> downscaled_size(int width, int height, int target_max) {
  const int long_edge = std::max(width, height);
  if (long_edge <= target_max) return {width, height};
  const double scale = static_cast<double>(target_max) / long_edge;
  const auto w = std::max(1, static_cast<int>(std::lround(width * scale)));
  const auto h = std::max(1, static_cast<int>(std::lround(height * scale)));
  return {std::min(w, target_max), std::min(h, target_max)};
}

std::vector<std::pair<std::size_t, Image>> select_highres_and_downscale(const std::vector<Image>& imgs,
                                                                        int min_long_edge, int target_max) {
  std::vector<std::pair<std::size_t, Image>> out;
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const auto& img = imgs[i];
    if (std::max(img.width(), img.height()) <= min_long_edge) continue;
    const auto [w, h] = downscaled_size(img.width(), img.height(), target_max);
    out.emplace_back(i, raster::resize_bilinear(img, w, h));
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<SynthSample>& samples) {
  std::filesystem::create_directories(dir / "images");
  std::ofstream manifest(dir / "manifest.jsonl", std::ios::binary);
  if (!manifest) throw Error(ErrorCode::Io, fmt::format("cannot write {}", (dir / "manifest.jsonl").string()));
  for (const auto& s : samples) {
    const std::string rel = "images/" + s.id + ".png";
    raster::write_png(dir / rel, s.image);
    manifest << s.record(rel).dump() << '\n';
  }
  if (!manifest) throw Error(ErrorCode::Io, "manifest write failed");
}

}  // namespace toolsup::synth
