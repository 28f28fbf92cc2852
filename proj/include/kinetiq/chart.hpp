#pragma once

// Line-chart layout and per-segment gradient rasterization.
//
// Coordinates are output pixels with pixel (x, y) covering [x, x+1) x [y, y+1).
// Lines are rasterized on a supersampled grid: a sample is covered when its
// center lies within line_width/2 of the segment (round caps and joins), then
// blocks are box-filtered down. Each polyline is stamped once (a sample
// covered by several of its segments takes the nearest one), and polylines
// are composited "over" in dataset order.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kinetiq/color.hpp"
#include "kinetiq/game_data.hpp"
#include "kinetiq/pipeline.hpp"
#include "kinetiq/registry.hpp"

namespace kinetiq {

enum class AnimationFormat { apng, gif, png_sequence };

inline std::string_view format_name(AnimationFormat f) {
  switch (f) {
    case AnimationFormat::apng: return "apng";
    case AnimationFormat::gif: return "gif";
    case AnimationFormat::png_sequence: return "png_sequence";
  }
  return "?";
}

inline std::optional<AnimationFormat> parse_format(std::string_view s) {
  if (s == "apng") return AnimationFormat::apng;
  if (s == "gif") return AnimationFormat::gif;
  if (s == "png_sequence") return AnimationFormat::png_sequence;
  return std::nullopt;
}

struct Margins {
  int left{56};
  int right{24};
  int top{24};
  int bottom{40};
  friend bool operator==(const Margins&, const Margins&) = default;
};

struct RenderConfig {
  int width{960};
  int height{540};
  Margins margins{};
  double line_width{2.0};
  Color background{0.07, 0.07, 0.09, 1.0};
  int supersample{2};
  int n_frames{60};
  int fps{30};
  std::optional<Domain> y_domain;
  bool axes{true};
  AnimationFormat format{AnimationFormat::apng};

  friend bool operator==(const RenderConfig&, const RenderConfig&) = default;

  std::optional<std::string> check() const {
    if (width < 64 || height < 64) return "width and height must be >= 64";
    if (margins.left < 0 || margins.right < 0 || margins.top < 0 || margins.bottom < 0)
      return "margins must be >= 0";
    if (margins.left + margins.right >= width || margins.top + margins.bottom >= height)
      return "margins leave no plot area";
    if (!(line_width >= 1.0) || !std::isfinite(line_width)) return "line_width must be >= 1";
    if (!background.valid()) return "background channels must lie in [0,1]";
    if (supersample != 1 && supersample != 2 && supersample != 4) return "supersample must be 1, 2 or 4";
    if (n_frames < 1) return "n_frames must be >= 1";
    if (fps < 1) return "fps must be >= 1";
    if (y_domain && !(y_domain->lo < y_domain->hi)) return "y_domain needs lo < hi";
    return std::nullopt;
  }
};

struct Vec2 {
  double x{0.0};
  double y{0.0};
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Tick {
  double pos{0.0};  // pixel coordinate along the axis
  std::string label;
  friend bool operator==(const Tick&, const Tick&) = default;
};

/// One polyline per playthrough, one vertex per turn, in canonical point order.
struct ChartGeometry {
  int width{0};
  int height{0};
  std::vector<std::vector<Vec2>> polylines;
  std::vector<Tick> x_ticks;
  std::vector<Tick> y_ticks;
  double plot_left{0}, plot_right{0}, plot_top{0}, plot_bottom{0};

  std::size_t vertex_count() const {
    std::size_t n = 0;
    for (const auto& p : polylines) n += p.size();
    return n;
  }
};

struct Image {
  int width{0};
  int height{0};
  std::vector<std::uint8_t> rgba;  // row-major, 4 bytes per pixel

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgba(static_cast<std::size_t>(w) * h * 4, 0) {}

  std::uint8_t* at(int x, int y) { return &rgba[(static_cast<std::size_t>(y) * width + x) * 4]; }
  const std::uint8_t* at(int x, int y) const { return &rgba[(static_cast<std::size_t>(y) * width + x) * 4]; }

  friend bool operator==(const Image&, const Image&) = default;
};

inline std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0)); }

inline Image filled_image(int w, int h, const Color& c) {
  Image img(w, h);
  const std::array<std::uint8_t, 4> px{to_byte(c.r), to_byte(c.g), to_byte(c.b), to_byte(c.a)};
  for (std::size_t i = 0; i < img.rgba.size(); i += 4) std::copy(px.begin(), px.end(), img.rgba.begin() + i);
  return img;
}

namespace detail {

/// Step from {1, 2, 5} x 10^k giving at most ~max_ticks intervals over span.
inline double nice_step(double span, int max_ticks) {
  if (!(span > 0)) return 1.0;
  double raw = span / max_ticks;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

inline std::string tick_label(double v) {
  char buf[32];
  if (std::abs(v - std::round(v)) < 1e-9) std::snprintf(buf, sizeof buf, "%.0f", v);
  else std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

/// x: turn index over [margin_left, width - margin_right] using the dataset-wide
/// max turn. y: total votes over [0, max] (or y_domain), inverted.
inline ChartGeometry layout(const Dataset& ds, const RenderConfig& cfg) {
  if (ds.empty()) throw std::invalid_argument("cannot lay out an empty dataset");
  ChartGeometry g;
  g.width = cfg.width;
  g.height = cfg.height;
  g.plot_left = cfg.margins.left;
  g.plot_right = cfg.width - cfg.margins.right;
  g.plot_top = cfg.margins.top;
  g.plot_bottom = cfg.height - cfg.margins.bottom;

  int max_turn = 0;
  std::int64_t max_votes = 0;
  for (const auto& pt : ds.playthroughs)
    for (const auto& tr : pt.turns) {
      max_turn = std::max(max_turn, tr.turn_index);
      max_votes = std::max(max_votes, tr.total_votes);
    }
  Domain y = cfg.y_domain.value_or(Domain{0.0, max_votes > 0 ? static_cast<double>(max_votes) : 1.0});

  const double pw = g.plot_right - g.plot_left;
  const double ph = g.plot_bottom - g.plot_top;
  auto x_of = [&](double turn) { return max_turn > 0 ? g.plot_left + turn / max_turn * pw : g.plot_left; };
  auto y_of = [&](double v) { return g.plot_bottom - (v - y.lo) / (y.hi - y.lo) * ph; };

  g.polylines.reserve(ds.playthroughs.size());
  for (const auto& pt : ds.playthroughs) {
    std::vector<Vec2> line;
    line.reserve(pt.turns.size());
    for (const auto& tr : pt.turns)
      line.push_back({x_of(tr.turn_index), y_of(static_cast<double>(tr.total_votes))});
    g.polylines.push_back(std::move(line));
  }

  const double xs = std::max(1.0, detail::nice_step(max_turn, 10));
  for (double v = 0; v <= max_turn + 1e-9; v += xs) g.x_ticks.push_back({x_of(v), detail::tick_label(v)});
  const double ys = detail::nice_step(y.hi - y.lo, 5);
  for (double v = std::ceil(y.lo / ys) * ys; v <= y.hi + 1e-9 * ys; v += ys)
    g.y_ticks.push_back({y_of(v), detail::tick_label(v)});
  return g;
}

namespace detail {

// 3x5 glyphs, rows top to bottom, bit 2 = left column.
inline const std::array<std::uint8_t, 5>* glyph(char ch) {
  static const std::array<std::array<std::uint8_t, 5>, 13> font{{
      {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
      {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
      {0, 0, 7, 0, 0},  // '-'
      {0, 0, 0, 0, 2},  // '.'
      {5, 5, 2, 5, 5},  // 'e'-ish fallback for exponents
  }};
  if (ch >= '0' && ch <= '9') return &font[ch - '0'];
  if (ch == '-') return &font[10];
  if (ch == '.') return &font[11];
  if (ch == 'e' || ch == '+') return &font[12];
  return nullptr;
}

/// Premultiplied RGBA canvas at supersampled resolution.
struct Canvas {
  int width{0};
  int height{0};
  std::vector<double> px;

  Canvas(int w, int h, const Color& fill) : width(w), height(h), px(static_cast<std::size_t>(w) * h * 4) {
    const double pre[4] = {fill.r * fill.a, fill.g * fill.a, fill.b * fill.a, fill.a};
    for (std::size_t i = 0; i < px.size(); i += 4) std::copy(pre, pre + 4, px.begin() + i);
  }

  void over(std::size_t pixel, const Color& c) {
    double* d = &px[pixel * 4];
    const double k = 1.0 - c.a;
    d[0] = c.r * c.a + d[0] * k;
    d[1] = c.g * c.a + d[1] * k;
    d[2] = c.b * c.a + d[2] * k;
    d[3] = c.a + d[3] * k;
  }

  void fill_rect(int x0, int y0, int x1, int y1, const Color& c) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, width);
    y1 = std::min(y1, height);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) over(static_cast<std::size_t>(y) * width + x, c);
  }

  Image downsample(int factor) const {
    Image img(width / factor, height / factor);
    const double inv = 1.0 / (factor * factor);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const double* first = &px[(static_cast<std::size_t>(y * factor) * width + x * factor) * 4];
        double acc[4] = {0, 0, 0, 0};
        bool uniform = true;
        for (int sy = 0; sy < factor; ++sy)
          for (int sx = 0; sx < factor; ++sx) {
            const double* s = &px[(static_cast<std::size_t>(y * factor + sy) * width + x * factor + sx) * 4];
            uniform = uniform && s[0] == first[0] && s[1] == first[1] && s[2] == first[2] && s[3] == first[3];
            for (int c = 0; c < 4; ++c) acc[c] += s[c];
          }
        if (uniform) std::copy(first, first + 4, acc);
        else
          for (double& v : acc) v *= inv;
        std::uint8_t* out = img.at(x, y);
        if (acc[3] <= 0.0) {
          out[0] = out[1] = out[2] = out[3] = 0;
          continue;
        }
        out[0] = to_byte(acc[0] / acc[3]);
        out[1] = to_byte(acc[1] / acc[3]);
        out[2] = to_byte(acc[2] / acc[3]);
        out[3] = to_byte(acc[3]);
      }
    return img;
  }
};

/// Interval of x where lo <= k*x + c <= hi; empty when first > second.
inline std::pair<double, double> solve_band(double k, double c, double lo, double hi) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (k == 0.0) return (c >= lo && c <= hi) ? std::pair{-inf, inf} : std::pair{inf, -inf};
  double a = (lo - c) / k;
  double b = (hi - c) / k;
  return a <= b ? std::pair{a, b} : std::pair{b, a};
}

}  // namespace detail

/// Frame-independent coverage of a geometry: for every covered sample, the
/// two points whose colors it interpolates and the blend fraction.
class RasterPlan {
 public:
  struct Entry {
    std::uint32_t sample;
    std::uint32_t from;  // canonical point index
    std::uint32_t to;
    float u;
  };

  RasterPlan(const ChartGeometry& geometry, const RenderConfig& cfg)
      : cfg_(cfg), width_(geometry.width), height_(geometry.height) {
    if (auto err = cfg.check()) throw std::invalid_argument(*err);
    if (geometry.width != cfg.width || geometry.height != cfg.height)
      throw std::invalid_argument("geometry and render config sizes differ");
    const int s = cfg.supersample;
    sw_ = width_ * s;
    sh_ = height_ * s;
    point_count_ = geometry.vertex_count();
    build_base(geometry);
    build_entries(geometry);
  }

  std::size_t point_count() const { return point_count_; }
  const std::vector<Entry>& entries() const { return entries_; }
  const RenderConfig& config() const { return cfg_; }

  Image render(const ColorBuffer& buffer) const {
    if (buffer.colors.size() != point_count_)
      throw std::invalid_argument("color buffer does not match geometry point count");
    const int s = cfg_.supersample;
    const std::size_t sw = static_cast<std::size_t>(sw_);

    // scratch canvas: only samples inside dirty blocks are ever read
    thread_local std::vector<float> canvas;
    canvas.resize(base_.size());
    for (auto pixel : dirty_) {
      const std::size_t x = pixel % width_, y = pixel / width_;
      for (int sy = 0; sy < s; ++sy) {
        const std::size_t off = ((y * s + sy) * sw + x * s) * 4;
        std::copy_n(base_.begin() + off, 4 * s, canvas.begin() + off);
      }
    }

    thread_local std::vector<std::array<float, 4>> colors;
    colors.resize(point_count_);
    for (std::size_t i = 0; i < point_count_; ++i) {
      const Color& c = buffer.colors[i];
      colors[i] = {static_cast<float>(c.r), static_cast<float>(c.g), static_cast<float>(c.b), static_cast<float>(c.a)};
    }
    for (const auto& e : entries_) {
      const auto& a = colors[e.from];
      const auto& b = colors[e.to];
      const float u = e.u;
      const float alpha = a[3] + (b[3] - a[3]) * u;
      if (alpha <= 0.0f) continue;
      float* d = &canvas[static_cast<std::size_t>(e.sample) * 4];
      const float k = 1.0f - alpha;
      d[0] = (a[0] + (b[0] - a[0]) * u) * alpha + d[0] * k;
      d[1] = (a[1] + (b[1] - a[1]) * u) * alpha + d[1] * k;
      d[2] = (a[2] + (b[2] - a[2]) * u) * alpha + d[2] * k;
      d[3] = alpha + d[3] * k;
    }

    Image img = base_image_;
    const float inv = 1.0f / static_cast<float>(s * s);
    for (auto pixel : dirty_) {
      const std::size_t x = pixel % width_, y = pixel / width_;
      float acc[4] = {0, 0, 0, 0};
      bool unchanged = true;
      for (int sy = 0; sy < s; ++sy) {
        const std::size_t off = ((y * s + sy) * sw + x * s) * 4;
        for (int k = 0; k < 4 * s; ++k) {
          acc[k & 3] += canvas[off + k];
          unchanged = unchanged && canvas[off + k] == base_[off + k];
        }
      }
      if (unchanged) continue;  // keeps the exact base pixel
      std::uint8_t* out = &img.rgba[static_cast<std::size_t>(pixel) * 4];
      const float alpha = acc[3] * inv;
      if (alpha <= 0.0f) {
        out[0] = out[1] = out[2] = out[3] = 0;
        continue;
      }
      for (int k = 0; k < 3; ++k) out[k] = to_byte(static_cast<double>(acc[k] / acc[3]));
      out[3] = to_byte(static_cast<double>(alpha));
    }
    return img;
  }

 private:
  void build_base(const ChartGeometry& g) {
    detail::Canvas base(sw_, sh_, cfg_.background);
    draw_axes(base, g);
    base_.assign(base.px.begin(), base.px.end());
    base_image_ = base.downsample(cfg_.supersample);
  }

  void draw_axes(detail::Canvas& base_, const ChartGeometry& g) const {
    if (!cfg_.axes) return;
    const int s = cfg_.supersample;
    const Color axis{0.55, 0.55, 0.6, 1.0};
    auto px = [s](double v) { return static_cast<int>(std::lround(v * s)); };
    const int l = px(g.plot_left), r = px(g.plot_right), t = px(g.plot_top), b = px(g.plot_bottom);
    base_.fill_rect(l - s, t, l, b + s, axis);  // y axis
    base_.fill_rect(l - s, b, r, b + s, axis);  // x axis
    auto text = [&](const std::string& label, double cx, double top, bool right_align) {
      const int cell = 2 * s;  // each glyph pixel is 2x2 output pixels
      const int adv = 4 * cell;
      int x = right_align ? static_cast<int>(std::lround(cx * s)) - adv * static_cast<int>(label.size())
                          : static_cast<int>(std::lround(cx * s)) - adv * static_cast<int>(label.size()) / 2;
      const int y = static_cast<int>(std::lround(top * s));
      for (char ch : label) {
        if (auto gl = detail::glyph(ch))
          for (int row = 0; row < 5; ++row)
            for (int col = 0; col < 3; ++col)
              if ((*gl)[row] & (4 >> col))
                base_.fill_rect(x + col * cell, y + row * cell, x + (col + 1) * cell, y + (row + 1) * cell, axis);
        x += adv;
      }
    };
    for (const auto& tk : g.x_ticks) {
      base_.fill_rect(px(tk.pos) - s / 2, b + s, px(tk.pos) - s / 2 + s, b + 5 * s, axis);
      text(tk.label, tk.pos, g.plot_bottom + 8, false);
    }
    for (const auto& tk : g.y_ticks) {
      base_.fill_rect(l - 5 * s, px(tk.pos) - s / 2, l - s, px(tk.pos) - s / 2 + s, axis);
      text(tk.label, g.plot_left - 8, tk.pos - 5, true);
    }
  }

  void build_entries(const ChartGeometry& g) {
    const double s = cfg_.supersample;
    const double hw = cfg_.line_width * s / 2.0;
    const double hw2 = hw * hw;
    constexpr float kFar = std::numeric_limits<float>::infinity();

    struct Best {
      float dist2 = kFar;
      std::uint32_t from = 0, to = 0;
      float u = 0;
    };
    std::vector<Best> best(static_cast<std::size_t>(sw_) * sh_);
    std::vector<std::uint32_t> touched;

    std::uint32_t offset = 0;
    for (const auto& line : g.polylines) {
      touched.clear();
      const std::size_t nseg = line.size() > 1 ? line.size() - 1 : 1;
      for (std::size_t i = 0; i < nseg; ++i) {
        const Vec2 A{line[i].x * s, line[i].y * s};
        const Vec2 B = line.size() > 1 ? Vec2{line[i + 1].x * s, line[i + 1].y * s} : A;
        const std::uint32_t ia = offset + static_cast<std::uint32_t>(i);
        const std::uint32_t ib = line.size() > 1 ? ia + 1 : ia;
        stamp_segment(A, B, ia, ib, hw, hw2, best, touched);
      }
      std::sort(touched.begin(), touched.end());
      for (auto sample : touched) {
        auto& b = best[sample];
        entries_.push_back({sample, b.from, b.to, b.u});
        b = Best{};
      }
      offset += static_cast<std::uint32_t>(line.size());
    }
    const int s_int = cfg_.supersample;
    std::vector<bool> dirty(static_cast<std::size_t>(width_) * height_, false);
    for (const auto& e : entries_) {
      const std::size_t x = (e.sample % sw_) / s_int, y = (e.sample / sw_) / s_int;
      dirty[y * width_ + x] = true;
    }
    for (std::size_t i = 0; i < dirty.size(); ++i)
      if (dirty[i]) dirty_.push_back(static_cast<std::uint32_t>(i));
  }

  template <typename BestVec>
  void stamp_segment(Vec2 A, Vec2 B, std::uint32_t ia, std::uint32_t ib, double hw, double hw2, BestVec& best,
                     std::vector<std::uint32_t>& touched) const {
    const double dx = B.x - A.x, dy = B.y - A.y;
    const double len2 = dx * dx + dy * dy;
    const double len = std::sqrt(len2);
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(A.y, B.y) - hw - 0.5)));
    const int y1 = std::min(sh_ - 1, static_cast<int>(std::ceil(std::max(A.y, B.y) + hw - 0.5)));
    for (int y = y0; y <= y1; ++y) {
      const double yc = y + 0.5;
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const Vec2& P : {A, B}) {
        double dyp = yc - P.y;
        if (dyp * dyp <= hw2) {
          double h = std::sqrt(hw2 - dyp * dyp);
          lo = std::min(lo, P.x - h);
          hi = std::max(hi, P.x + h);
        }
      }
      if (len2 > 0) {
        // perpendicular distance and projection are linear in x
        auto perp = detail::solve_band(dy / len, -(A.x * dy + (yc - A.y) * dx) / len, -hw, hw);
        auto proj = detail::solve_band(dx / len2, (-A.x * dx + (yc - A.y) * dy) / len2, 0.0, 1.0);
        double blo = std::max(perp.first, proj.first), bhi = std::min(perp.second, proj.second);
        if (blo <= bhi) {
          lo = std::min(lo, blo);
          hi = std::max(hi, bhi);
        }
      }
      if (!(lo <= hi)) continue;
      const int x0 = std::max(0, static_cast<int>(std::floor(lo - 0.5)));
      const int x1 = std::min(sw_ - 1, static_cast<int>(std::ceil(hi - 0.5)));
      for (int x = x0; x <= x1; ++x) {
        const double xc = x + 0.5;
        double u = len2 > 0 ? ((xc - A.x) * dx + (yc - A.y) * dy) / len2 : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        const double px = A.x + u * dx - xc, py = A.y + u * dy - yc;
        const double d2 = px * px + py * py;
        if (d2 > hw2) continue;
        const auto sample = static_cast<std::uint32_t>(y) * sw_ + x;
        auto& b = best[sample];
        if (b.dist2 == std::numeric_limits<float>::infinity()) touched.push_back(sample);
        if (static_cast<float>(d2) < b.dist2) b = {static_cast<float>(d2), ia, ib, static_cast<float>(u)};
      }
    }
  }

  RenderConfig cfg_;
  int width_, height_, sw_{0}, sh_{0};
  std::size_t point_count_{0};
  std::vector<float> base_;  // premultiplied supersampled background and axes
  Image base_image_;
  std::vector<Entry> entries_;
  std::vector<std::uint32_t> dirty_;  // output pixels whose block holds any entry
};

inline Image rasterize_frame(const ChartGeometry& geometry, const ColorBuffer& buffer, const RenderConfig& cfg) {
  return RasterPlan(geometry, cfg).render(buffer);
}

}  // namespace kinetiq
