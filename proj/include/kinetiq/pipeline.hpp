#pragma once

// Layered evaluation: each point's color is a left fold of its encoding
// layers, seeded with transparent black.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kinetiq/color.hpp"
#include "kinetiq/game_data.hpp"
#include "kinetiq/kinetics.hpp"
#include "kinetiq/parallel.hpp"
#include "kinetiq/registry.hpp"

namespace kinetiq {

enum class BlendMode { add, multiply, mask };

inline std::string_view blend_name(BlendMode m) {
  switch (m) {
    case BlendMode::add: return "add";
    case BlendMode::multiply: return "multiply";
    case BlendMode::mask: return "mask";
  }
  return "?";
}

inline std::optional<BlendMode> parse_blend(std::string_view s) {
  if (s == "add") return BlendMode::add;
  if (s == "multiply") return BlendMode::multiply;
  if (s == "mask") return BlendMode::mask;
  return std::nullopt;
}

/// Add saturates at 1 on every channel; Multiply is per-channel product;
/// Mask keeps prev's rgb and takes the smaller alpha.
inline Color blend(BlendMode mode, const Color& prev, const Color& cur) {
  switch (mode) {
    case BlendMode::add:
      return {std::min(prev.r + cur.r, 1.0), std::min(prev.g + cur.g, 1.0), std::min(prev.b + cur.b, 1.0),
              std::min(prev.a + cur.a, 1.0)};
    case BlendMode::multiply:
      return {prev.r * cur.r, prev.g * cur.g, prev.b * cur.b, prev.a * cur.a};
    case BlendMode::mask:
      return {prev.r, prev.g, prev.b, std::min(prev.a, cur.a)};
  }
  return prev;
}

struct EncodingLayer {
  AnimationCurve curve{flat_curve(1.0)};
  ColorScale scale{{{0.0, kClear}, {1.0, {1.0, 1.0, 1.0, 1.0}}}};
  ParameterRef parameter{BaselineRef{}};
  BlendMode mode{BlendMode::add};
  double multiplier{1.0};

  friend bool operator==(const EncodingLayer&, const EncodingLayer&) = default;
};

/// Ordered layers; index 0 is the top layer and is folded first.
struct KineticQuery {
  std::vector<EncodingLayer> layers;

  friend bool operator==(const KineticQuery&, const KineticQuery&) = default;
};

/// Intermediates of one layer evaluation.
struct LayerTrace {
  double p{0.0};    // normalized parameter
  double a_t{0.0};  // curve value
  double c{0.0};    // clamp(a_t * p * m, 0, 1)
  Color sampled{};
  Color blended{};
};

inline double interpolation_parameter(double a_t, double p, double m) { return clamp01(a_t * p * m); }

/// Layer step given an already-resolved parameter value.
inline Color apply_layer(const Color& prev, const EncodingLayer& layer, double a_t, double p,
                         LayerTrace* trace = nullptr) {
  const double c = interpolation_parameter(a_t, p, layer.multiplier);
  const Color sampled = layer.scale(c);
  const Color out = blend(layer.mode, prev, sampled);
  if (trace) *trace = {p, a_t, c, sampled, out};
  return out;
}

inline std::pair<Color, LayerTrace> evaluate_layer(const Color& prev, const EncodingLayer& layer, double t,
                                                   const TurnPoint& point, const Dataset& ds,
                                                   const ParameterRegistry& reg) {
  LayerTrace trace;
  const double p = parameter_value(point, layer.parameter, ds, reg);
  Color out = apply_layer(prev, layer, layer.curve(t), p, &trace);
  return {out, trace};
}

/// Final color of one point at time t. When `traces` is given it receives
/// one entry per layer.
inline Color evaluate_point(const KineticQuery& query, double t, const TurnPoint& point, const Dataset& ds,
                            const ParameterRegistry& reg, std::vector<LayerTrace>* traces = nullptr) {
  Color color = kClear;
  if (traces) traces->clear();
  for (const auto& layer : query.layers) {
    auto [next, trace] = evaluate_layer(color, layer, t, point, ds, reg);
    color = next;
    if (traces) traces->push_back(trace);
  }
  return color;
}

/// One frame: a color per point in canonical point order.
struct ColorBuffer {
  double t{0.0};
  std::vector<Color> colors;

  friend bool operator==(const ColorBuffer&, const ColorBuffer&) = default;
};

struct FrameSet {
  std::vector<ColorBuffer> buffers;

  std::size_t n_frames() const { return buffers.size(); }
  friend bool operator==(const FrameSet&, const FrameSet&) = default;
};

inline double frame_time(std::size_t k, std::size_t n_frames) {
  return static_cast<double>(k) / static_cast<double>(n_frames);
}

/// Query with every layer's parameter resolved to a column over the
/// dataset's points. Parameters do not depend on t, so a loop resolves them
/// once and then only re-evaluates curves.
class PreparedQuery {
 public:
  PreparedQuery(const KineticQuery& query, const Dataset& ds, const ParameterRegistry& reg)
      : query_(&query), points_(point_index(ds)) {
    columns_.resize(query.layers.size());
    for (std::size_t l = 0; l < query.layers.size(); ++l) {
      auto& col = columns_[l];
      col.reserve(points_.size());
      for (const auto& pt : points_) col.push_back(parameter_value(pt, query.layers[l].parameter, ds, reg));
    }
  }

  const std::vector<TurnPoint>& points() const { return points_; }

  ColorBuffer frame(double t) const {
    const auto& layers = query_->layers;
    std::vector<double> a_t(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) a_t[l] = layers[l].curve(t);
    ColorBuffer buf{t, std::vector<Color>(points_.size(), kClear)};
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& col = columns_[l];
      for (std::size_t i = 0; i < points_.size(); ++i)
        buf.colors[i] = apply_layer(buf.colors[i], layers[l], a_t[l], col[i]);
    }
    return buf;
  }

 private:
  const KineticQuery* query_;
  std::vector<TurnPoint> points_;
  std::vector<std::vector<double>> columns_;
};

inline ColorBuffer evaluate_frame(const KineticQuery& query, double t, const Dataset& ds,
                                  const ParameterRegistry& reg) {
  return PreparedQuery(query, ds, reg).frame(t);
}

inline FrameSet evaluate_loop(const KineticQuery& query, const Dataset& ds, const ParameterRegistry& reg,
                              std::size_t n_frames) {
  if (n_frames < 1) throw std::invalid_argument("n_frames must be >= 1");
  PreparedQuery prepared(query, ds, reg);
  FrameSet fs;
  fs.buffers.resize(n_frames);
  parallel_for(n_frames, [&](std::size_t k) { fs.buffers[k] = prepared.frame(frame_time(k, n_frames)); });
  return fs;
}

}  // namespace kinetiq
