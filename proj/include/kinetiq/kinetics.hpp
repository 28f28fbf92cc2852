#pragma once

// Animation curves and color scales: the two per-layer lookup primitives.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "kinetiq/color.hpp"

namespace kinetiq {

struct Keyframe {
  double t{0.0};  // phase in [0,1)
  double v{0.0};  // value in [0,1]

  friend bool operator==(const Keyframe&, const Keyframe&) = default;
};

// Preset descriptors are kept alongside the keyframes they expand to so a
// document can be written back in the form it was authored in.
struct FlatPreset {
  double value{1.0};
  friend bool operator==(const FlatPreset&, const FlatPreset&) = default;
};
struct PulsePreset {
  double center{0.5};
  double width{0.5};
  friend bool operator==(const PulsePreset&, const PulsePreset&) = default;
};
struct RampPreset {
  friend bool operator==(const RampPreset&, const RampPreset&) = default;
};
using CurvePreset = std::variant<FlatPreset, PulsePreset, RampPreset>;

inline constexpr double kRampEpsilon = 1.0 / 1024.0;

/// Periodic piecewise-linear curve over loop phase, period 1.
///
/// Between the last keyframe and the first, interpolation wraps: the first
/// keyframe is treated as lying at t_first + 1.
class AnimationCurve {
 public:
  explicit AnimationCurve(std::vector<Keyframe> keys,
                          std::optional<CurvePreset> preset = std::nullopt)
      : keys_(std::move(keys)), preset_(std::move(preset)) {
    if (auto err = check(keys_)) throw std::invalid_argument(*err);
  }

  /// Returns a description of the first violated invariant, if any.
  static std::optional<std::string> check(const std::vector<Keyframe>& keys) {
    if (keys.empty()) return "curve needs at least one keyframe";
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const auto& k = keys[i];
      if (!std::isfinite(k.t) || k.t < 0.0 || k.t >= 1.0)
        return "keyframe " + std::to_string(i) + " time must lie in [0,1)";
      if (!std::isfinite(k.v) || k.v < 0.0 || k.v > 1.0)
        return "keyframe " + std::to_string(i) + " value must lie in [0,1]";
      if (i > 0 && !(k.t > keys[i - 1].t))
        return "keyframe times must be strictly increasing (index " + std::to_string(i) + ")";
    }
    return std::nullopt;
  }

  const std::vector<Keyframe>& keyframes() const { return keys_; }
  const std::optional<CurvePreset>& preset() const { return preset_; }

  double operator()(double t) const;

  friend bool operator==(const AnimationCurve&, const AnimationCurve&) = default;

 private:
  std::vector<Keyframe> keys_;
  std::optional<CurvePreset> preset_;
};

inline double phase_of(double t) {
  double p = t - std::floor(t);
  // t slightly below an integer can round up to exactly 1.
  return p >= 1.0 ? 0.0 : p;
}

inline double AnimationCurve::operator()(double t) const {
  const auto& k = keys_;
  if (k.size() == 1 || !std::isfinite(t)) return k.front().v;
  const double p = phase_of(t);

  const Keyframe* lo;
  const Keyframe* hi;
  double t_lo, t_hi;
  if (p < k.front().t) {
    lo = &k.back();
    hi = &k.front();
    t_lo = k.back().t - 1.0;
    t_hi = k.front().t;
  } else if (p >= k.back().t) {
    lo = &k.back();
    hi = &k.front();
    t_lo = k.back().t;
    t_hi = k.front().t + 1.0;
  } else {
    auto it = std::upper_bound(k.begin(), k.end(), p,
                               [](double x, const Keyframe& kf) { return x < kf.t; });
    hi = &*it;
    lo = &*(it - 1);
    t_lo = lo->t;
    t_hi = hi->t;
  }
  if (p == t_lo) return lo->v;
  const double f = (p - t_lo) / (t_hi - t_lo);
  return clamp01(lo->v + (hi->v - lo->v) * f);
}

inline double eval_curve(const AnimationCurve& curve, double t) { return curve(t); }

inline AnimationCurve flat_curve(double value) {
  if (!(value >= 0.0 && value <= 1.0)) throw std::invalid_argument("flat value must lie in [0,1]");
  return AnimationCurve({{0.0, value}}, FlatPreset{value});
}

/// Triangle peaking at `center`, zero at center +/- width/2 (phases wrap).
inline AnimationCurve pulse_curve(double center, double width) {
  if (!(center >= 0.0 && center < 1.0)) throw std::invalid_argument("pulse center must lie in [0,1)");
  if (!(width > 0.0 && width <= 1.0)) throw std::invalid_argument("pulse width must lie in (0,1]");
  std::vector<Keyframe> keys{{phase_of(center - width / 2), 0.0},
                             {center, 1.0},
                             {phase_of(center + width / 2), 0.0}};
  std::sort(keys.begin(), keys.end(), [](const Keyframe& a, const Keyframe& b) {
    return a.t < b.t || (a.t == b.t && a.v > b.v);
  });
  // width 1 puts both feet on the same phase
  keys.erase(std::unique(keys.begin(), keys.end(),
                         [](const Keyframe& a, const Keyframe& b) { return a.t == b.t; }),
             keys.end());
  return AnimationCurve(std::move(keys), PulsePreset{center, width});
}

inline AnimationCurve ramp_curve() {
  return AnimationCurve({{0.0, 0.0}, {1.0 - kRampEpsilon, 1.0}}, RampPreset{});
}

inline AnimationCurve make_preset(const CurvePreset& preset) {
  return std::visit(
      [](const auto& p) -> AnimationCurve {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FlatPreset>) return flat_curve(p.value);
        else if constexpr (std::is_same_v<P, PulsePreset>) return pulse_curve(p.center, p.width);
        else return ramp_curve();
      },
      preset);
}

struct ColorStop {
  double pos{0.0};
  Color color{};

  friend bool operator==(const ColorStop&, const ColorStop&) = default;
};

/// Piecewise-linear RGBA gradient. Coincident stop positions form a hard
/// step; the later stop owns the shared position.
class ColorScale {
 public:
  explicit ColorScale(std::vector<ColorStop> stops) : stops_(std::move(stops)) {
    if (auto err = check(stops_)) throw std::invalid_argument(*err);
  }

  static std::optional<std::string> check(const std::vector<ColorStop>& stops) {
    if (stops.empty()) return "color scale needs at least one stop";
    for (std::size_t i = 0; i < stops.size(); ++i) {
      const auto& s = stops[i];
      if (!std::isfinite(s.pos) || s.pos < 0.0 || s.pos > 1.0)
        return "stop " + std::to_string(i) + " position must lie in [0,1]";
      if (!s.color.valid()) return "stop " + std::to_string(i) + " color channels must lie in [0,1]";
      if (i > 0 && s.pos < stops[i - 1].pos)
        return "stop positions must be nondecreasing (index " + std::to_string(i) + ")";
    }
    return std::nullopt;
  }

  const std::vector<ColorStop>& stops() const { return stops_; }

  Color operator()(double c) const {
    const auto& s = stops_;
    c = std::isfinite(c) ? clamp01(c) : 0.0;
    if (c < s.front().pos) return s.front().color;
    if (c >= s.back().pos) return s.back().color;
    // s.front().pos <= c < s.back().pos, so both neighbours exist
    auto it = std::upper_bound(s.begin(), s.end(), c,
                               [](double x, const ColorStop& st) { return x < st.pos; });
    const ColorStop& hi = *it;
    const ColorStop& lo = *(it - 1);
    if (c == lo.pos) return lo.color;
    return lerp(lo.color, hi.color, (c - lo.pos) / (hi.pos - lo.pos));
  }

  friend bool operator==(const ColorScale&, const ColorScale&) = default;

 private:
  std::vector<ColorStop> stops_;
};

inline Color sample_scale(const ColorScale& scale, double c) { return scale(c); }

}  // namespace kinetiq
