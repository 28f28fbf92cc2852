#pragma once

#include <algorithm>
#include <cmath>

namespace kinetiq {

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

/// Straight (non-premultiplied) RGBA, every channel in [0,1].
struct Color {
  double r{0.0};
  double g{0.0};
  double b{0.0};
  double a{0.0};

  friend bool operator==(const Color&, const Color&) = default;

  bool valid() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    return in_unit(r) && in_unit(g) && in_unit(b) && in_unit(a);
  }
};

inline constexpr Color kClear{0.0, 0.0, 0.0, 0.0};

inline Color lerp(const Color& x, const Color& y, double f) {
  auto mix = [f](double p, double q) { return clamp01(p + (q - p) * f); };
  return {mix(x.r, y.r), mix(x.g, y.g), mix(x.b, y.b), mix(x.a, y.a)};
}

}  // namespace kinetiq
