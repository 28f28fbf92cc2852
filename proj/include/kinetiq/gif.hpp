#pragma once

// GIF89a animation writer: per-frame adaptive palette (median cut over the
// frame's opaque colors), NETSCAPE2.0 infinite loop, alpha < 128 mapped to a
// transparent index.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "kinetiq/chart.hpp"
#include "kinetiq/png.hpp"

namespace kinetiq {

namespace gif_detail {

using Rgb = std::array<std::uint8_t, 3>;

struct Palette {
  std::vector<Rgb> colors;  // <= 255 entries; index 255 is reserved for transparency
  std::map<std::uint32_t, std::uint8_t> lookup;
};

inline std::uint32_t pack(const std::uint8_t* p) { return (p[0] << 16) | (p[1] << 8) | p[2]; }

/// Median cut over a color histogram, at most `max_colors` boxes.
inline Palette build_palette(const Image& img, std::size_t max_colors) {
  std::map<std::uint32_t, std::uint32_t> hist;
  for (std::size_t i = 0; i < img.rgba.size(); i += 4)
    if (img.rgba[i + 3] >= 128) ++hist[pack(&img.rgba[i])];

  struct Entry {
    Rgb c;
    std::uint32_t count;
  };
  std::vector<Entry> entries;
  entries.reserve(hist.size());
  for (auto [key, n] : hist)
    entries.push_back({{static_cast<std::uint8_t>(key >> 16), static_cast<std::uint8_t>(key >> 8),
                        static_cast<std::uint8_t>(key)},
                       n});

  Palette pal;
  if (entries.empty()) return pal;
  if (entries.size() <= max_colors) {
    for (const auto& e : entries) {
      pal.lookup[(e.c[0] << 16) | (e.c[1] << 8) | e.c[2]] = static_cast<std::uint8_t>(pal.colors.size());
      pal.colors.push_back(e.c);
    }
    return pal;
  }

  struct Box {
    std::size_t lo, hi;  // range in entries
  };
  auto extent = [&](const Box& b, int& axis) {
    int best = -1;
    for (int ch = 0; ch < 3; ++ch) {
      int mn = 255, mx = 0;
      for (std::size_t i = b.lo; i < b.hi; ++i) {
        mn = std::min<int>(mn, entries[i].c[ch]);
        mx = std::max<int>(mx, entries[i].c[ch]);
      }
      if (mx - mn > best) {
        best = mx - mn;
        axis = ch;
      }
    }
    return best;
  };
  std::vector<Box> boxes{{0, entries.size()}};
  while (boxes.size() < max_colors) {
    // split the box with the widest channel range
    std::size_t pick = boxes.size();
    int widest = 0, axis = 0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (boxes[i].hi - boxes[i].lo < 2) continue;
      int ax;
      int w = extent(boxes[i], ax);
      if (w > widest) {
        widest = w;
        pick = i;
        axis = ax;
      }
    }
    if (pick == boxes.size()) break;
    Box b = boxes[pick];
    std::sort(entries.begin() + b.lo, entries.begin() + b.hi,
              [axis](const Entry& x, const Entry& y) { return x.c[axis] < y.c[axis]; });
    std::uint64_t total = 0;
    for (std::size_t i = b.lo; i < b.hi; ++i) total += entries[i].count;
    std::uint64_t acc = 0;
    std::size_t mid = b.lo + 1;
    for (std::size_t i = b.lo; i < b.hi - 1; ++i) {
      acc += entries[i].count;
      mid = i + 1;
      if (acc * 2 >= total) break;
    }
    boxes[pick] = {b.lo, mid};
    boxes.push_back({mid, b.hi});
  }
  for (const auto& b : boxes) {
    std::uint64_t n = 0, s[3] = {0, 0, 0};
    for (std::size_t i = b.lo; i < b.hi; ++i) {
      n += entries[i].count;
      for (int ch = 0; ch < 3; ++ch) s[ch] += std::uint64_t{entries[i].c[ch]} * entries[i].count;
    }
    const auto idx = static_cast<std::uint8_t>(pal.colors.size());
    pal.colors.push_back({static_cast<std::uint8_t>((s[0] + n / 2) / n), static_cast<std::uint8_t>((s[1] + n / 2) / n),
                          static_cast<std::uint8_t>((s[2] + n / 2) / n)});
    for (std::size_t i = b.lo; i < b.hi; ++i)
      pal.lookup[(entries[i].c[0] << 16) | (entries[i].c[1] << 8) | entries[i].c[2]] = idx;
  }
  return pal;
}

/// Variable-width LZW as used by GIF, emitting packed little-endian codes.
inline Bytes lzw_encode(const std::vector<std::uint8_t>& indices, int min_code_size) {
  const int clear = 1 << min_code_size;
  const int eoi = clear + 1;
  Bytes out;
  std::uint32_t bitbuf = 0;
  int bitcount = 0;
  int code_size = min_code_size + 1;
  auto emit = [&](int code) {
    bitbuf |= static_cast<std::uint32_t>(code) << bitcount;
    bitcount += code_size;
    while (bitcount >= 8) {
      out.push_back(static_cast<std::uint8_t>(bitbuf & 0xFF));
      bitbuf >>= 8;
      bitcount -= 8;
    }
  };
  std::map<std::uint32_t, int> dict;  // (prefix << 8 | byte) -> code
  int next = eoi + 1;
  emit(clear);
  if (indices.empty()) {
    emit(eoi);
    if (bitcount > 0) out.push_back(static_cast<std::uint8_t>(bitbuf & 0xFF));
    return out;
  }
  int prefix = indices[0];
  for (std::size_t i = 1; i < indices.size(); ++i) {
    const std::uint8_t k = indices[i];
    const std::uint32_t key = (static_cast<std::uint32_t>(prefix) << 8) | k;
    auto it = dict.find(key);
    if (it != dict.end()) {
      prefix = it->second;
      continue;
    }
    emit(prefix);
    if (next < 4096) {
      dict.emplace(key, next++);
      if (next > (1 << code_size) && code_size < 12) ++code_size;
    } else {
      emit(clear);
      dict.clear();
      next = eoi + 1;
      code_size = min_code_size + 1;
    }
    prefix = k;
  }
  emit(prefix);
  emit(eoi);
  if (bitcount > 0) out.push_back(static_cast<std::uint8_t>(bitbuf & 0xFF));
  return out;
}

inline void put_le16(Bytes& out, int v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

}  // namespace gif_detail

/// GIF89a with NETSCAPE2.0 loop count 0 (forever). Delay is rounded to the
/// nearest centisecond.
inline Bytes encode_gif(const std::vector<Image>& frames, int fps) {
  using namespace gif_detail;
  if (frames.empty()) throw CodecError("animation needs at least one frame");
  if (fps < 1) throw CodecError("fps out of range");
  const int w = frames.front().width, h = frames.front().height;
  for (const auto& f : frames)
    if (f.width != w || f.height != h) throw CodecError("all frames must share the same dimensions");
  if (w > 65535 || h > 65535) throw CodecError("GIF dimensions limited to 65535");

  constexpr std::uint8_t kTransparent = 255;
  const int delay_cs = std::max(1, static_cast<int>(std::lround(100.0 / fps)));

  Bytes out{'G', 'I', 'F', '8', '9', 'a'};
  put_le16(out, w);
  put_le16(out, h);
  out.insert(out.end(), {0x00, 0x00, 0x00});  // no global color table
  out.insert(out.end(), {0x21, 0xFF, 0x0B, 'N', 'E', 'T', 'S', 'C', 'A', 'P', 'E', '2', '.', '0', 0x03, 0x01,
                         0x00, 0x00, 0x00});

  for (const auto& frame : frames) {
    Palette pal = build_palette(frame, 255);
    std::vector<std::uint8_t> indices(static_cast<std::size_t>(w) * h);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const std::uint8_t* p = &frame.rgba[i * 4];
      indices[i] = p[3] < 128 ? kTransparent : pal.lookup.at(pack(p));
    }
    // graphic control: dispose to background, transparent index set
    out.insert(out.end(), {0x21, 0xF9, 0x04, 0x09});
    put_le16(out, delay_cs);
    out.push_back(kTransparent);
    out.push_back(0x00);
    // image descriptor with a 256-entry local color table
    out.push_back(0x2C);
    put_le16(out, 0);
    put_le16(out, 0);
    put_le16(out, w);
    put_le16(out, h);
    out.push_back(0x87);
    for (int i = 0; i < 256; ++i) {
      Rgb c = i < static_cast<int>(pal.colors.size()) ? pal.colors[i] : Rgb{0, 0, 0};
      out.insert(out.end(), c.begin(), c.end());
    }
    out.push_back(8);  // LZW minimum code size
    Bytes lzw = lzw_encode(indices, 8);
    for (std::size_t i = 0; i < lzw.size(); i += 255) {
      const std::size_t n = std::min<std::size_t>(255, lzw.size() - i);
      out.push_back(static_cast<std::uint8_t>(n));
      out.insert(out.end(), lzw.begin() + i, lzw.begin() + i + n);
    }
    out.push_back(0x00);
  }
  out.push_back(0x3B);
  return out;
}

}  // namespace kinetiq
