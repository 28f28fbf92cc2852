#pragma once

// PNG and APNG (animated PNG) encoding and decoding for RGBA8 images.
// zlib supplies deflate/inflate and the chunk CRC.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kinetiq/chart.hpp"
#include "kinetiq/parallel.hpp"

namespace kinetiq {

class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::array<std::uint8_t, 8> kPngSignature{0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};

namespace png_detail {

inline void put_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

inline std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }

inline void put_chunk(Bytes& out, std::string_view type, const Bytes& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type.begin(), type.end());
  out.insert(out.end(), data.begin(), data.end());
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

inline std::uint8_t paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
  if (pb <= pc) return static_cast<std::uint8_t>(b);
  return static_cast<std::uint8_t>(c);
}

/// Filtered scanlines, choosing per row the filter with the smallest sum of
/// absolute residuals.
inline Bytes filter_image(const Image& img) {
  const std::size_t stride = static_cast<std::size_t>(img.width) * 4;
  Bytes out((stride + 1) * img.height);
  std::vector<std::uint8_t> zero(stride, 0);
  std::array<std::vector<std::uint8_t>, 5> cand;
  for (auto& c : cand) c.resize(stride);
  auto cost = [](std::uint8_t r) { return r < 128 ? r : 256 - r; };
  for (int y = 0; y < img.height; ++y) {
    const std::uint8_t* row = img.rgba.data() + y * stride;
    const std::uint8_t* up = y > 0 ? row - stride : zero.data();
    std::array<long, 5> score{};
    for (std::size_t i = 0; i < stride; ++i) {
      const int x = row[i];
      const int a = i >= 4 ? row[i - 4] : 0;
      const int b = up[i];
      const int c = i >= 4 ? up[i - 4] : 0;
      const std::uint8_t r[5] = {static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(x - a),
                                 static_cast<std::uint8_t>(x - b), static_cast<std::uint8_t>(x - (a + b) / 2),
                                 static_cast<std::uint8_t>(x - paeth(a, b, c))};
      for (int t = 0; t < 5; ++t) {
        cand[t][i] = r[t];
        score[t] += cost(r[t]);
      }
    }
    const auto best = static_cast<std::size_t>(std::min_element(score.begin(), score.end()) - score.begin());
    std::uint8_t* dst = out.data() + y * (stride + 1);
    dst[0] = static_cast<std::uint8_t>(best);
    std::copy(cand[best].begin(), cand[best].end(), dst + 1);
  }
  return out;
}

inline Bytes deflate_bytes(const Bytes& raw) {
  uLongf size = compressBound(static_cast<uLong>(raw.size()));
  Bytes out(size);
  if (compress2(out.data(), &size, raw.data(), static_cast<uLong>(raw.size()), 3) != Z_OK)
    throw CodecError("deflate failed");
  out.resize(size);
  return out;
}

inline Bytes inflate_bytes(const Bytes& data, std::size_t expected) {
  Bytes out(expected);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw CodecError("inflateInit failed");
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected) throw CodecError("corrupt or truncated image data");
  return out;
}

inline void unfilter(const Bytes& raw, Image& img) {
  const std::size_t stride = static_cast<std::size_t>(img.width) * 4;
  for (int y = 0; y < img.height; ++y) {
    const std::uint8_t type = raw[y * (stride + 1)];
    const std::uint8_t* src = raw.data() + y * (stride + 1) + 1;
    std::uint8_t* row = img.rgba.data() + y * stride;
    const std::uint8_t* up = y > 0 ? row - stride : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= 4 ? row[i - 4] : 0;
      const int b = up ? up[i] : 0;
      const int c = (up && i >= 4) ? up[i - 4] : 0;
      int pred = 0;
      switch (type) {
        case 0: break;
        case 1: pred = a; break;
        case 2: pred = b; break;
        case 3: pred = (a + b) / 2; break;
        case 4: pred = paeth(a, b, c); break;
        default: throw CodecError("invalid PNG filter type");
      }
      row[i] = static_cast<std::uint8_t>(src[i] + pred);
    }
  }
}

inline Bytes ihdr(int w, int h) {
  Bytes d;
  put_u32(d, static_cast<std::uint32_t>(w));
  put_u32(d, static_cast<std::uint32_t>(h));
  d.insert(d.end(), {8, 6, 0, 0, 0});  // 8-bit RGBA, deflate, adaptive filter, no interlace
  return d;
}

}  // namespace png_detail

inline Bytes encode_png(const Image& img) {
  using namespace png_detail;
  Bytes out(kPngSignature.begin(), kPngSignature.end());
  put_chunk(out, "IHDR", ihdr(img.width, img.height));
  put_chunk(out, "IDAT", deflate_bytes(filter_image(img)));
  put_chunk(out, "IEND", {});
  return out;
}

/// Animated PNG: full-size frames, infinite loop, delay 1/fps per frame.
inline Bytes encode_apng(const std::vector<Image>& frames, int fps) {
  using namespace png_detail;
  if (frames.empty()) throw CodecError("animation needs at least one frame");
  if (fps < 1 || fps > 65535) throw CodecError("fps out of range");
  const int w = frames.front().width, h = frames.front().height;
  for (const auto& f : frames)
    if (f.width != w || f.height != h) throw CodecError("all frames must share the same dimensions");

  std::vector<Bytes> compressed(frames.size());
  parallel_for(frames.size(), [&](std::size_t i) { compressed[i] = deflate_bytes(filter_image(frames[i])); });

  Bytes out(kPngSignature.begin(), kPngSignature.end());
  put_chunk(out, "IHDR", ihdr(w, h));
  Bytes actl;
  put_u32(actl, static_cast<std::uint32_t>(frames.size()));
  put_u32(actl, 0);  // plays forever
  put_chunk(out, "acTL", actl);
  std::uint32_t seq = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    Bytes fctl;
    put_u32(fctl, seq++);
    put_u32(fctl, static_cast<std::uint32_t>(w));
    put_u32(fctl, static_cast<std::uint32_t>(h));
    put_u32(fctl, 0);
    put_u32(fctl, 0);
    put_u16(fctl, 1);
    put_u16(fctl, static_cast<std::uint16_t>(fps));
    fctl.push_back(0);  // dispose: none
    fctl.push_back(0);  // blend: source
    put_chunk(out, "fcTL", fctl);
    if (i == 0) {
      put_chunk(out, "IDAT", compressed[i]);
    } else {
      Bytes fdat;
      put_u32(fdat, seq++);
      fdat.insert(fdat.end(), compressed[i].begin(), compressed[i].end());
      put_chunk(out, "fdAT", fdat);
    }
  }
  put_chunk(out, "IEND", {});
  return out;
}

struct DecodedPng {
  int width{0};
  int height{0};
  std::vector<Image> frames;  // composited full frames; a plain PNG has one
  std::vector<std::pair<std::uint16_t, std::uint16_t>> delays;  // (num, den) per frame
  std::uint32_t num_plays{0};
  bool animated{false};
};

/// Decodes 8-bit RGBA PNG and APNG files (as written by encode_png and
/// encode_apng; other color types are rejected).
inline DecodedPng decode_png(const Bytes& bytes) {
  using namespace png_detail;
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature.data(), 8) != 0)
    throw CodecError("not a PNG file");
  DecodedPng out;

  struct FrameCtl {
    std::uint32_t w, h, x, y;
    std::uint16_t num, den;
    std::uint8_t dispose, blend;
  };
  std::vector<FrameCtl> ctls;
  std::vector<Bytes> data;  // compressed data per frame (default image for plain PNG)
  bool have_ihdr = false, seen_idat = false, idat_is_frame = false;

  std::size_t pos = 8;
  while (pos + 12 <= bytes.size()) {
    const std::uint32_t len = get_u32(&bytes[pos]);
    if (pos + 12 + len > bytes.size()) throw CodecError("truncated chunk");
    const std::string type(reinterpret_cast<const char*>(&bytes[pos + 4]), 4);
    const std::uint8_t* body = &bytes[pos + 8];
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, &bytes[pos + 4], len + 4);
    if (crc != get_u32(body + len)) throw CodecError("CRC mismatch in " + type + " chunk");
    pos += 12 + len;

    if (type == "IHDR") {
      if (len != 13) throw CodecError("bad IHDR");
      out.width = static_cast<int>(get_u32(body));
      out.height = static_cast<int>(get_u32(body + 4));
      if (body[8] != 8 || body[9] != 6 || body[12] != 0)
        throw CodecError("only 8-bit non-interlaced RGBA PNGs are supported");
      have_ihdr = true;
    } else if (type == "acTL") {
      out.animated = true;
      out.num_plays = get_u32(body + 4);
    } else if (type == "fcTL") {
      if (len != 26) throw CodecError("bad fcTL");
      ctls.push_back({get_u32(body + 4), get_u32(body + 8), get_u32(body + 12), get_u32(body + 16),
                      get_u16(body + 20), get_u16(body + 22), body[24], body[25]});
      data.emplace_back();
    } else if (type == "IDAT") {
      if (!seen_idat) {
        seen_idat = true;
        idat_is_frame = !ctls.empty();
        if (!idat_is_frame) data.emplace_back();
      }
      auto& target = idat_is_frame ? data.back() : data.front();
      target.insert(target.end(), body, body + len);
    } else if (type == "fdAT") {
      if (ctls.empty()) throw CodecError("fdAT before fcTL");
      data.back().insert(data.back().end(), body + 4, body + len);
    } else if (type == "IEND") {
      break;
    }
  }
  if (!have_ihdr || data.empty()) throw CodecError("missing IHDR or image data");

  auto decode_region = [&](const Bytes& z, int w, int h) {
    Image img(w, h);
    unfilter(inflate_bytes(z, static_cast<std::size_t>(w * 4 + 1) * h), img);
    return img;
  };

  if (!out.animated) {
    out.frames.push_back(decode_region(data.front(), out.width, out.height));
    out.delays.push_back({0, 0});
    return out;
  }

  // A default image that is not part of the animation sits before the first fcTL.
  const std::size_t first = (seen_idat && !idat_is_frame) ? 1 : 0;
  Image canvas(out.width, out.height);
  for (std::size_t i = 0; i < ctls.size(); ++i) {
    const auto& c = ctls[i];
    if (c.x + c.w > static_cast<std::uint32_t>(out.width) || c.y + c.h > static_cast<std::uint32_t>(out.height))
      throw CodecError("frame region outside canvas");
    Image region = decode_region(data[i + first], static_cast<int>(c.w), static_cast<int>(c.h));
    Image before = canvas;
    for (std::uint32_t y = 0; y < c.h; ++y)
      for (std::uint32_t x = 0; x < c.w; ++x) {
        const std::uint8_t* s = region.at(x, y);
        std::uint8_t* d = canvas.at(c.x + x, c.y + y);
        if (c.blend == 0 || s[3] == 255) {
          std::memcpy(d, s, 4);
        } else if (s[3] != 0) {
          // straight-alpha "over" in 8-bit
          const double sa = s[3] / 255.0, da = d[3] / 255.0;
          const double oa = sa + da * (1 - sa);
          for (int k = 0; k < 3; ++k)
            d[k] = static_cast<std::uint8_t>(std::lround((s[k] * sa + d[k] * da * (1 - sa)) / oa));
          d[3] = static_cast<std::uint8_t>(std::lround(oa * 255));
        }
      }
    out.frames.push_back(canvas);
    out.delays.push_back({c.num, c.den});
    if (c.dispose == 1) {
      for (std::uint32_t y = 0; y < c.h; ++y)
        for (std::uint32_t x = 0; x < c.w; ++x) std::memset(canvas.at(c.x + x, c.y + y), 0, 4);
    } else if (c.dispose == 2) {
      canvas = std::move(before);
    }
  }
  return out;
}

}  // namespace kinetiq
