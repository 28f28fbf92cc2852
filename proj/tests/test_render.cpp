#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "kinetiq/kinetiq.hpp"
#include "support/fixtures.hpp"
#include "support/random.hpp"

using namespace kinetiq;
using Catch::Approx;

namespace {

RenderConfig plain_config(int w, int h, const Color& bg) {
  RenderConfig cfg;
  cfg.width = w;
  cfg.height = h;
  cfg.background = bg;
  cfg.axes = false;
  cfg.margins = {0, 0, 0, 0};
  return cfg;
}

ChartGeometry single_segment(int w, int h, Vec2 a, Vec2 b) {
  ChartGeometry g;
  g.width = w;
  g.height = h;
  g.polylines = {{a, b}};
  return g;
}

double distance_to_segment(double px, double py, Vec2 a, Vec2 b) {
  double dx = b.x - a.x, dy = b.y - a.y;
  double u = ((px - a.x) * dx + (py - a.y) * dy) / (dx * dx + dy * dy);
  u = std::max(0.0, std::min(1.0, u));
  return std::hypot(a.x + u * dx - px, a.y + u * dy - py);
}

/// Brute-force reference: opaque single-color segment over an opaque
/// background, point-sampled on an s x s grid per pixel.
Image reference_line(int w, int h, Vec2 a, Vec2 b, double line_width, int s, const Color& fg, const Color& bg) {
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int covered = 0;
      for (int sy = 0; sy < s; ++sy)
        for (int sx = 0; sx < s; ++sx) {
          double px = x + (sx + 0.5) / s, py = y + (sy + 0.5) / s;
          if (distance_to_segment(px, py, a, b) <= line_width / 2) ++covered;
        }
      double f = static_cast<double>(covered) / (s * s);
      std::uint8_t* o = img.at(x, y);
      o[0] = to_byte(fg.r * f + bg.r * (1 - f));
      o[1] = to_byte(fg.g * f + bg.g * (1 - f));
      o[2] = to_byte(fg.b * f + bg.b * (1 - f));
      o[3] = 255;
    }
  return img;
}

std::vector<Image> noise_frames(std::size_t n, int w, int h, std::uint64_t seed) {
  testgen::Gen g(seed);
  std::vector<Image> out;
  for (std::size_t k = 0; k < n; ++k) {
    Image img(w, h);
    for (auto& v : img.rgba) v = static_cast<std::uint8_t>(g.integer(0, 255));
    out.push_back(img);
  }
  return out;
}

// Minimal GIF reader for round-trip checks: returns per-frame RGBA with
// the transparent index decoded as alpha 0.
struct GifInfo {
  int width = 0, height = 0;
  bool loops_forever = false;
  std::vector<int> delays_cs;
  std::vector<Image> frames;
};

std::vector<std::uint8_t> lzw_decode(const Bytes& data, int min_code_size, std::size_t expected) {
  const int clear = 1 << min_code_size, eoi = clear + 1;
  std::vector<std::vector<std::uint8_t>> dict;
  auto reset = [&] {
    dict.assign(clear + 2, {});
    for (int i = 0; i < clear; ++i) dict[i] = {static_cast<std::uint8_t>(i)};
  };
  reset();
  int code_size = min_code_size + 1;
  std::vector<std::uint8_t> out;
  std::size_t bitpos = 0;
  int prev = -1;
  while (true) {
    if (bitpos + code_size > data.size() * 8) throw std::runtime_error("LZW stream ended without EOI");
    int code = 0;
    for (int i = 0; i < code_size; ++i, ++bitpos)
      if (data[bitpos / 8] & (1 << (bitpos % 8))) code |= 1 << i;
    if (code == clear) {
      reset();
      code_size = min_code_size + 1;
      prev = -1;
      continue;
    }
    if (code == eoi) break;
    std::vector<std::uint8_t> entry;
    if (prev < 0) {
      entry = dict.at(code);
    } else {
      if (code < static_cast<int>(dict.size())) {
        entry = dict[code];
      } else if (code == static_cast<int>(dict.size())) {
        entry = dict[prev];
        entry.push_back(dict[prev][0]);
      } else {
        throw std::runtime_error("bad LZW code");
      }
      if (dict.size() < 4096) {
        auto added = dict[prev];
        added.push_back(entry[0]);
        dict.push_back(std::move(added));
      }
    }
    out.insert(out.end(), entry.begin(), entry.end());
    prev = code;
    if (static_cast<int>(dict.size()) == (1 << code_size) && code_size < 12) ++code_size;
  }
  if (out.size() != expected) throw std::runtime_error("LZW length mismatch");
  return out;
}

GifInfo read_gif(const Bytes& b) {
  GifInfo info;
  REQUIRE(b.size() > 13);
  REQUIRE(std::string(b.begin(), b.begin() + 6) == "GIF89a");
  auto le16 = [&](std::size_t p) { return b[p] | (b[p + 1] << 8); };
  info.width = le16(6);
  info.height = le16(8);
  std::size_t p = 13;
  int transparent = -1;
  while (p < b.size()) {
    std::uint8_t tag = b[p++];
    if (tag == 0x3B) break;
    if (tag == 0x21) {
      std::uint8_t label = b[p++];
      if (label == 0xF9) {
        info.delays_cs.push_back(le16(p + 2));
        transparent = (b[p + 1] & 1) ? b[p + 4] : -1;
      }
      if (label == 0xFF && std::string(b.begin() + p + 1, b.begin() + p + 12) == "NETSCAPE2.0")
        info.loops_forever = le16(p + 14) == 0;
      while (b[p] != 0) p += b[p] + 1;
      ++p;
      continue;
    }
    REQUIRE(tag == 0x2C);
    int w = le16(p + 4), h = le16(p + 6);
    std::uint8_t flags = b[p + 8];
    p += 9;
    REQUIRE((flags & 0x80));
    std::size_t table = std::size_t{3} << ((flags & 7) + 1);
    std::vector<std::uint8_t> colors(b.begin() + p, b.begin() + p + table);
    p += table;
    int min_code = b[p++];
    Bytes data;
    while (b[p] != 0) {
      data.insert(data.end(), b.begin() + p + 1, b.begin() + p + 1 + b[p]);
      p += b[p] + 1;
    }
    ++p;
    auto idx = lzw_decode(data, min_code, static_cast<std::size_t>(w) * h);
    Image img(w, h);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] == transparent) continue;
      img.rgba[i * 4] = colors[idx[i] * 3];
      img.rgba[i * 4 + 1] = colors[idx[i] * 3 + 1];
      img.rgba[i * 4 + 2] = colors[idx[i] * 3 + 2];
      img.rgba[i * 4 + 3] = 255;
    }
    info.frames.push_back(img);
  }
  return info;
}

}  // namespace

TEST_CASE("layout maps turns and votes linearly", "[layout]") {
  Dataset ds;
  Playthrough pt;
  pt.player_id = "a";
  for (int t = 0; t <= 10; ++t) pt.turns.push_back(fixtures::turn(t, 20 * t, 100.0, 10.0));
  ds.playthroughs = {pt};
  finalize_dataset(ds);

  RenderConfig cfg;
  cfg.width = 1100;
  cfg.margins = {50, 50, 50, 50};
  auto g = layout(ds, cfg);
  REQUIRE(g.polylines.size() == 1);
  const auto& line = g.polylines[0];
  CHECK(line[0].x == 50.0);
  CHECK(line[10].x == 1050.0);
  CHECK(line[5].x == 550.0);
  CHECK(line[10].y == 50.0);   // vote 200 at the plot top
  CHECK(line[0].y == 490.0);   // vote 0 at the plot bottom

  cfg.y_domain = Domain{0.0, 400.0};
  auto half = layout(ds, cfg);
  for (int t = 0; t <= 10; ++t)
    CHECK(490.0 - half.polylines[0][t].y == Approx((490.0 - line[t].y) / 2));
  CHECK_FALSE(g.x_ticks.empty());
  CHECK_FALSE(g.y_ticks.empty());
  CHECK_THROWS(layout(Dataset{}, cfg));
}

TEST_CASE("single-turn playthroughs render as dots", "[layout][raster]") {
  Dataset ds;
  Playthrough pt;
  pt.player_id = "solo";
  pt.turns = {fixtures::turn(0, 5, 1.0, 1.0)};
  ds.playthroughs = {pt};
  finalize_dataset(ds);
  auto cfg = plain_config(96, 64, {0, 0, 0, 1});
  auto g = layout(ds, cfg);
  REQUIRE(g.polylines[0].size() == 1);
  auto img = rasterize_frame(g, ColorBuffer{0.0, {{1, 1, 1, 1}}}, cfg);
  CHECK(img != filled_image(96, 64, {0, 0, 0, 1}));
}

TEST_CASE("all-clear buffer leaves the background untouched", "[raster]") {
  auto ds = testgen::dataset(3, 12, 6);
  auto cfg = plain_config(320, 200, {0.07, 0.07, 0.09, 1.0});
  auto g = layout(ds, cfg);
  ColorBuffer clear{0.0, std::vector<Color>(ds.point_count(), kClear)};
  CHECK(rasterize_frame(g, clear, cfg) == filled_image(320, 200, cfg.background));

  cfg.axes = true;
  cfg.margins = Margins{};
  g = layout(ds, cfg);
  RasterPlan plan(g, cfg);
  auto with_axes = plan.render(clear);
  CHECK(with_axes != filled_image(320, 200, cfg.background));
  CHECK(plan.render(clear) == with_axes);
}

TEST_CASE("horizontal red line matches the reference rasterizer", "[raster]") {
  const Color white{1, 1, 1, 1}, red{1, 0, 0, 1};
  auto cfg = plain_config(100, 64, white);
  cfg.line_width = 1.0;
  Vec2 a{10.0, 32.5}, b{90.0, 32.5};
  auto img = rasterize_frame(single_segment(100, 64, a, b), ColorBuffer{0.0, {red, red}}, cfg);
  auto ref = reference_line(100, 64, a, b, 1.0, cfg.supersample, red, white);
  int worst = 0;
  for (std::size_t i = 0; i < img.rgba.size(); ++i) worst = std::max(worst, std::abs(img.rgba[i] - ref.rgba[i]));
  CHECK(worst <= 1);
  for (int x = 11; x < 89; ++x) {
    const auto* p = img.at(x, 32);
    REQUIRE((p[0] == 255 && p[1] == 0 && p[2] == 0 && p[3] == 255));
    const auto* above = img.at(x, 31);
    const auto* below = img.at(x, 33);
    REQUIRE((above[1] == 255 && below[1] == 255));
  }
}

TEST_CASE("diagonal lines match the reference rasterizer", "[raster]") {
  const Color bg{0, 0, 0, 1}, fg{0.2, 0.9, 0.4, 1};
  testgen::Gen gen(77);
  for (int i = 0; i < 10; ++i) {
    auto cfg = plain_config(80, 80, bg);
    cfg.line_width = gen.range(1.0, 5.0);
    cfg.supersample = i % 2 ? 4 : 2;
    Vec2 a{gen.range(5, 75), gen.range(5, 75)}, b{gen.range(5, 75), gen.range(5, 75)};
    auto img = rasterize_frame(single_segment(80, 80, a, b), ColorBuffer{0.0, {fg, fg}}, cfg);
    auto ref = reference_line(80, 80, a, b, cfg.line_width, cfg.supersample, fg, bg);
    int worst = 0;
    for (std::size_t k = 0; k < img.rgba.size(); ++k) worst = std::max(worst, std::abs(img.rgba[k] - ref.rgba[k]));
    CHECK(worst <= 1);
  }
}

TEST_CASE("segment gradient interpolates endpoint alpha", "[raster]") {
  auto cfg = plain_config(100, 64, kClear);
  cfg.line_width = 8.0;
  Vec2 a{20.5, 32.0}, b{80.5, 32.0};
  auto img = rasterize_frame(single_segment(100, 64, a, b), ColorBuffer{0.0, {{1, 1, 1, 1}, {1, 1, 1, 0}}}, cfg);
  double mid = img.at(50, 32)[3] / 255.0;
  CHECK(mid == Approx(0.5).margin(2.0 / 255.0));
  // alpha follows 1 - u along the segment
  for (int x : {30, 40, 60, 70}) {
    double u = (x + 0.5 - a.x) / (b.x - a.x);
    CHECK(img.at(x, 32)[3] / 255.0 == Approx(1.0 - u).margin(2.0 / 255.0));
  }
}

TEST_CASE("later playthroughs composite over earlier ones", "[raster]") {
  auto cfg = plain_config(64, 64, {0, 0, 0, 1});
  cfg.line_width = 4.0;
  ChartGeometry g;
  g.width = g.height = 64;
  g.polylines = {{{10, 32}, {54, 32}}, {{32, 10}, {32, 54}}};
  const Color red{1, 0, 0, 1}, half_blue{0, 0, 1, 0.5};
  auto img = rasterize_frame(g, ColorBuffer{0.0, {red, red, half_blue, half_blue}}, cfg);
  const auto* cross = img.at(32, 32);
  CHECK(static_cast<int>(cross[0]) == 128);
  CHECK(static_cast<int>(cross[2]) == 128);
  CHECK(static_cast<int>(cross[3]) == 255);
  const auto* red_only = img.at(15, 32);
  CHECK((red_only[0] == 255 && red_only[2] == 0));
}

TEST_CASE("rendering is deterministic and plan reuse is exact", "[raster]") {
  auto ds = testgen::dataset(4, 20, 8);
  auto reg = build_registry(ds);
  RenderConfig cfg;
  cfg.width = 240;
  cfg.height = 160;
  auto g = layout(ds, cfg);
  testgen::Gen gen(12);
  auto q = gen.query(ds, 4);
  auto frames = evaluate_loop(q, ds, reg, 5);
  RasterPlan plan(g, cfg);
  for (const auto& buf : frames.buffers) REQUIRE(plan.render(buf) == rasterize_frame(g, buf, cfg));
  CHECK_THROWS(plan.render(ColorBuffer{0.0, {kClear}}));
}

TEST_CASE("PNG and APNG round-trip", "[codec]") {
  auto frames = noise_frames(3, 37, 21, 5);
  auto still = decode_png(encode_png(frames[0]));
  CHECK_FALSE(still.animated);
  REQUIRE(still.frames.size() == 1);
  CHECK(still.frames[0] == frames[0]);

  auto anim = decode_png(encode_apng(frames, 12));
  CHECK(anim.animated);
  CHECK(anim.num_plays == 0);
  CHECK(anim.frames == frames);

  std::vector<Image> same(60, filled_image(48, 32, {0.3, 0.6, 0.9, 1.0}));
  auto bytes = encode_apng(same, 30);
  auto dec = decode_png(bytes);
  REQUIRE(dec.frames.size() == 60);
  for (const auto& f : dec.frames) REQUIRE(f == same[0]);
  for (const auto& d : dec.delays) REQUIRE((d.first == 1 && d.second == 30));

  auto corrupt = bytes;
  corrupt[40] ^= 0xFF;
  CHECK_THROWS_AS(decode_png(corrupt), CodecError);
}

TEST_CASE("animation formats", "[codec]") {
  auto frames = noise_frames(3, 16, 16, 9);
  auto seq = encode_animation(frames, AnimationFormat::png_sequence, 30);
  REQUIRE(seq.files.size() == 3);
  CHECK(seq.files[0].first == "frame_0000.png");
  CHECK(seq.files[1].first == "frame_0001.png");
  CHECK(seq.files[2].first == "frame_0002.png");
  CHECK(decode_png(seq.files[2].second).frames[0] == frames[2]);

  auto dir = std::filesystem::temp_directory_path() / "kinetiq_seq_test";
  std::filesystem::remove_all(dir);
  write_animation(dir, seq);
  CHECK(std::filesystem::exists(dir / "frame_0002.png"));
  std::filesystem::remove_all(dir);

  std::vector<Image> mixed{Image(16, 16), Image(16, 17)};
  CHECK_THROWS_AS(encode_animation(mixed, AnimationFormat::apng, 30), CodecError);
  CHECK_THROWS_AS(encode_animation(mixed, AnimationFormat::gif, 30), CodecError);
  CHECK_THROWS_AS(encode_animation({}, AnimationFormat::apng, 30), CodecError);
}

TEST_CASE("GIF round-trips small palettes exactly", "[codec][gif]") {
  Image img(40, 30);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x) {
      auto* p = img.at(x, y);
      p[0] = static_cast<std::uint8_t>((x % 10) * 25);
      p[1] = static_cast<std::uint8_t>((y % 10) * 25);
      p[2] = 7;
      p[3] = (x + y) % 7 == 0 ? 0 : 255;
    }
  Image blank(40, 30);
  auto info = read_gif(encode_gif({img, blank, img}, 25));
  CHECK(info.width == 40);
  CHECK(info.loops_forever);
  REQUIRE(info.frames.size() == 3);
  CHECK(info.delays_cs == std::vector<int>{4, 4, 4});
  Image expect = img;
  for (std::size_t i = 0; i < expect.rgba.size(); i += 4)
    if (expect.rgba[i + 3] == 0) expect.rgba[i] = expect.rgba[i + 1] = expect.rgba[i + 2] = 0;
  CHECK(info.frames[0] == expect);
  CHECK(info.frames[1] == blank);
  CHECK(info.frames[2] == expect);
}

TEST_CASE("GIF quantizes rich frames closely", "[codec][gif]") {
  auto frames = noise_frames(1, 128, 96, 21);
  for (std::size_t i = 3; i < frames[0].rgba.size(); i += 4) frames[0].rgba[i] = 255;
  auto info = read_gif(encode_gif(frames, 30));
  REQUIRE(info.frames.size() == 1);
  double err = 0;
  for (std::size_t i = 0; i < frames[0].rgba.size(); ++i) err += std::abs(frames[0].rgba[i] - info.frames[0].rgba[i]);
  err /= static_cast<double>(frames[0].rgba.size() * 3 / 4);
  CHECK(err < 24.0);
}
