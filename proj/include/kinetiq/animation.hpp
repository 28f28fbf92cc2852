#pragma once

// Frame encoding and the shared render path (evaluate -> layout ->
// rasterize -> encode) used by both the CLI and the service.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "kinetiq/chart.hpp"
#include "kinetiq/gif.hpp"
#include "kinetiq/parallel.hpp"
#include "kinetiq/pipeline.hpp"
#include "kinetiq/png.hpp"

namespace kinetiq {

/// Either a single byte stream (apng, gif) or named files (png_sequence).
struct EncodedAnimation {
  Bytes bytes;
  std::vector<std::pair<std::string, Bytes>> files;
};

inline std::string sequence_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu.png", index);
  return buf;
}

inline EncodedAnimation encode_animation(const std::vector<Image>& frames, AnimationFormat format, int fps) {
  if (frames.empty()) throw CodecError("animation needs at least one frame");
  for (const auto& f : frames)
    if (f.width != frames.front().width || f.height != frames.front().height)
      throw CodecError("all frames must share the same dimensions");
  EncodedAnimation out;
  switch (format) {
    case AnimationFormat::apng: out.bytes = encode_apng(frames, fps); break;
    case AnimationFormat::gif: out.bytes = encode_gif(frames, fps); break;
    case AnimationFormat::png_sequence:
      out.files.resize(frames.size());
      parallel_for(frames.size(), [&](std::size_t i) { out.files[i] = {sequence_name(i), encode_png(frames[i])}; });
      break;
  }
  return out;
}

inline void write_bytes(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

/// Writes a byte-stream animation to `path`, or a png_sequence into the
/// directory `path` (created if needed).
inline void write_animation(const std::filesystem::path& path, const EncodedAnimation& anim) {
  if (anim.files.empty()) {
    write_bytes(path, anim.bytes);
    return;
  }
  std::filesystem::create_directories(path);
  for (const auto& [name, bytes] : anim.files) write_bytes(path / name, bytes);
}

/// Rasterizes every frame of a loop against one shared coverage plan.
inline std::vector<Image> rasterize_loop(const ChartGeometry& geometry, const FrameSet& frames,
                                         const RenderConfig& cfg) {
  RasterPlan plan(geometry, cfg);
  std::vector<Image> images(frames.n_frames());
  parallel_for(frames.n_frames(), [&](std::size_t k) { images[k] = plan.render(frames.buffers[k]); });
  return images;
}

inline std::vector<Image> render_frames(const KineticQuery& query, const Dataset& ds, const ParameterRegistry& reg,
                                        const RenderConfig& cfg) {
  FrameSet frames = evaluate_loop(query, ds, reg, static_cast<std::size_t>(cfg.n_frames));
  return rasterize_loop(layout(ds, cfg), frames, cfg);
}

/// The one rendering path: equal inputs give byte-identical output.
inline EncodedAnimation render_animation(const KineticQuery& query, const Dataset& ds,
                                         const ParameterRegistry& reg, const RenderConfig& cfg) {
  if (auto err = cfg.check()) throw std::invalid_argument(*err);
  return encode_animation(render_frames(query, ds, reg, cfg), cfg.format, cfg.fps);
}

/// A single still at loop phase t.
inline Image render_still(const KineticQuery& query, const Dataset& ds, const ParameterRegistry& reg,
                          const RenderConfig& cfg, double t) {
  if (auto err = cfg.check()) throw std::invalid_argument(*err);
  return rasterize_frame(layout(ds, cfg), evaluate_frame(query, t, ds, reg), cfg);
}

}  // namespace kinetiq
