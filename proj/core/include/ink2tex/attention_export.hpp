#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ink2tex/beam_search.hpp"
#include "ink2tex/ink.hpp"

namespace ink2tex {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, row 0 at the top

  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

struct HeatmapOptions {
  double pixels_per_unit = 1.0;
  std::size_t margin = 4;
  std::size_t dot_radius = 1;
};

/// {"tokens": [...], "L": L, "spans": [[first, last], ...], "rows": [[alpha...], ...]}
std::string attention_json(const AttentionTrace& trace);

/// Pixel position of a point under `options` (x right, y down).
std::pair<std::size_t, std::size_t> heatmap_pixel(const TrajectoryPoint& p, const HeatmapOptions& options);

/// One image per decode step. A point's weight is the attention of its annotation divided by
/// the annotation's span length; weights are scaled so the step maximum maps to 255. Strokes
/// are drawn with the dimmer endpoint's intensity; background is 0. Throws DimensionError
/// when the spans do not partition the ink's points or the trace rows do not match the spans.
std::vector<GrayImage> attention_heatmaps(const AttentionTrace& trace, const Ink& ink,
                                          const HeatmapOptions& options = {});

/// Binary PGM (P5, maxval 255).
std::string write_pgm(const GrayImage& image);

/// Writes `attention.json` and `step_NNN.pgm` files into `dir` (created if needed).
void export_attention(const AttentionTrace& trace, const Ink& ink, const std::filesystem::path& dir,
                      const HeatmapOptions& options = {});

}  // namespace ink2tex
