#include "ink2tex/attention_export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ink2tex/errors.hpp"
#include "json.hpp"

namespace ink2tex {
namespace {

void check_consistent(const AttentionTrace& trace, const Ink& ink) {
  const auto& spans = trace.point_span;
  std::size_t expected = 0;
  for (const auto& s : spans) {
    if (s.first != expected || s.last < s.first) throw DimensionError("attention spans do not partition the points");
    expected = s.last + 1;
  }
  if (expected != ink.points.size()) {
    throw DimensionError("attention spans cover " + std::to_string(expected) + " points but the ink has " +
                         std::to_string(ink.points.size()));
  }
  if (trace.steps.size() > 0 && (trace.steps.rank() != 2 || trace.steps.shape()[1] != spans.size())) {
    throw DimensionError("attention rows " + shape_string(trace.steps.shape()) + " do not match " +
                         std::to_string(spans.size()) + " spans");
  }
}

void draw_line(GrayImage& img, std::pair<std::size_t, std::size_t> a, std::pair<std::size_t, std::size_t> b,
               std::uint8_t v) {
  auto x0 = static_cast<long>(a.first), y0 = static_cast<long>(a.second);
  const auto x1 = static_cast<long>(b.first), y1 = static_cast<long>(b.second);
  const long dx = std::labs(x1 - x0), dy = -std::labs(y1 - y0);
  const long sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  for (;;) {
    auto& px = img.pixels[static_cast<std::size_t>(y0) * img.width + static_cast<std::size_t>(x0)];
    px = std::max(px, v);
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

std::string attention_json(const AttentionTrace& trace) {
  nlohmann::json j;
  j["tokens"] = trace.tokens;
  j["L"] = trace.point_span.size();
  auto spans = nlohmann::json::array();
  for (const auto& s : trace.point_span) spans.push_back({s.first, s.last});
  j["spans"] = spans;
  auto rows = nlohmann::json::array();
  const std::size_t count = trace.steps.size() ? trace.steps.shape()[0] : 0;
  for (std::size_t t = 0; t < count; ++t) {
    const auto r = trace.steps.row(t);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["rows"] = rows;
  return j.dump();
}

std::pair<std::size_t, std::size_t> heatmap_pixel(const TrajectoryPoint& p, const HeatmapOptions& options) {
  const auto px = static_cast<std::size_t>(std::lround(std::max(0.0, p.x) * options.pixels_per_unit));
  const auto py = static_cast<std::size_t>(std::lround(std::max(0.0, p.y) * options.pixels_per_unit));
  return {px + options.margin, py + options.margin};
}

std::vector<GrayImage> attention_heatmaps(const AttentionTrace& trace, const Ink& ink, const HeatmapOptions& options) {
  check_consistent(trace, ink);
  std::size_t width = 0, height = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pixels;
  pixels.reserve(ink.points.size());
  for (const auto& p : ink.points) {
    pixels.push_back(heatmap_pixel(p, options));
    width = std::max(width, pixels.back().first);
    height = std::max(height, pixels.back().second);
  }
  width += options.margin + 1;
  height += options.margin + 1;

  std::vector<std::size_t> owner(ink.points.size());
  for (std::size_t l = 0; l < trace.point_span.size(); ++l) {
    for (std::size_t i = trace.point_span[l].first; i <= trace.point_span[l].last; ++i) owner[i] = l;
  }

  std::vector<GrayImage> images;
  const std::size_t steps = trace.steps.size() ? trace.steps.shape()[0] : 0;
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> mass(ink.points.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) {
      const auto& span = trace.point_span[owner[i]];
      mass[i] = trace.steps.at(t, owner[i]) / static_cast<double>(span.last - span.first + 1);
      peak = std::max(peak, mass[i]);
    }
    std::vector<std::uint8_t> level(mass.size(), 0);
    if (peak > 0.0) {
      for (std::size_t i = 0; i < mass.size(); ++i) {
        level[i] = static_cast<std::uint8_t>(std::lround(255.0 * mass[i] / peak));
      }
    }

    GrayImage img{width, height, std::vector<std::uint8_t>(width * height, 0)};
    for (std::size_t i = 0; i + 1 < ink.points.size(); ++i) {
      if (ink.points[i].stroke_id != ink.points[i + 1].stroke_id) continue;
      draw_line(img, pixels[i], pixels[i + 1], std::min(level[i], level[i + 1]));
    }
    const auto r = static_cast<long>(options.dot_radius);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      for (long dy = -r; dy <= r; ++dy) {
        for (long dx = -r; dx <= r; ++dx) {
          const long x = static_cast<long>(pixels[i].first) + dx;
          const long y = static_cast<long>(pixels[i].second) + dy;
          if (x < 0 || y < 0 || x >= static_cast<long>(width) || y >= static_cast<long>(height)) continue;
          auto& px = img.pixels[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)];
          px = std::max(px, level[i]);
        }
      }
    }
    images.push_back(std::move(img));
  }
  return images;
}

std::string write_pgm(const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

void export_attention(const AttentionTrace& trace, const Ink& ink, const std::filesystem::path& dir,
                      const HeatmapOptions& options) {
  const auto images = attention_heatmaps(trace, ink, options);
  std::filesystem::create_directories(dir);
  {
    std::ofstream json(dir / "attention.json", std::ios::binary | std::ios::trunc);
    json << attention_json(trace) << '\n';
    if (!json) throw Error("cannot write " + (dir / "attention.json").string());
  }
  for (std::size_t t = 0; t < images.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "step_%03zu.pgm", t);
    std::ofstream pgm(dir / name, std::ios::binary | std::ios::trunc);
    const auto bytes = write_pgm(images[t]);
    pgm.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!pgm) throw Error("cannot write " + (dir / name).string());
  }
}

}  // namespace ink2tex
