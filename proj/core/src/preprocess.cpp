#include "ink2tex/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "ink2tex/errors.hpp"

namespace ink2tex {

Ink normalize(const Ink& ink) {
  validate(ink);
  double min_x = ink.points.front().x, max_x = min_x;
  double min_y = ink.points.front().y, max_y = min_y;
  for (const auto& p : ink.points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  double scale = 1.0;
  if (max_y > min_y) {
    scale = kNormalizedHeight / (max_y - min_y);
  } else if (max_x > min_x) {
    scale = kNormalizedHeight / (max_x - min_x);
  }
  Ink out = ink;
  for (auto& p : out.points) {
    p.x = (p.x - min_x) * scale;
    p.y = (p.y - min_y) * scale;
  }
  return out;
}

Ink resample(const Ink& ink, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw ContractError("resample spacing must be positive");
  validate(ink);
  Ink out;
  out.label = ink.label;
  out.points.reserve(ink.points.size());
  for (const auto& [begin, end] : stroke_ranges(ink)) {
    const auto& pts = ink.points;
    out.points.push_back(pts[begin]);
    if (end - begin == 1) continue;

    // Walk the polyline, emitting a point every `spacing` units of arc length.
    const std::size_t first_index = out.points.size() - 1;
    std::size_t step = 1;
    double travelled = 0.0;
    for (std::size_t i = begin + 1; i < end; ++i) {
      const double dx = pts[i].x - pts[i - 1].x;
      const double dy = pts[i].y - pts[i - 1].y;
      const double seg = std::hypot(dx, dy);
      while (seg > 0.0 && static_cast<double>(step) * spacing <= travelled + seg) {
        const double t = (static_cast<double>(step) * spacing - travelled) / seg;
        out.points.push_back({pts[i - 1].x + t * dx, pts[i - 1].y + t * dy, pts[i].stroke_id});
        ++step;
      }
      travelled += seg;
    }
    // The last original point is always kept; a grid point that landed on it is replaced.
    const auto& last = pts[end - 1];
    auto& tail = out.points.back();
    const bool landed = out.points.size() - 1 > first_index &&
                        std::hypot(last.x - tail.x, last.y - tail.y) <= 1e-9 * std::max(1.0, spacing);
    if (landed) {
      tail = last;
    } else {
      out.points.push_back(last);
    }
  }
  return out;
}

FeatureSequence extract_features(const Ink& ink) {
  validate(ink);
  const auto& pts = ink.points;
  const std::size_t n = pts.size();
  FeatureSequence features;
  features.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = features.rows[i];
    row[0] = pts[i].x;
    row[1] = pts[i].y;
    row[2] = i + 1 < n ? pts[i + 1].x - pts[i].x : 0.0;
    row[3] = i + 1 < n ? pts[i + 1].y - pts[i].y : 0.0;
    row[4] = i + 2 < n ? pts[i + 2].x - pts[i].x : 0.0;
    row[5] = i + 2 < n ? pts[i + 2].y - pts[i].y : 0.0;
    const bool pen_down = i + 1 < n && pts[i + 1].stroke_id == pts[i].stroke_id;
    row[6] = pen_down ? 1.0 : 0.0;
    row[7] = pen_down ? 0.0 : 1.0;
  }
  return features;
}

FeatureSequence featurize(const Ink& ink, double spacing) { return extract_features(resample(normalize(ink), spacing)); }

std::string write_features(const FeatureSequence& features) {
  std::string out;
  char buf[40];
  for (const auto& row : features.rows) {
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      const int n = std::snprintf(buf, sizeof(buf), "%.17g", row[k]);
      if (k) out.push_back(' ');
      out.append(buf, static_cast<std::size_t>(n));
    }
    out.push_back('\n');
  }
  return out;
}

FeatureSequence parse_features(std::string_view text) {
  FeatureSequence features;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto fields = tokenize(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (fields.empty()) continue;
    if (fields.size() != kFeatureDim) {
      throw FormatError("expected " + std::to_string(kFeatureDim) + " values, got " + std::to_string(fields.size()),
                        line_no);
    }
    std::array<double, kFeatureDim> row{};
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      const auto& f = fields[k];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[k]);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(row[k])) {
        throw FormatError("bad feature value '" + f + "'", line_no);
      }
    }
    features.rows.push_back(row);
  }
  if (features.rows.empty()) throw EmptyInputError("feature file has no rows");
  return features;
}

}  // namespace ink2tex
