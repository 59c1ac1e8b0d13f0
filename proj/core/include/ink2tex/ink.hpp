#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ink2tex {

struct TrajectoryPoint {
  double x = 0.0;
  double y = 0.0;
  std::size_t stroke_id = 0;

  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

/// A pen trajectory: points in writing order, each tagged with its stroke.
/// Stroke ids start at 0 and never decrease along the sequence.
struct Ink {
  std::vector<TrajectoryPoint> points;
  std::optional<std::vector<std::string>> label;

  std::size_t stroke_count() const;

  friend bool operator==(const Ink&, const Ink&) = default;
};

/// Throws FormatError if `ink` breaks the point invariants (non-empty, finite, stroke ids
/// starting at 0 and non-decreasing).
void validate(const Ink& ink);

/// Indices [begin, end) of each stroke's points.
std::vector<std::pair<std::size_t, std::size_t>> stroke_ranges(const Ink& ink);

/// Plain point format: one `x y stroke_id` record per line, optional trailing
/// `#label tok tok ...` line. Blank lines and other `#` lines are ignored.
Ink parse_points(std::string_view text);

/// Writes the plain point format with 17 significant digits, so parse_points restores the
/// exact doubles.
std::string write_points(const Ink& ink);

/// Minimal InkML reader: `trace` elements become strokes, the `annotation type="truth"`
/// element becomes the whitespace-tokenized label.
Ink parse_inkml(std::string_view bytes);

/// Splits on ASCII whitespace.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace ink2tex
