#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ink2tex/ink.hpp"

namespace ink2tex {

inline constexpr std::size_t kFeatureDim = 8;
inline constexpr double kNormalizedHeight = 100.0;
inline constexpr double kDefaultSpacing = 6.25;

/// One row per point: x, y, dx, dy, d2x, d2y, pen_down, pen_up.
struct FeatureSequence {
  std::vector<std::array<double, kFeatureDim>> rows;

  std::size_t size() const noexcept { return rows.size(); }
  friend bool operator==(const FeatureSequence&, const FeatureSequence&) = default;
};

/// Scales the expression to a y-extent of kNormalizedHeight (aspect preserved) and moves its
/// bounding box to the origin. Zero y-extent falls back to the x-extent; a single location
/// is only translated.
Ink normalize(const Ink& ink);

/// Replaces each stroke by points at uniform arc-length steps of `spacing` along its
/// polyline. First and last points of every stroke are kept.
Ink resample(const Ink& ink, double spacing = kDefaultSpacing);

FeatureSequence extract_features(const Ink& ink);

/// normalize, resample, extract_features.
FeatureSequence featurize(const Ink& ink, double spacing = kDefaultSpacing);

/// Feature dump: one row per line, 8 space-separated decimals.
std::string write_features(const FeatureSequence& features);
FeatureSequence parse_features(std::string_view text);

}  // namespace ink2tex
