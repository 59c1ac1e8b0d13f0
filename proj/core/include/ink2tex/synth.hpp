#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ink2tex/ink.hpp"

namespace ink2tex {

/// A glyph drawn in a unit box: x in [0, width], y in [0, 1] with y growing downwards.
struct StrokeTemplate {
  double width = 0.6;
  std::vector<std::vector<std::pair<double, double>>> strokes;
};

/// Hand-drawn glyphs for 0-9, x, y, e, +, -.
const std::map<std::string, StrokeTemplate>& default_templates();

/// Tokens that only appear in labels. Including one in SynthSpec::symbols enables the
/// corresponding relation.
inline constexpr const char* kStructuralTokens[] = {"^", "_", "{", "}", "\\frac", "\\sqrt"};

struct SynthSpec {
  /// Nesting depth of relations; 0 yields a single glyph.
  std::size_t depth = 1;
  /// Drawable glyphs plus any structural tokens. Superscripts and subscripts need "^" or "_"
  /// together with "{" and "}"; fractions need "\frac", radicals "\sqrt".
  std::vector<std::string> symbols = {"x", "e", "1", "2", "+", "-", "^", "_", "{", "}"};
  std::uint64_t seed = 7;
  std::map<std::string, StrokeTemplate> templates = default_templates();
  /// Upper bound on glyphs joined horizontally at the top level.
  std::size_t max_terms = 3;
  /// Glyph height in ink units for the top level.
  double glyph_size = 40.0;
  /// Uniform jitter amplitude as a fraction of the local glyph size.
  double jitter = 0.02;
};

/// Expressions laid out with horizontal, superscript (0.6 scale, up-right), subscript
/// (0.6 scale, down-right), fraction (vertical stack) and radical (inside) relations.
/// Labels brace every script and argument, e.g. "x ^ { 2 }". Throws ConfigError when a
/// drawable symbol has no template or no drawable symbol is given.
std::vector<Ink> generate(const SynthSpec& spec, std::size_t count);

}  // namespace ink2tex
