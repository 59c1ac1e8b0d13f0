#include "ink2tex/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "ink2tex/errors.hpp"

namespace ink2tex {
namespace {

using Polyline = std::vector<std::pair<double, double>>;

StrokeTemplate glyph(double width, std::vector<Polyline> strokes) { return {width, std::move(strokes)}; }

Polyline ellipse(double cx, double cy, double rx, double ry, int segments) {
  Polyline out;
  for (int i = 0; i <= segments; ++i) {
    const double a = -1.5707963267948966 + 6.283185307179586 * i / segments;
    out.emplace_back(cx + rx * std::cos(a), cy + ry * std::sin(a));
  }
  return out;
}

struct Node {
  enum class Kind { kGlyph, kRow, kSup, kSub, kFrac, kSqrt } kind;
  std::string token;
  std::vector<Node> kids;
};

class Generator {
 public:
  explicit Generator(const SynthSpec& spec) : spec_(spec), rng_(spec.seed) {
    const std::set<std::string> given(spec.symbols.begin(), spec.symbols.end());
    for (const auto& s : spec.symbols) {
      if (std::find(std::begin(kStructuralTokens), std::end(kStructuralTokens), s) != std::end(kStructuralTokens)) {
        continue;
      }
      if (!spec.templates.contains(s)) throw ConfigError("symbol '" + s + "' has no stroke template");
      (s == "+" || s == "-" ? operators_ : atoms_).push_back(s);
    }
    if (atoms_.empty()) atoms_.swap(operators_);
    if (atoms_.empty()) throw ConfigError("synthetic spec has no drawable symbol");
    const bool braces = given.contains("{") && given.contains("}");
    if (braces && given.contains("^")) relations_.push_back(Node::Kind::kSup);
    if (braces && given.contains("_")) relations_.push_back(Node::Kind::kSub);
    if (braces && given.contains("\\frac")) relations_.push_back(Node::Kind::kFrac);
    if (braces && given.contains("\\sqrt")) relations_.push_back(Node::Kind::kSqrt);
  }

  Ink sample() {
    const Node root = spec_.depth == 0 ? atom() : row(spec_.depth, spec_.max_terms);
    std::vector<Polyline> strokes;
    layout(root, 0.0, 0.0, spec_.glyph_size, strokes);

    double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
    for (const auto& s : strokes) {
      for (const auto& [x, y] : s) {
        min_x = std::min(min_x, x);
        min_y = std::min(min_y, y);
      }
    }
    Ink ink;
    for (std::size_t k = 0; k < strokes.size(); ++k) {
      for (const auto& [x, y] : strokes[k]) ink.points.push_back({x - min_x, y - min_y, k});
    }
    std::vector<std::string> label;
    emit_label(root, label);
    ink.label = std::move(label);
    return ink;
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  Node atom() { return {Node::Kind::kGlyph, atoms_[pick(atoms_.size())], {}}; }

  Node term(std::size_t depth) {
    if (depth == 0 || relations_.empty() || pick(2) == 0) return atom();
    const auto kind = relations_[pick(relations_.size())];
    switch (kind) {
      case Node::Kind::kSup:
      case Node::Kind::kSub:
        return {kind, {}, {atom(), row(depth - 1, 2)}};
      case Node::Kind::kFrac:
        return {kind, {}, {row(depth - 1, 2), row(depth - 1, 2)}};
      default:
        return {kind, {}, {row(depth - 1, 2)}};
    }
  }

  Node row(std::size_t depth, std::size_t max_terms) {
    Node r{Node::Kind::kRow, {}, {}};
    const std::size_t n = 1 + pick(std::max<std::size_t>(max_terms, 1));
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0 && !operators_.empty()) r.kids.push_back({Node::Kind::kGlyph, operators_[pick(operators_.size())], {}});
      r.kids.push_back(term(depth));
    }
    return r;
  }

  static void braced(const Node& n, std::vector<std::string>& out) {
    out.emplace_back("{");
    emit_label(n, out);
    out.emplace_back("}");
  }

  static void emit_label(const Node& n, std::vector<std::string>& out) {
    switch (n.kind) {
      case Node::Kind::kGlyph:
        out.push_back(n.token);
        break;
      case Node::Kind::kRow:
        for (const auto& k : n.kids) emit_label(k, out);
        break;
      case Node::Kind::kSup:
      case Node::Kind::kSub:
        emit_label(n.kids[0], out);
        out.emplace_back(n.kind == Node::Kind::kSup ? "^" : "_");
        braced(n.kids[1], out);
        break;
      case Node::Kind::kFrac:
        out.emplace_back("\\frac");
        braced(n.kids[0], out);
        braced(n.kids[1], out);
        break;
      case Node::Kind::kSqrt:
        out.emplace_back("\\sqrt");
        braced(n.kids[0], out);
        break;
    }
  }

  double measure(const Node& n, double size) const {
    switch (n.kind) {
      case Node::Kind::kGlyph:
        return spec_.templates.at(n.token).width * size;
      case Node::Kind::kRow: {
        double w = 0.0;
        for (const auto& k : n.kids) w += measure(k, size);
        return w + kGap * size * static_cast<double>(n.kids.size() - 1);
      }
      case Node::Kind::kSup:
      case Node::Kind::kSub:
        return measure(n.kids[0], size) + 0.05 * size + measure(n.kids[1], kScript * size);
      case Node::Kind::kFrac:
        return std::max(measure(n.kids[0], 0.8 * size), measure(n.kids[1], 0.8 * size)) + 0.2 * size;
      case Node::Kind::kSqrt:
        return 0.6 * size + measure(n.kids[0], 0.8 * size);
    }
    return 0.0;
  }

  double jitter(double size) { return std::uniform_real_distribution<double>(-spec_.jitter, spec_.jitter)(rng_) * size; }

  void add_stroke(const Polyline& unit, double x, double top, double size, std::vector<Polyline>& out) {
    Polyline s;
    for (const auto& [u, v] : unit) {
      const double dx = jitter(size);
      const double dy = jitter(size);
      s.emplace_back(x + u * size + dx, top + v * size + dy);
    }
    out.push_back(std::move(s));
  }

  /// Draws `n` with its nominal glyph box at [top, top + size]; returns the right edge.
  double layout(const Node& n, double x, double top, double size, std::vector<Polyline>& out) {
    switch (n.kind) {
      case Node::Kind::kGlyph: {
        const auto& t = spec_.templates.at(n.token);
        for (const auto& s : t.strokes) add_stroke(s, x, top, size, out);
        return x + t.width * size;
      }
      case Node::Kind::kRow: {
        double cur = x;
        for (std::size_t i = 0; i < n.kids.size(); ++i) {
          if (i > 0) cur += kGap * size;
          cur = layout(n.kids[i], cur, top, size, out);
        }
        return cur;
      }
      case Node::Kind::kSup:
      case Node::Kind::kSub: {
        const double right = layout(n.kids[0], x, top, size, out);
        const double s = kScript * size;
        const double script_top = n.kind == Node::Kind::kSup ? top + 0.3 * size - s : top + 0.7 * size;
        return layout(n.kids[1], right + 0.05 * size, script_top, s, out);
      }
      case Node::Kind::kFrac: {
        const double s = 0.8 * size;
        const double wn = measure(n.kids[0], s), wd = measure(n.kids[1], s);
        const double w = std::max(wn, wd) + 0.2 * size;
        const double bar = top + 0.5 * size;
        layout(n.kids[0], x + (w - wn) / 2.0, bar - 0.1 * size - s, s, out);
        add_stroke({{0.0, 0.0}, {w / size, 0.0}}, x, bar, size, out);
        layout(n.kids[1], x + (w - wd) / 2.0, bar + 0.1 * size, s, out);
        return x + w;
      }
      case Node::Kind::kSqrt: {
        const double s = 0.8 * size;
        const double wb = measure(n.kids[0], s);
        const double end = 0.6 + wb / size;
        add_stroke({{0.0, 0.55}, {0.12, 0.45}, {0.25, 1.0}, {0.4, -0.05}, {end, -0.05}}, x, top, size, out);
        layout(n.kids[0], x + 0.5 * size, top + 0.12 * size, s, out);
        return x + end * size;
      }
    }
    return x;
  }

  static constexpr double kGap = 0.25;
  static constexpr double kScript = 0.6;

  const SynthSpec& spec_;
  std::mt19937_64 rng_;
  std::vector<std::string> atoms_;
  std::vector<std::string> operators_;
  std::vector<Node::Kind> relations_;
};

}  // namespace

const std::map<std::string, StrokeTemplate>& default_templates() {
  static const std::map<std::string, StrokeTemplate> templates = {
      {"0", glyph(0.6, {ellipse(0.3, 0.5, 0.27, 0.48, 12)})},
      {"1", glyph(0.4, {{{0.12, 0.2}, {0.3, 0.0}, {0.3, 1.0}}})},
      {"2", glyph(0.6, {{{0.05, 0.25}, {0.15, 0.05}, {0.35, 0.0}, {0.5, 0.1}, {0.5, 0.3}, {0.05, 1.0}, {0.55, 1.0}}})},
      {"3", glyph(0.6, {{{0.05, 0.1}, {0.25, 0.0}, {0.45, 0.08}, {0.48, 0.25}, {0.3, 0.45}, {0.48, 0.6},
                         {0.5, 0.85}, {0.3, 1.0}, {0.05, 0.9}}})},
      {"4", glyph(0.6, {{{0.4, 1.0}, {0.4, 0.0}, {0.0, 0.65}, {0.55, 0.65}}})},
      {"5", glyph(0.6, {{{0.5, 0.0}, {0.1, 0.0}, {0.05, 0.45}, {0.3, 0.4}, {0.5, 0.55}, {0.5, 0.85}, {0.3, 1.0},
                         {0.05, 0.92}}})},
      {"6", glyph(0.6, {{{0.45, 0.05}, {0.25, 0.0}, {0.08, 0.3}, {0.05, 0.7}, {0.2, 1.0}, {0.4, 0.95}, {0.5, 0.75},
                         {0.4, 0.55}, {0.2, 0.55}, {0.06, 0.7}}})},
      {"7", glyph(0.6, {{{0.0, 0.0}, {0.55, 0.0}, {0.2, 1.0}}})},
      {"8", glyph(0.6, {{{0.3, 0.45}, {0.08, 0.25}, {0.15, 0.02}, {0.45, 0.02}, {0.52, 0.25}, {0.3, 0.45},
                         {0.05, 0.7}, {0.15, 0.98}, {0.45, 0.98}, {0.55, 0.7}, {0.3, 0.45}}})},
      {"9", glyph(0.6, {{{0.5, 0.3}, {0.35, 0.45}, {0.12, 0.4}, {0.05, 0.2}, {0.2, 0.0}, {0.45, 0.05}, {0.5, 0.3},
                         {0.45, 1.0}}})},
      {"x", glyph(0.6, {{{0.0, 0.3}, {0.55, 1.0}, {0.55, 0.3}, {0.0, 1.0}}})},
      {"y", glyph(0.6, {{{0.0, 0.3}, {0.3, 0.75}, {0.55, 0.3}, {0.3, 0.75}, {0.15, 1.15}}})},
      {"e", glyph(0.55, {{{0.05, 0.65}, {0.5, 0.62}, {0.45, 0.38}, {0.28, 0.3}, {0.08, 0.42}, {0.05, 0.75},
                          {0.2, 0.98}, {0.5, 0.92}}})},
      {"+", glyph(0.6, {{{0.05, 0.6}, {0.55, 0.6}}, {{0.3, 0.35}, {0.3, 0.85}}})},
      {"-", glyph(0.6, {{{0.05, 0.6}, {0.55, 0.6}}})},
  };
  return templates;
}

std::vector<Ink> generate(const SynthSpec& spec, std::size_t count) {
  if (count == 0) throw ContractError("count must be at least 1");
  if (!(spec.glyph_size > 0.0)) throw ConfigError("glyph_size must be positive");
  Generator gen(spec);
  std::vector<Ink> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(gen.sample());
  return out;
}

}  // namespace ink2tex
