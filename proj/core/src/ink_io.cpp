#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "ink2tex/errors.hpp"
#include "ink2tex/ink.hpp"

namespace ink2tex {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view field, T& out) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

void append_double(std::string& out, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::size_t Ink::stroke_count() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i == 0 || points[i].stroke_id != points[i - 1].stroke_id) ++count;
  }
  return count;
}

void validate(const Ink& ink) {
  if (ink.points.empty()) throw EmptyInputError("ink has no points");
  if (ink.points.front().stroke_id != 0) throw FormatError("first stroke id must be 0");
  for (std::size_t i = 0; i < ink.points.size(); ++i) {
    const auto& p = ink.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw FormatError("point " + std::to_string(i) + " has a non-finite coordinate");
    }
    if (i > 0 && p.stroke_id < ink.points[i - 1].stroke_id) {
      throw FormatError("stroke id decreases at point " + std::to_string(i));
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> stroke_ranges(const Ink& ink) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= ink.points.size(); ++i) {
    if (i == ink.points.size() || ink.points[i].stroke_id != ink.points[begin].stroke_id) {
      ranges.emplace_back(begin, i);
      begin = i;
    }
  }
  return ranges;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

Ink parse_points(std::string_view text) {
  Ink ink;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool label_seen = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with("#label")) {
        if (label_seen) throw FormatError("duplicate #label line", line_no);
        label_seen = true;
        ink.label = tokenize(line.substr(6));
      }
      continue;
    }
    if (label_seen) throw FormatError("point record after #label line", line_no);

    const auto fields = tokenize(line);
    if (fields.size() != 3) {
      throw FormatError("expected 'x y stroke_id', got " + std::to_string(fields.size()) + " fields", line_no);
    }
    TrajectoryPoint p;
    if (!parse_number(fields[0], p.x) || !parse_number(fields[1], p.y)) {
      throw FormatError("non-numeric coordinate", line_no);
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw FormatError("non-finite coordinate", line_no);
    if (!parse_number(fields[2], p.stroke_id)) throw FormatError("stroke id is not a non-negative integer", line_no);
    if (ink.points.empty() && p.stroke_id != 0) throw FormatError("first stroke id must be 0", line_no);
    if (!ink.points.empty() && p.stroke_id < ink.points.back().stroke_id) {
      throw FormatError("stroke id decreased from " + std::to_string(ink.points.back().stroke_id) + " to " +
                            std::to_string(p.stroke_id),
                        line_no);
    }
    ink.points.push_back(p);
  }
  if (ink.points.empty()) throw EmptyInputError("point file contains no points");
  return ink;
}

std::string write_points(const Ink& ink) {
  std::string out;
  out.reserve(ink.points.size() * 48);
  for (const auto& p : ink.points) {
    append_double(out, p.x);
    out.push_back(' ');
    append_double(out, p.y);
    out.push_back(' ');
    out += std::to_string(p.stroke_id);
    out.push_back('\n');
  }
  if (ink.label) {
    out += "#label";
    for (const auto& tok : *ink.label) {
      out.push_back(' ');
      out += tok;
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace ink2tex
