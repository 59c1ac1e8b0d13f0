#include <charconv>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ink2tex/errors.hpp"
#include "ink2tex/ink.hpp"

namespace ink2tex {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

bool is_name_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool is_name_char(char c) { return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.'; }

// Local part of a possibly prefixed name ("inkml:trace" -> "trace").
std::string_view local_name(std::string_view name) {
  const auto colon = name.rfind(':');
  return colon == std::string_view::npos ? name : name.substr(colon + 1);
}

struct Element {
  std::string name;
  std::map<std::string, std::string> attributes;
  std::string text;
  std::size_t depth = 0;
};

// Streaming scanner over the subset of XML that InkML files use. It checks well-formedness
// (tag balance, attribute syntax, entities) and hands every closed element to a callback.
class XmlScanner {
 public:
  explicit XmlScanner(std::string_view doc) : doc_(doc) {}

  template <class OnElement>
  void run(OnElement&& on_element) {
    bool root_seen = false;
    while (pos_ < doc_.size()) {
      if (doc_[pos_] != '<') {
        const std::size_t start = pos_;
        while (pos_ < doc_.size() && doc_[pos_] != '<') ++pos_;
        std::string text = decode(doc_.substr(start, pos_ - start), start);
        if (stack_.empty()) {
          for (char c : text) {
            if (!is_space(c)) throw ParseError("text outside the root element", start);
          }
        } else {
          stack_.back().text += text;
        }
        continue;
      }
      if (starts_with("<?")) {
        skip_past("?>", "unterminated processing instruction");
      } else if (starts_with("<!--")) {
        skip_past("-->", "unterminated comment");
      } else if (starts_with("<![CDATA[")) {
        const std::size_t start = pos_;
        pos_ += 9;
        const auto end = doc_.find("]]>", pos_);
        if (end == std::string_view::npos) throw ParseError("unterminated CDATA section", start);
        if (stack_.empty()) throw ParseError("CDATA outside the root element", start);
        stack_.back().text.append(doc_.substr(pos_, end - pos_));
        pos_ = end + 3;
      } else if (starts_with("<!")) {
        skip_past(">", "unterminated declaration");
      } else if (starts_with("</")) {
        const std::size_t start = pos_;
        pos_ += 2;
        const std::string name = read_name();
        skip_space();
        expect('>');
        if (stack_.empty() || stack_.back().name != name) {
          throw ParseError("unexpected closing tag </" + name + ">", start);
        }
        Element done = std::move(stack_.back());
        stack_.pop_back();
        on_element(done);
      } else {
        const std::size_t start = pos_;
        ++pos_;
        if (stack_.empty() && root_seen) throw ParseError("more than one root element", start);
        Element el;
        el.name = read_name();
        el.depth = stack_.size();
        for (;;) {
          const bool had_space = skip_space();
          if (at_end()) throw ParseError("unterminated start tag <" + el.name + ">", start);
          if (doc_[pos_] == '>') {
            ++pos_;
            stack_.push_back(std::move(el));
            break;
          }
          if (starts_with("/>")) {
            pos_ += 2;
            on_element(el);
            break;
          }
          if (!had_space) throw ParseError("expected whitespace before attribute", pos_);
          const std::size_t attr_pos = pos_;
          std::string key = read_name();
          skip_space();
          expect('=');
          skip_space();
          std::string value = read_quoted();
          if (!el.attributes.emplace(std::move(key), std::move(value)).second) {
            throw ParseError("duplicate attribute", attr_pos);
          }
        }
        root_seen = true;
      }
    }
    if (!stack_.empty()) throw ParseError("unclosed element <" + stack_.back().name + ">", doc_.size());
    if (!root_seen) throw ParseError("document has no root element", doc_.size());
  }

 private:
  bool at_end() const { return pos_ >= doc_.size(); }
  bool starts_with(std::string_view s) const { return doc_.substr(pos_).starts_with(s); }

  bool skip_space() {
    const std::size_t start = pos_;
    while (!at_end() && is_space(doc_[pos_])) ++pos_;
    return pos_ > start;
  }

  void skip_past(std::string_view terminator, const char* message) {
    const auto end = doc_.find(terminator, pos_);
    if (end == std::string_view::npos) throw ParseError(message, pos_);
    pos_ = end + terminator.size();
  }

  void expect(char c) {
    if (at_end() || doc_[pos_] != c) throw ParseError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  std::string read_name() {
    if (at_end() || !is_name_start(doc_[pos_])) throw ParseError("expected a name", pos_);
    const std::size_t start = pos_;
    while (!at_end() && is_name_char(doc_[pos_])) ++pos_;
    return std::string(doc_.substr(start, pos_ - start));
  }

  std::string read_quoted() {
    if (at_end() || (doc_[pos_] != '"' && doc_[pos_] != '\'')) throw ParseError("expected a quoted value", pos_);
    const char quote = doc_[pos_++];
    const std::size_t start = pos_;
    while (!at_end() && doc_[pos_] != quote) {
      if (doc_[pos_] == '<') throw ParseError("'<' inside attribute value", pos_);
      ++pos_;
    }
    if (at_end()) throw ParseError("unterminated attribute value", start);
    std::string value = decode(doc_.substr(start, pos_ - start), start);
    ++pos_;
    return value;
  }

  static std::string decode(std::string_view raw, std::size_t base) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out.push_back(raw[i]);
        continue;
      }
      const auto semi = raw.find(';', i);
      if (semi == std::string_view::npos) throw ParseError("unterminated entity", base + i);
      const auto entity = raw.substr(i + 1, semi - i - 1);
      if (entity == "lt") out.push_back('<');
      else if (entity == "gt") out.push_back('>');
      else if (entity == "amp") out.push_back('&');
      else if (entity == "quot") out.push_back('"');
      else if (entity == "apos") out.push_back('\'');
      else if (entity.size() > 1 && entity[0] == '#') {
        unsigned code = 0;
        const bool hex = entity[1] == 'x' || entity[1] == 'X';
        const auto digits = entity.substr(hex ? 2 : 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), code, hex ? 16 : 10);
        if (ec != std::errc() || ptr != digits.data() + digits.size()) {
          throw ParseError("bad character reference", base + i);
        }
        append_utf8(out, code);
      } else {
        throw ParseError("unknown entity '&" + std::string(entity) + ";'", base + i);
      }
      i = semi;
    }
    return out;
  }

  static void append_utf8(std::string& out, unsigned code) {
    if (code < 0x80) {
      out.push_back(static_cast<char>(code));
    } else if (code < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (code >> 6)));
      out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
    } else if (code < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (code >> 12)));
      out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (code >> 18)));
      out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
    }
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
  std::vector<Element> stack_;
};

// A trace point carries x, y and optionally a third channel (time) that is dropped.
void append_trace(Ink& ink, const std::string& content, std::size_t stroke, const std::string& trace_name) {
  std::size_t begin = 0;
  std::size_t added = 0;
  while (begin <= content.size()) {
    auto end = content.find(',', begin);
    if (end == std::string::npos) end = content.size();
    const auto values = tokenize(std::string_view(content).substr(begin, end - begin));
    begin = end + 1;
    if (values.empty()) {
      if (end == content.size()) break;
      throw FormatError("trace " + trace_name + ": empty point");
    }
    if (values.size() == 1) throw FormatError("trace " + trace_name + ": odd coordinate count");
    if (values.size() > 3) throw FormatError("trace " + trace_name + ": too many channels in a point");
    double xy[2];
    for (int k = 0; k < 2; ++k) {
      const auto& v = values[static_cast<std::size_t>(k)];
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), xy[k]);
      if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(xy[k])) {
        throw FormatError("trace " + trace_name + ": non-numeric coordinate '" + v + "'");
      }
    }
    ink.points.push_back({xy[0], xy[1], stroke});
    ++added;
  }
  if (added == 0) throw FormatError("trace " + trace_name + ": no points");
}

std::string strip_math_delimiters(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '$' && s.back() == '$') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

}  // namespace

Ink parse_inkml(std::string_view bytes) {
  bool blank = true;
  for (char c : bytes) {
    if (!is_space(c)) {
      blank = false;
      break;
    }
  }
  if (blank) throw EmptyInputError("InkML input is empty");

  Ink ink;
  std::size_t stroke = 0;
  XmlScanner scanner(bytes);
  scanner.run([&](const Element& el) {
    const auto name = local_name(el.name);
    if (name == "trace") {
      const auto id = el.attributes.find("id");
      const std::string trace_name = id != el.attributes.end() ? "'" + id->second + "'" : "#" + std::to_string(stroke);
      append_trace(ink, el.text, stroke, trace_name);
      ++stroke;
    } else if (name == "annotation" && el.depth == 1 && !ink.label) {
      const auto type = el.attributes.find("type");
      if (type != el.attributes.end() && type->second == "truth") {
        ink.label = tokenize(strip_math_delimiters(el.text));
      }
    }
  });
  if (ink.points.empty()) throw EmptyInputError("InkML input contains no traces");
  return ink;
}

}  // namespace ink2tex
