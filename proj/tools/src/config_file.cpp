#include "config_file.hpp"

#include <algorithm>
#include <set>

#include "ink2tex/dataset.hpp"
#include "ink2tex/errors.hpp"

namespace ink2tex::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_file(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.starts_with("--")) key.erase(0, 2);
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(key).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": repeated key '" + key + "'");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].starts_with("--config=")) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path.empty()) return args;

  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw ConfigError("cannot read config file " + path);
  }
  for (const auto& [key, value] : parse_config_file(text)) {
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(),
                                   [&](const std::string& a) { return a == flag || a.starts_with(flag + "="); });
    if (given) continue;
    args.push_back(flag);
    args.push_back(value);
  }
  return args;
}

}  // namespace ink2tex::cli
