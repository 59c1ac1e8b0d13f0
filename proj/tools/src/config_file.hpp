#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ink2tex::cli {

/// Flat `key = value` text. `#` starts a comment line; blank lines are skipped.
/// Throws ConfigError (with the line number) on a line without '=' or a repeated key.
std::vector<std::pair<std::string, std::string>> parse_config_file(std::string_view text);

/// Removes `--config PATH` / `--config=PATH` from `args` and appends `--key value` for every
/// config entry whose flag is not already present, so explicit flags win.
std::vector<std::string> merge_config(std::vector<std::string> args);

}  // namespace ink2tex::cli
