#include "ink2tex/errors.hpp"

namespace ink2tex {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

FormatError::FormatError(const std::string& what, std::size_t line)
    : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

VersionMismatchError::VersionMismatchError(std::uint32_t found, std::uint32_t expected)
    : ModelFormatError("model format version " + std::to_string(found) + " is not supported (expected " +
                       std::to_string(expected) + ")") {}

MissingKeyError::MissingKeyError(const std::string& key)
    : ModelFormatError("missing parameter '" + key + "'"), key_(key) {}

ShapeMismatchError::ShapeMismatchError(const std::string& key, const std::string& found,
                                       const std::string& expected)
    : ModelFormatError("parameter '" + key + "' has shape " + found + ", expected " + expected), key_(key) {}

}  // namespace ink2tex
