#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ink2tex {

using TokenId = std::size_t;

/// Token inventory with three reserved entries in front of the loaded tokens.
class Vocabulary {
 public:
  static constexpr TokenId kStart = 0;
  static constexpr TokenId kEnd = 1;
  static constexpr TokenId kUnknown = 2;
  static constexpr std::size_t kReserved = 3;
  static constexpr std::string_view kStartToken = "<s>";
  static constexpr std::string_view kEndToken = "</s>";
  static constexpr std::string_view kUnknownToken = "<unk>";

  Vocabulary();
  /// Throws FormatError on a duplicate or a token that collides with a reserved name.
  explicit Vocabulary(std::vector<std::string> tokens);

  /// One token per line; blank lines are skipped. Duplicates are reported with both line
  /// numbers.
  static Vocabulary load(std::string_view text);
  std::string save() const;

  std::size_t size() const noexcept { return tokens_.size(); }
  /// Index of `token`, or kUnknown.
  TokenId index(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  /// Maps tokens to ids, logging a warning for each unknown token.
  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  /// Drops the reserved start/end markers.
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace ink2tex
