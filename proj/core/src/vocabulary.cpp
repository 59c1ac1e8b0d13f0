#include "ink2tex/vocabulary.hpp"

#include <spdlog/spdlog.h>

#include "ink2tex/errors.hpp"

namespace ink2tex {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  tokens_ = {std::string(kStartToken), std::string(kEndToken), std::string(kUnknownToken)};
  tokens_.reserve(kReserved + tokens.size());
  for (TokenId i = 0; i < kReserved; ++i) index_.emplace(tokens_[i], i);
  for (auto& tok : tokens) {
    if (tok.empty()) throw FormatError("empty vocabulary token");
    if (!index_.emplace(tok, tokens_.size()).second) throw FormatError("duplicate vocabulary token '" + tok + "'");
    tokens_.push_back(std::move(tok));
  }
}

Vocabulary Vocabulary::load(std::string_view text) {
  std::vector<std::string> tokens;
  std::unordered_map<std::string, std::size_t> first_line;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    std::string tok(line);
    if (tok == kStartToken || tok == kEndToken || tok == kUnknownToken) {
      throw FormatError("token '" + tok + "' is reserved", line_no);
    }
    const auto [it, inserted] = first_line.emplace(tok, line_no);
    if (!inserted) {
      throw FormatError("duplicate token '" + tok + "' on lines " + std::to_string(it->second) + " and " +
                            std::to_string(line_no),
                        line_no);
    }
    tokens.push_back(std::move(tok));
  }
  return Vocabulary(std::move(tokens));
}

std::string Vocabulary::save() const {
  std::string out;
  for (std::size_t i = kReserved; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out.push_back('\n');
  }
  return out;
}

TokenId Vocabulary::index(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknown : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.contains(std::string(token)); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw DimensionError("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                         std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) {
    const auto id = index(tok);
    if (id == kUnknown && tok != kUnknownToken) spdlog::warn("token '{}' is not in the vocabulary; mapped to {}", tok, kUnknownToken);
    ids.push_back(id);
  }
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto id : ids) {
    if (id == kStart || id == kEnd) continue;
    out.push_back(token(id));
  }
  return out;
}

}  // namespace ink2tex
