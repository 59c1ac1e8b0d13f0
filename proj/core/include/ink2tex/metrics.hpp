#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ink2tex {

/// Token-level Levenshtein distance with unit costs.
template <class T>
std::size_t edit_distance(std::span<const T> a, std::span<const T> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({subst, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

using TokenSeq = std::vector<std::string>;

/// edit_distance / len(ref). An empty reference scores 0 against an empty hypothesis and
/// len(hyp) otherwise.
double wer(const TokenSeq& ref, const TokenSeq& hyp);

/// Fractions (0..1) of expressions whose edit distance to the reference is 0, <= 1, <= 2,
/// <= 3.
struct ExpRates {
  double exact = 0.0;
  double within1 = 0.0;
  double within2 = 0.0;
  double within3 = 0.0;
  std::size_t count = 0;
};

/// Throws ContractError when the lists differ in length.
ExpRates exprate(const std::vector<TokenSeq>& refs, const std::vector<TokenSeq>& hyps);

/// Total edit distance over total reference length (0 for an all-empty corpus).
double corpus_wer(const std::vector<TokenSeq>& refs, const std::vector<TokenSeq>& hyps);

}  // namespace ink2tex
