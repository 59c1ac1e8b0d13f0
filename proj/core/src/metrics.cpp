#include "ink2tex/metrics.hpp"

#include "ink2tex/errors.hpp"

namespace ink2tex {

double wer(const TokenSeq& ref, const TokenSeq& hyp) {
  if (ref.empty()) return static_cast<double>(hyp.size());
  return static_cast<double>(edit_distance<std::string>(ref, hyp)) / static_cast<double>(ref.size());
}

ExpRates exprate(const std::vector<TokenSeq>& refs, const std::vector<TokenSeq>& hyps) {
  if (refs.size() != hyps.size()) {
    throw ContractError("exprate: " + std::to_string(refs.size()) + " references but " + std::to_string(hyps.size()) +
                        " hypotheses");
  }
  ExpRates r;
  r.count = refs.size();
  if (refs.empty()) return r;
  std::size_t hits[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto d = edit_distance<std::string>(refs[i], hyps[i]);
    for (std::size_t k = 0; k < 4; ++k) {
      if (d <= k) ++hits[k];
    }
  }
  const double n = static_cast<double>(refs.size());
  r.exact = static_cast<double>(hits[0]) / n;
  r.within1 = static_cast<double>(hits[1]) / n;
  r.within2 = static_cast<double>(hits[2]) / n;
  r.within3 = static_cast<double>(hits[3]) / n;
  return r;
}

double corpus_wer(const std::vector<TokenSeq>& refs, const std::vector<TokenSeq>& hyps) {
  if (refs.size() != hyps.size()) throw ContractError("corpus_wer: reference and hypothesis counts differ");
  std::size_t errors = 0, length = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    errors += edit_distance<std::string>(refs[i], hyps[i]);
    length += refs[i].size();
  }
  if (length == 0) return static_cast<double>(errors);
  return static_cast<double>(errors) / static_cast<double>(length);
}

}  // namespace ink2tex
