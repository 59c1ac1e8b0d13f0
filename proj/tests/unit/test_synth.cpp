#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include "ink2tex/errors.hpp"
#include "ink2tex/preprocess.hpp"
#include "ink2tex/synth.hpp"
#include "ink2tex/vocabulary.hpp"

using namespace ink2tex;

namespace {

struct YRange {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
};

YRange y_range(const Ink& ink, std::size_t first_stroke, std::size_t end_stroke) {
  YRange r;
  for (const auto& p : ink.points) {
    if (p.stroke_id < first_stroke || p.stroke_id >= end_stroke) continue;
    r.lo = std::min(r.lo, p.y);
    r.hi = std::max(r.hi, p.y);
  }
  return r;
}

std::vector<std::string> words(std::string_view s) { return tokenize(s); }

std::size_t drawable_count(const std::vector<std::string>& label) {
  return static_cast<std::size_t>(std::count_if(label.begin(), label.end(), [](const std::string& t) {
    return std::find(std::begin(kStructuralTokens), std::end(kStructuralTokens), t) == std::end(kStructuralTokens);
  }));
}

}  // namespace

TEST(Synth, DepthZeroSingleGlyph) {
  SynthSpec spec;
  spec.symbols = {"x"};
  spec.depth = 0;
  const auto inks = generate(spec, 5);
  ASSERT_EQ(inks.size(), 5u);
  for (const auto& ink : inks) {
    EXPECT_EQ(ink.stroke_count(), 1u);
    EXPECT_EQ(*ink.label, words("x"));
    EXPECT_NO_THROW(validate(ink));
  }
}

TEST(Synth, SuperscriptSitsAboveBaseMidline) {
  SynthSpec spec;
  spec.symbols = {"x", "2", "^", "{", "}"};
  spec.max_terms = 1;
  std::size_t seen = 0;
  for (const auto& ink : generate(spec, 200)) {
    if (*ink.label != words("x ^ { 2 }")) continue;
    ++seen;
    const YRange base = y_range(ink, 0, 1);
    const YRange script = y_range(ink, 1, ink.stroke_count());
    EXPECT_LT(script.hi, 0.5 * (base.lo + base.hi));
    EXPECT_LT(script.lo, base.lo);
  }
  EXPECT_GT(seen, 0u);
}

TEST(Synth, SubscriptSitsBelowBaseMidline) {
  SynthSpec spec;
  spec.symbols = {"x", "2", "_", "{", "}"};
  spec.max_terms = 1;
  std::size_t seen = 0;
  for (const auto& ink : generate(spec, 200)) {
    if (*ink.label != words("x _ { 2 }")) continue;
    ++seen;
    const YRange base = y_range(ink, 0, 1);
    const YRange script = y_range(ink, 1, ink.stroke_count());
    EXPECT_GT(script.lo, 0.5 * (base.lo + base.hi));
    EXPECT_GT(script.hi, base.hi);
  }
  EXPECT_GT(seen, 0u);
}

TEST(Synth, SameSeedSameCorpus) {
  SynthSpec spec;
  const auto a = generate(spec, 20);
  const auto b = generate(spec, 20);
  EXPECT_EQ(a, b);
  spec.seed = 8;
  EXPECT_NE(a, generate(spec, 20));
}

TEST(Synth, LabelsStayInsideTheSymbolSet) {
  SynthSpec spec;
  spec.symbols = {"x", "y", "1", "2", "+", "^", "_", "{", "}", "\\frac", "\\sqrt"};
  spec.depth = 2;
  const Vocabulary vocab(spec.symbols);
  for (const auto& ink : generate(spec, 100)) {
    ASSERT_TRUE(ink.label);
    const auto ids = vocab.encode(*ink.label);
    EXPECT_EQ(std::count(ids.begin(), ids.end(), Vocabulary::kUnknown), 0);
    EXPECT_EQ(vocab.decode(ids), *ink.label);
    EXPECT_EQ(std::count(ink.label->begin(), ink.label->end(), "{"), std::count(ink.label->begin(), ink.label->end(), "}"));
  }
}

TEST(Synth, FeaturesHaveAtLeastOneRowPerGlyph) {
  SynthSpec spec;
  spec.symbols = {"x", "e", "1", "2", "+", "-", "^", "_", "{", "}", "\\frac", "\\sqrt"};
  spec.depth = 2;
  for (const auto& ink : generate(spec, 50)) {
    EXPECT_GE(featurize(ink).size(), drawable_count(*ink.label));
  }
}

TEST(Synth, InkStartsAtOrigin) {
  for (const auto& ink : generate(SynthSpec{}, 20)) {
    double min_x = 1e300, min_y = 1e300;
    for (const auto& p : ink.points) {
      min_x = std::min(min_x, p.x);
      min_y = std::min(min_y, p.y);
    }
    EXPECT_EQ(min_x, 0.0);
    EXPECT_EQ(min_y, 0.0);
  }
}

TEST(Synth, Errors) {
  SynthSpec spec;
  spec.symbols = {"x", "z"};
  EXPECT_THROW(generate(spec, 3), ConfigError);
  spec.symbols = {"^", "{", "}"};
  EXPECT_THROW(generate(spec, 3), ConfigError);
  EXPECT_THROW(generate(SynthSpec{}, 0), ContractError);
}
