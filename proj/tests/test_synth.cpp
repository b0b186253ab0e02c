#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <string>

#include "dvauth/error.hpp"
#include "dvauth/synth.hpp"
#include "dvauth/textmodel.hpp"

using namespace dvauth;

namespace {

std::size_t count_in(const std::vector<std::string>& tokens, const std::set<std::string>& words) {
  return static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(), [&](const std::string& t) { return words.count(t) > 0; }));
}

}  // namespace

TEST(Synth, MarkerSetsAreDisjoint) {
  const StyleGenerator gen;
  const auto& a = gen.markers(Style::archaic);
  const auto& m = gen.markers(Style::modern);
  EXPECT_EQ(a.size(), 50u);
  EXPECT_EQ(m.size(), 50u);
  std::set<std::string> all(a.begin(), a.end());
  all.insert(m.begin(), m.end());
  EXPECT_EQ(all.size(), 100u);
  EXPECT_EQ(std::set<std::string>(gen.stems().begin(), gen.stems().end()).size(), 50u);
}

TEST(Synth, ReferenceVocabularyCoversEverySurfaceForm) {
  const StyleGenerator gen;
  EXPECT_GE(gen.surface_vocabulary(), 1900u);
  EXPECT_LE(gen.surface_vocabulary(), 2100u);
  std::set<std::string> seen;
  for (const auto& doc : gen.reference_corpus(300, 1000, 5)) {
    for (auto& t : tokenize(doc)) seen.insert(std::move(t));
  }
  EXPECT_LE(seen.size(), gen.surface_vocabulary());
  EXPECT_GE(seen.size(), gen.surface_vocabulary() * 95 / 100);
  // Both marker sets occur in the reference register.
  for (const auto& w : gen.markers(Style::archaic)) EXPECT_TRUE(seen.count(w)) << w;
  for (const auto& w : gen.markers(Style::modern)) EXPECT_TRUE(seen.count(w)) << w;
}

TEST(Synth, DocumentsHaveRequestedLength) {
  const StyleGenerator gen;
  const auto ref = gen.reference_corpus(3, 1000, 1);
  ASSERT_EQ(ref.size(), 3u);
  for (const auto& doc : ref) EXPECT_EQ(tokenize(doc).size(), 1000u);
  Rng rng(2);
  EXPECT_EQ(tokenize(gen.author_text(Style::modern, 500, rng)).size(), 500u);
}

TEST(Synth, AuthorsUseOnlyTheirOwnMarkers) {
  const StyleGenerator gen;
  const std::set<std::string> archaic(gen.markers(Style::archaic).begin(), gen.markers(Style::archaic).end());
  const std::set<std::string> modern(gen.markers(Style::modern).begin(), gen.markers(Style::modern).end());
  Rng rng(3);
  const auto tokens = tokenize(gen.author_text(Style::archaic, 5000, rng));
  EXPECT_EQ(count_in(tokens, modern), 0u);
  const double rate = static_cast<double>(count_in(tokens, archaic)) / static_cast<double>(tokens.size());
  EXPECT_NEAR(rate, gen.config().marker_rate, 0.02);
}

TEST(Synth, DatasetIsBalancedAndDeterministic) {
  const StyleGenerator gen;
  const auto a = gen.make_dataset(100, 500, 9);
  EXPECT_EQ(a.problems.size(), 100u);
  EXPECT_EQ(a.positive_count(), 50u);
  EXPECT_EQ(a.problems.front().id, "SYN001");
  EXPECT_EQ(a.problems[0].label, true);
  EXPECT_EQ(a.problems[1].label, false);
  for (const auto& p : a.problems) {
    ASSERT_EQ(p.known.size(), 1u);
    EXPECT_EQ(tokenize(p.unknown.text).size(), 500u);
  }
  EXPECT_EQ(gen.make_dataset(100, 500, 9), a);
  EXPECT_FALSE(gen.make_dataset(100, 500, 10) == a);
  EXPECT_EQ(gen.make_dataset(4, 50, 9, "x", 3).problems[2].known.size(), 3u);
}

TEST(Synth, LabelsFollowMarkerSets) {
  const StyleGenerator gen;
  const std::set<std::string> archaic(gen.markers(Style::archaic).begin(), gen.markers(Style::archaic).end());
  const auto style_of = [&](const std::string& text) {
    const auto tokens = tokenize(text);
    return count_in(tokens, archaic) > 0;
  };
  for (const auto& p : gen.make_dataset(40, 300, 4).problems) {
    EXPECT_EQ(style_of(p.known[0].text) == style_of(p.unknown.text), *p.label) << p.id;
  }
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig cfg;
  cfg.max_sentence = 2;
  cfg.min_sentence = 5;
  EXPECT_THROW(StyleGenerator{cfg}, ConfigError);
  EXPECT_THROW(StyleGenerator().make_dataset(2, 10, 1, "x", 0), ConfigError);
}
