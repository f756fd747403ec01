#include <gtest/gtest.h>

#include <numeric>

#include "erisk/annotate.hpp"
#include "erisk/error.hpp"

using erisk::ConfigError;
using erisk::ValidationError;
using erisk::DomainError;
using namespace erisk::annotate;

TEST(Annotate, DogsBark) {
  const auto d = annotate("Dogs bark.");
  ASSERT_EQ(d.tokens.size(), 3u);
  EXPECT_EQ(d.sentences.size(), 1u);
  EXPECT_EQ(d.punctuation_count, 1u);
  EXPECT_EQ(d.word_count(), 2u);
  EXPECT_EQ(d.tokens[0].lemma, "dogs");
  EXPECT_EQ(d.tokens[2].pos, Pos::PUNCT);
}

TEST(Annotate, Empty) {
  const auto d = annotate("");
  EXPECT_TRUE(d.tokens.empty());
  EXPECT_TRUE(d.sentences.empty());
  EXPECT_EQ(d.punctuation_count, 0u);
}

TEST(Annotate, Syllables) {
  EXPECT_EQ(count_syllables("bark"), 1);
  EXPECT_EQ(count_syllables("banana"), 3);
  EXPECT_EQ(count_syllables("rhythm"), 1);
  EXPECT_EQ(count_syllables("xyz"), 1);
  EXPECT_EQ(count_syllables("brr"), 1);
  EXPECT_EQ(count_syllables("canción"), 2);
}

TEST(Annotate, SentenceSplitting) {
  const auto d = annotate("One two. Three four! Five six?! seven");
  ASSERT_EQ(d.sentences.size(), 4u);
  EXPECT_EQ(d.sentences[0].begin, 0u);
  for (std::size_t i = 1; i < d.sentences.size(); ++i) EXPECT_EQ(d.sentences[i].begin, d.sentences[i - 1].end);
  EXPECT_EQ(d.sentences.back().end, d.tokens.size());
  EXPECT_EQ(d.dep_tree_height.size(), d.sentences.size());
  EXPECT_TRUE(d.synthetic_dependency);
}

TEST(Annotate, ApostrophesStayInsideWords) {
  const auto d = annotate("I can't stop");
  ASSERT_EQ(d.tokens.size(), 3u);
  EXPECT_EQ(d.tokens[1].surface, "can't");
}

TEST(Annotate, ClosedClassPos) {
  const auto d = annotate("the cat and 42 dogs");
  EXPECT_EQ(d.tokens[0].pos, Pos::DET);
  EXPECT_EQ(d.tokens[1].pos, Pos::NOUN);
  EXPECT_EQ(d.tokens[2].pos, Pos::CCONJ);
  EXPECT_EQ(d.tokens[3].pos, Pos::NUM);
}

TEST(Annotate, UnknownProvider) { EXPECT_THROW(annotate("x", "spacy-xl"), ConfigError); }

TEST(Annotate, RegistryAcceptsCustomProviders) {
  class Fixed final : public Annotator {
   public:
    AnnotatedDoc annotate(std::string_view) const override {
      AnnotatedDoc d;
      d.tokens.push_back({"x", "x", Pos::X, true, 1, 1});
      d.sentences.push_back({0, 1});
      d.dep_tree_height.push_back(3);
      d.synthetic_dependency = false;
      return d;
    }
  };
  AnnotatorRegistry::global().add("fixed-test", std::make_shared<Fixed>());
  const auto d = annotate("anything", "fixed-test");
  EXPECT_EQ(d.dep_tree_height[0], 3);
}

TEST(Annotate, PosNamesRoundTrip) {
  for (std::size_t i = 0; i < kPosCount; ++i) {
    const auto p = static_cast<Pos>(i);
    EXPECT_EQ(pos_from_name(pos_name(p)), p);
  }
  EXPECT_EQ(pos_from_name("WEIRD"), Pos::OTHER);
}

// Properties over a handful of varied inputs.
class AnnotateProperties : public ::testing::TestWithParam<std::string> {};

TEST_P(AnnotateProperties, Invariants) {
  const auto& text = GetParam();
  const auto d = annotate(text);
  const auto again = annotate(text);
  ASSERT_EQ(d.tokens.size(), again.tokens.size());
  for (std::size_t i = 0; i < d.tokens.size(); ++i) EXPECT_EQ(d.tokens[i].surface, again.tokens[i].surface);

  std::size_t letters = 0;
  for (const auto& t : d.tokens) {
    letters += static_cast<std::size_t>(t.letters);
    if (t.is_word) EXPECT_GE(t.syllables, 1) << t.surface;
    EXPECT_LT(static_cast<std::size_t>(t.pos), kPosCount);
  }
  EXPECT_LE(letters, codepoint_length(text));

  std::size_t covered = 0;
  for (const auto& s : d.sentences) {
    EXPECT_EQ(s.begin, covered);
    EXPECT_LT(s.begin, s.end);
    covered = s.end;
  }
  EXPECT_EQ(covered, d.tokens.size());
}

INSTANTIATE_TEST_SUITE_P(Texts, AnnotateProperties,
                         ::testing::Values("Dogs bark.", "", "   ", "...", "¿Qué tal? Muy bien, gracias.",
                                           "visit https://x.y/z now!!! ok", "naïve café — über 100% 😀 done",
                                           "no terminator at all", "a.b.c", "Mr. Smith's dog's bone."));
