#include "doctest.h"

#include <cmath>
#include <functional>

#include "agrame/core.hpp"
#include "agrame/error.hpp"
#include "oracle.hpp"

using namespace agrame;

namespace {

PassageRecord four_tokens(std::vector<SentenceSpan> spans) {
  PassageRecord p;
  p.id = "p";
  p.embeddings = EmbeddingMatrix(4, 2, {1, 0, 0, 1, 1, 0, 0, 1});
  p.sentences = std::move(spans);
  return p;
}

EmbeddingMatrix four_by_two() {
  return EmbeddingMatrix(4, 2, {1, 0, 0.6, 0.8, 0, 1, 0.8, 0.6});
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an agrame::Error");
  return ErrorKind::Diverged;
}

}  // namespace

TEST_CASE("embedding matrix rejects bad rows") {
  CHECK_NOTHROW(EmbeddingMatrix(1, 2, {0.6, 0.8}));
  CHECK(kind_of([] { EmbeddingMatrix(1, 2, {1, 1}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { EmbeddingMatrix(2, 2, {1, 0}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { EmbeddingMatrix(0, 2, {}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { EmbeddingMatrix(1, 1, {std::nan("")}); }) == ErrorKind::InvalidArgument);

  auto m = EmbeddingMatrix::normalized(2, 2, {3, 4, 0, 2});
  CHECK(m.row(0)[0] == doctest::Approx(0.6));
  CHECK(m.row(1)[1] == 1.0);
  CHECK(kind_of([] { EmbeddingMatrix::normalized(1, 2, {0, 0}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("validate_passage") {
  SUBCASE("well-formed spans give an empty report") {
    CHECK(validate_passage(four_tokens({{0, 2}, {2, 4}})).empty());
  }
  SUBCASE("overlap") {
    auto v = validate_passage(four_tokens({{0, 2}, {1, 4}}));
    REQUIRE(v.size() == 1);
    CHECK(v[0].message == "overlapping spans at index 1");
    CHECK(v[0].index == 1);
  }
  SUBCASE("mask out of range") {
    auto p = four_tokens({{0, 4}});
    p.propositions = {{0, {1, 7}}};
    auto v = validate_passage(p);
    REQUIRE(v.size() == 1);
    CHECK(v[0].message == "token index out of range");
  }
  SUBCASE("gap, empty span, uncovered tail") {
    auto v = validate_passage(four_tokens({{0, 1}, {2, 3}}));
    REQUIRE(v.size() == 2);
    CHECK(v[0].message == "gap before span at index 1");
    CHECK(v[1].message == "spans do not cover all tokens");
    CHECK(validate_passage(four_tokens({{0, 0}, {0, 4}})).front().message == "empty span at index 0");
    CHECK(validate_passage(four_tokens({})).front().message == "no sentence spans");
  }
  SUBCASE("masks must stay in their sentence and increase") {
    auto p = four_tokens({{0, 2}, {2, 4}});
    p.propositions = {{0, {1, 2}}, {1, {3, 2}}, {2, {0}}, {1, {}}};
    auto v = validate_passage(p);
    REQUIRE(v.size() == 4);
    CHECK(v[0].message == "token outside sentence span");
    CHECK(v[1].message == "proposition tokens not strictly increasing");
    CHECK(v[2].message == "proposition references missing sentence 2");
    CHECK(v[3].message == "empty proposition");
  }
  SUBCASE("sentence texts must match spans") {
    auto p = four_tokens({{0, 2}, {2, 4}});
    p.sentence_texts = {"only one"};
    CHECK(validate_passage(p).front().field == "sentence_texts");
  }
}

TEST_CASE("span_slice") {
  auto m = four_by_two();
  auto prefix = span_slice(m, SentenceSpan{0, 2});
  REQUIRE(prefix.size() == 2);
  CHECK(prefix.source_index(0) == 0);
  CHECK(prefix.source_index(1) == 1);
  CHECK(prefix.row(1)[1] == 0.8);

  auto picked = span_slice(m, PropositionMask{0, {1, 3}});
  REQUIRE(picked.size() == 2);
  CHECK(picked.source_index(0) == 1);
  CHECK(picked.source_index(1) == 3);
  CHECK(picked.to_matrix() == EmbeddingMatrix(2, 2, {0.6, 0.8, 0.8, 0.6}));

  try {
    (void)span_slice(m, SentenceSpan{2, 6});
    FAIL("expected invalid span");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidSpan);
    CHECK(std::string(e.what()) == "invalid span");
  }
  CHECK_THROWS_AS((void)span_slice(m, SentenceSpan{1, 1}), Error);
  CHECK_THROWS_AS((void)span_slice(m, PropositionMask{0, {}}), Error);
  CHECK_THROWS_AS((void)span_slice(m, PropositionMask{0, {3, 1}}), Error);
  CHECK_THROWS_AS((void)span_slice(m, PropositionMask{0, {4}}), Error);
}

TEST_CASE("ranking config validation") {
  RankingConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.citation_margin = -0.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.temperature = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("random spans helper partitions the passage") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    std::size_t tokens = 1 + i % 16;
    auto spans = oracle::random_spans(rng, tokens, 5);
    PassageRecord p;
    p.embeddings = oracle::random_unit(rng, tokens, 3);
    p.sentences = spans;
    CHECK(validate_passage(p).empty());
  }
}
