#include "doctest.h"

#include "agrame/error.hpp"
#include "agrame/evalkit.hpp"
#include "agrame/text.hpp"

using namespace agrame;

namespace {

RankedQuery ranked(const std::string& qid, std::vector<std::string> texts) { return {qid, std::move(texts)}; }

std::vector<std::string> filler(std::size_t n) { return std::vector<std::string>(n, "nothing here"); }

}  // namespace

TEST_CASE("text normalization") {
  CHECK(normalize_text("  The\tEiffel \n Tower ") == "the eiffel tower");
  CHECK(contains_normalized("The  EIFFEL tower", "eiffel TOWER"));
  CHECK(word_tokens("Hello, world-42!") == std::vector<std::string>{"hello", "world", "42"});
}

TEST_CASE("hit") {
  std::vector<std::string> paris{"Paris"}, lower{"paris"}, london{"London"};
  CHECK(hit("The Eiffel Tower is in Paris", paris));
  CHECK(hit("The Eiffel Tower is in Paris", lower));
  CHECK_FALSE(hit("The Eiffel Tower is in Paris", london));
  std::vector<std::string> spaced{"eiffel   tower"};
  CHECK(hit("The Eiffel Tower is in Paris", spaced));
}

TEST_CASE("precision at 1 and recall at 5") {
  Qrels q{{"a", {"Paris"}}, {"b", {"Rome"}}};
  std::vector<RankedQuery> one{ranked("a", {"Paris is big", "x"})};
  CHECK(precision_at_1(one, q) == 1.0);

  std::vector<RankedQuery> two{ranked("a", {"Paris"}), ranked("b", {"Milan", "Rome"})};
  CHECK(precision_at_1(two, q) == 0.5);
  CHECK(recall_at_5(two, q) == 1.0);

  CHECK_THROWS_AS(precision_at_1(std::span<const RankedQuery>{}, q), Error);
  std::vector<RankedQuery> empty_rank{ranked("a", {})};
  CHECK_THROWS_AS(precision_at_1(empty_rank, q), Error);
  std::vector<RankedQuery> unknown{ranked("zzz", {"Paris"})};
  CHECK_THROWS_AS(recall_at_5(unknown, q), Error);

  auto at5 = filler(4);
  at5.push_back("Rome");
  auto at6 = filler(5);
  at6.push_back("Rome");
  std::vector<RankedQuery> five{ranked("b", at5)}, six{ranked("b", at6)};
  CHECK(recall_at_5(five, q) == 1.0);
  CHECK(recall_at_5(six, q) == 0.0);
  CHECK(recall_at_k(six, q, 6) == 1.0);

  std::vector<RankedQuery> all_first{ranked("a", {"Paris"}), ranked("b", {"Rome"})};
  CHECK(precision_at_1(all_first, q) == 1.0);
  CHECK(recall_at_5(all_first, q) == 1.0);

  // query order does not matter
  std::vector<RankedQuery> swapped{two[1], two[0]};
  CHECK(precision_at_1(swapped, q) == precision_at_1(two, q));
}

TEST_CASE("qrels parsing") {
  auto q = parse_qrels("# comment\nq1\tParis|City of Light\r\n\nq2\tRome\nq1\tLutetia\n");
  REQUIRE(q.size() == 2);
  CHECK(q["q1"] == std::vector<std::string>{"Paris", "City of Light", "Lutetia"});
  CHECK_THROWS_AS(parse_qrels("q1 Paris\n"), Error);
  CHECK_THROWS_AS(parse_qrels("q1\t | \n"), Error);
}

TEST_CASE("token coverage oracle") {
  TokenCoverageOracle o;
  std::vector<std::string> prem{"Paris is the capital of France."};
  CHECK(o.judge(prem, "The capital of France is Paris."));
  CHECK_FALSE(o.judge(prem, "Paris is big."));
  CHECK_FALSE(o.judge(std::span<const std::string>{}, "Paris."));
  std::vector<std::string> split{"Paris is big.", "France has a capital."};
  CHECK(o.judge(split, "The capital of France is big Paris."));
}

TEST_CASE("citation precision and recall") {
  TokenCoverageOracle o;
  const std::vector<std::string> ctx{"The tower is in Paris.", "Bananas are yellow.", "The river is long."};

  SUBCASE("exact supporting citations") {
    std::vector<CitedAnswer> a{{"q", ctx, {{"The tower is in Paris.", {0}}, {"Bananas are yellow.", {1}}}}};
    auto s = citation_scores(a, o);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.precision_defined);
  }
  SUBCASE("no citations") {
    std::vector<CitedAnswer> a{{"q", ctx, {{"The tower is in Paris.", {}}}}};
    auto s = citation_scores(a, o);
    CHECK(s.recall == 0.0);
    CHECK(s.precision == 0.0);
    CHECK_FALSE(s.precision_defined);
  }
  SUBCASE("one correct and one irrelevant citation") {
    // citation 1 alone entails; citation 2 alone does not and the rest still entails
    std::vector<CitedAnswer> a{{"q", ctx, {{"The tower is in Paris.", {0, 1}}}}};
    auto s = citation_scores(a, o);
    CHECK(s.precision == 0.5);
    CHECK(s.recall == 1.0);
    CHECK(s.citations == 2);
  }
  SUBCASE("two partial citations are both needed") {
    const std::vector<std::string> parts{"The tower stands tall.", "It is in Paris."};
    std::vector<CitedAnswer> a{{"q", parts, {{"The tower is in Paris.", {0, 1}}}}};
    auto s = citation_scores(a, o);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
  }
  SUBCASE("unsupported sentence earns nothing") {
    std::vector<CitedAnswer> a{{"q", ctx, {{"The moon is cheese.", {2}}}}};
    auto s = citation_scores(a, o);
    CHECK(s.precision == 0.0);
    CHECK(s.recall == 0.0);
    CHECK(s.precision_defined);
  }
  SUBCASE("citation index outside the contexts") {
    std::vector<CitedAnswer> a{{"q", ctx, {{"x", {3}}}}};
    CHECK_THROWS_AS(citation_scores(a, o), Error);
  }
}

TEST_CASE("reports") {
  std::vector<MetricRow> rows{{"base", "sentence", 50, 0.76, 1.0, true}};
  CHECK(ranking_report_csv(rows) == "run,level,queries,p_at_1,r_at_5\nbase,sentence,50,0.760000,1.000000\n");
  auto t = ranking_report_table(rows);
  CHECK(t.find("76.0") != std::string::npos);
  CHECK(t.find("100.0") != std::string::npos);

  std::vector<MetricRow> cite{{"m1", "citation", 3, 0.0, 0.0, false}};
  CHECK(citation_report_csv(cite) ==
        "run,level,queries,precision,recall,precision_defined\nm1,citation,3,0.000000,0.000000,false\n");
  auto ct = citation_report_table(cite);
  CHECK(ct.find("0.0*") != std::string::npos);
  CHECK(ct.find("precision is undefined") != std::string::npos);
}
