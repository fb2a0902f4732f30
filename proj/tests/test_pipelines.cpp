#include "doctest.h"

#include <filesystem>

#include "agrame/error.hpp"
#include "agrame/formats.hpp"
#include "agrame/pipelines.hpp"
#include "agrame/storage.hpp"
#include "json.hpp"
#include "oracle.hpp"

using namespace agrame;
using nlohmann::json;

namespace {

json parse(const std::string& s) { return json::parse(s); }

std::vector<json> json_lines(const std::filesystem::path& p) {
  std::vector<json> out;
  std::istringstream in(oracle::slurp(p));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Diverged;
}

// Fixture passage and queries as external .agrv rows plus the JSONL metadata.
struct FixtureFiles {
  std::filesystem::path passages_jsonl, passage_rows, queries_jsonl, query_rows;
};

FixtureFiles write_fixture(const oracle::TempDir& dir) {
  FixtureFiles f{dir / "p.jsonl", dir / "rows.agrv", dir / "q.jsonl", dir / "qrows.agrv"};
  auto p = oracle::fixture_passage();
  write_index(std::span<const PassageRecord>(&p, 1), f.passage_rows);
  std::vector<QueryEncoding> qs{oracle::fixture_query(Marker::Passage), oracle::fixture_query(Marker::Sentence)};
  write_index(qs, f.query_rows);
  oracle::spit(f.passages_jsonl,
               R"({"id":"P","sentences":["Alpha one.","Beta two."],"spans":[[0,2],[2,4]],)"
               R"("propositions":[{"sentence":0,"tokens":[1]}]})"
               "\n");
  oracle::spit(f.queries_jsonl, R"({"id":"Q"})"
                                "\n");
  return f;
}

}  // namespace

TEST_CASE("corpus file round trip") {
  oracle::TempDir dir;
  SynthCorpusConfig cfg;
  cfg.queries = 4;
  auto c = synth_corpus(cfg);
  write_corpus(c, dir / "c.jsonl");
  auto back = read_corpus(dir / "c.jsonl");
  CHECK(back.vocab == c.vocab);
  REQUIRE(back.examples.size() == 4);
  CHECK(back.examples[2].passages[5].tokens == c.examples[2].passages[5].tokens);
  CHECK(back.examples[2].passages[5].sentences == c.examples[2].passages[5].sentences);
  CHECK(back.examples[1].teacher.sentence_scores == c.examples[1].teacher.sentence_scores);
  write_corpus(back, dir / "d.jsonl");
  CHECK(oracle::slurp(dir / "c.jsonl") == oracle::slurp(dir / "d.jsonl"));

  // strip the teacher from every line; it is then rebuilt from the answer
  std::string stripped;
  for (auto j : json_lines(dir / "c.jsonl")) {
    j.erase("teacher");
    stripped += j.dump() + "\n";
  }
  oracle::spit(dir / "n.jsonl", stripped);
  auto synth = read_corpus(dir / "n.jsonl", 4);
  for (const auto& ex : synth.examples)
    for (std::size_t i = 0; i < ex.passages.size(); ++i) {
      auto labels = synth_sentence_labels(ex.passages[i].sentence_texts, ex.answer);
      for (std::size_t j = 0; j < labels.size(); ++j)
        CHECK(std::abs(ex.teacher.sentence_scores[i][j] - 5.0 * labels[j]) <= 0.1);
    }
  CHECK(read_corpus(dir / "n.jsonl", 4).examples[0].teacher.passage_scores == synth.examples[0].teacher.passage_scores);

  oracle::spit(dir / "bad.jsonl", "{\"query_id\":\n");
  CHECK_THROWS_AS(read_corpus(dir / "bad.jsonl"), Error);
}

TEST_CASE("answers, id lists and rankings files") {
  oracle::TempDir dir;
  std::vector<AnswerSpec> a{{"q1", {{"A and B.", {{0, 1}, {2}}}, {"C.", {}}}}};
  write_answers(a, dir / "a.jsonl");
  auto back = read_answers(dir / "a.jsonl");
  REQUIRE(back.size() == 1);
  CHECK(back[0].sentences[0].propositions == a[0].sentences[0].propositions);
  CHECK(back[0].sentences[1].text == "C.");

  oracle::spit(dir / "ids.tsv", "# comment\nq1 a b\tc\n\nq2 d\n");
  auto ids = read_id_lists(dir / "ids.tsv");
  REQUIRE(ids.size() == 2);
  CHECK(ids[0].second == std::vector<std::string>{"a", "b", "c"});

  ScoredUnit u{"P", {UnitKind::Sentence, 1}, 3.5, 1.5, std::nullopt};
  std::string text = "Beta.";
  oracle::spit(dir / "r.jsonl", encode_scored_unit("q", 2, u, &text) + "\n" + encode_scored_unit("q", 1, u, nullptr) + "\n");
  auto r = read_rankings(dir / "r.jsonl");
  CHECK(r.level == "sentence");
  REQUIRE(r.queries.size() == 1);
  CHECK(r.queries[0].unit_texts == std::vector<std::string>{"", "Beta."});

  ScoredUnit pu{"P", {UnitKind::Passage, 0}, 1.0, 1.0, std::nullopt};
  oracle::spit(dir / "m.jsonl", encode_scored_unit("q", 1, u, nullptr) + "\n" + encode_scored_unit("q", 2, pu, nullptr) + "\n");
  CHECK(kind_of([&] { read_rankings(dir / "m.jsonl"); }) == ErrorKind::Data);
}

TEST_CASE("index and rank the reference fixture from external rows") {
  oracle::TempDir dir;
  auto f = write_fixture(dir);

  IndexOptions ip;
  ip.passages = f.passages_jsonl;
  ip.embeddings = f.passage_rows.string();
  ip.out = dir / "idx";
  auto s = parse(run_index(ip));
  CHECK(s["records"] == 1);
  CHECK(s["dim"] == 2);
  IndexOptions iq = ip;
  iq.kind = "queries";
  iq.passages = f.queries_jsonl;
  iq.embeddings = f.query_rows.string();
  iq.out = dir / "qidx";
  run_index(iq);

  auto idx = read_passages(dir / "idx.agrv");
  REQUIRE(idx.records.size() == 1);
  CHECK(idx.records[0].sentence_texts == std::vector<std::string>{"Alpha one.", "Beta two."});
  CHECK(idx.records[0].propositions.size() == 1);

  RankOptions ro;
  ro.index = dir / "idx.agrv";
  ro.queries = dir / "qidx.agrv";
  ro.level = "sentence";
  ro.breakdown = true;
  ro.out = dir / "sent.jsonl";
  auto rs = parse(run_rank(ro));
  CHECK(rs["lines"] == 2);
  auto lines = json_lines(ro.out);
  REQUIRE(lines.size() == 2);
  // both sentences score 1.8 raw, plus the passage score 2.0; the tie keeps sentence order
  CHECK(lines[0]["unit"] == "sentence:0");
  CHECK(lines[1]["unit"] == "sentence:1");
  CHECK(std::abs(lines[0]["raw_score"].get<double>() - 1.8) <= 1e-6);
  CHECK(std::abs(lines[0]["score"].get<double>() - 3.8) <= 1e-6);
  CHECK(lines[0]["text"] == "Alpha one.");
  CHECK(lines[1]["per_token_argmax"] == json::array({3, 2}));

  auto run = parse(oracle::slurp(dir / "sent.jsonl.run.json"));
  std::vector<std::string> keys;
  for (auto it = run.begin(); it != run.end(); ++it) keys.push_back(it.key());
  std::sort(keys.begin(), keys.end());
  CHECK(keys == std::vector<std::string>{"command", "config", "inputs", "outputs", "seed", "version"});
  CHECK(run["command"] == "rank");
  CHECK(run["seed"].is_null());

  ro.level = "proposition";
  ro.out = dir / "prop.jsonl";
  run_rank(ro);
  auto prop = json_lines(ro.out);
  REQUIRE(prop.size() == 1);
  CHECK(std::abs(prop[0]["score"].get<double>() - 1.4) <= 1e-6);

  ro.level = "passage";
  ro.top_k = 0;
  ro.out = dir / "none.jsonl";
  CHECK(parse(run_rank(ro))["lines"] == 0);
  CHECK(oracle::slurp(ro.out).empty());

  SUBCASE("dimension checks") {
    ip.expect_dim = 3;
    CHECK(kind_of([&] { run_index(ip); }) == ErrorKind::DimMismatch);
    std::vector<QueryEncoding> wide{{"Q", Marker::Passage, EmbeddingMatrix(1, 3, {1, 0, 0})},
                                    {"Q", Marker::Sentence, EmbeddingMatrix(1, 3, {1, 0, 0})}};
    write_index(wide, dir / "wide.agrv");
    RankOptions bad = ro;
    bad.queries = dir / "wide.agrv";
    bad.out = dir / "bad.jsonl";
    CHECK(kind_of([&] { run_rank(bad); }) == ErrorKind::DimMismatch);
  }
  SUBCASE("bad magic") {
    auto bytes = oracle::slurp(dir / "idx.agrv");
    oracle::spit(dir / "idx.agrv", "NOPE" + bytes.substr(4));
    CHECK(kind_of([&] { run_rank(ro); }) == ErrorKind::Format);
  }
  SUBCASE("bad options") {
    RankOptions bad = ro;
    bad.level = "word";
    CHECK(kind_of([&] { run_rank(bad); }) == ErrorKind::InvalidArgument);
    IndexOptions missing = ip;
    missing.passages = dir / "absent.jsonl";
    CHECK(kind_of([&] { run_index(missing); }) == ErrorKind::Io);
  }
}

TEST_CASE("synthetic corpus through training, indexing, ranking and eval") {
  oracle::TempDir dir;
  SynthCorpusOptions so;
  so.config.queries = 10;
  so.config.passages = 4;
  so.config.sentences = 3;
  so.config.filler_vocab = 40;
  so.out = dir / "syn";
  auto sum = parse(run_synth_corpus(so));
  CHECK(sum["examples"] == 10);
  for (auto suffix : {".corpus.jsonl", ".passages.jsonl", ".queries.jsonl", ".qrels.tsv", ".candidates.tsv"})
    CHECK(std::filesystem::exists(dir / (std::string("syn") + suffix)));
  CHECK(parse(oracle::slurp(dir / "syn.run.json"))["seed"] == 7);

  TrainToyOptions to;
  to.corpus = dir / "syn.corpus.jsonl";
  to.epochs = 5;
  to.input_dim = 8;
  to.dim = 8;
  to.out = dir / "t1";
  auto t1 = parse(run_train_toy(to));
  CHECK(t1["initial"]["epoch"] == 0);
  CHECK(t1["final"]["epoch"] == 5);
  to.out = dir / "t2";
  run_train_toy(to);
  CHECK(oracle::slurp(dir / "t1.metrics.csv") == oracle::slurp(dir / "t2.metrics.csv"));
  CHECK(oracle::slurp(dir / "t1.encoder.agre") == oracle::slurp(dir / "t2.encoder.agre"));

  auto zero = to;
  zero.epochs = 0;
  zero.out = dir / "t0";
  run_train_toy(zero);
  auto csv = oracle::slurp(dir / "t0.metrics.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

  IndexOptions ip;
  ip.passages = dir / "syn.passages.jsonl";
  ip.encoder = dir / "t1.encoder.agre";
  ip.out = dir / "pidx";
  run_index(ip);
  IndexOptions iq = ip;
  iq.kind = "queries";
  iq.passages = dir / "syn.queries.jsonl";
  iq.out = dir / "qidx";
  run_index(iq);
  CHECK(read_queries(dir / "qidx.agrv").records.size() == 20);

  RankOptions ro;
  ro.index = dir / "pidx.agrv";
  ro.queries = dir / "qidx.agrv";
  ro.level = "sentence";
  ro.candidates = dir / "syn.candidates.tsv";
  ro.out = dir / "r1.jsonl";
  run_rank(ro);
  ro.out = dir / "r2.jsonl";
  run_rank(ro);
  CHECK(oracle::slurp(dir / "r1.jsonl") == oracle::slurp(dir / "r2.jsonl"));
  // 10 queries x 4 candidates x 3 sentences, capped at top_k 10 per query
  CHECK(json_lines(dir / "r1.jsonl").size() == 100);

  EvalOptions eo;
  eo.rankings = dir / "r1.jsonl";
  eo.qrels = dir / "syn.qrels.tsv";
  eo.report = dir / "report.csv";
  auto ev = parse(run_eval(eo));
  CHECK(ev["level"] == "sentence");
  CHECK(ev["p_at_1"].get<double>() >= 0.0);
  CHECK(ev["r_at_5"].get<double>() >= ev["p_at_1"].get<double>());
  CHECK(oracle::slurp(eo.report).rfind("run,level,queries,p_at_1,r_at_5\n", 0) == 0);

  TrainToyOptions ab = to;
  ab.epochs = 2;
  ab.out = dir / "ab";
  run_ablate(ab);
  auto ablation = oracle::slurp(dir / "ab.ablation.csv");
  for (auto name : {"passage_only", "A1", "A2", "A3"}) CHECK(ablation.find(name) != std::string::npos);
}

TEST_CASE("synthetic citations through cite and eval") {
  oracle::TempDir dir;
  SynthCitationsOptions sc;
  sc.config.queries = 20;
  sc.out = dir / "cb";
  run_synth_citations(sc);

  CiteOptions co;
  co.answers = dir / "cb.answers.jsonl";
  co.answer_encodings = dir / "cb.answers.agrv";
  co.isolated_encodings = dir / "cb.isolated.agrv";
  co.contexts = dir / "cb.contexts.agrv";
  co.context_map = dir / "cb.context_map.tsv";
  co.out = dir / "cited.jsonl";

  std::vector<double> precision, recall;
  for (double m : {0.0, 1.0}) {
    co.margin = m;
    run_cite(co);
    EvalOptions eo;
    eo.citations = co.out;
    eo.contexts = co.contexts;
    auto ev = parse(run_eval(eo));
    CHECK(ev["answers"] == 20);
    precision.push_back(ev["precision"].get<double>());
    recall.push_back(ev["recall"].get<double>());
  }
  CHECK(recall[1] <= recall[0]);

  auto first = json_lines(co.out)[0];
  CHECK(first["variant"] == "propcite");
  CHECK(first["contexts"].size() == 5);
  auto entries = read_citations(co.out);
  CHECK(entries.size() == 20);

  for (auto v : {"prop_isolated_encoding", "sentence_top1", "sentence_top2"}) {
    co.variant = v;
    co.out = dir / (std::string(v) + ".jsonl");
    CHECK_NOTHROW(run_cite(co));
  }
  co.variant = "prop_isolated_encoding";
  co.isolated_encodings.clear();
  CHECK_THROWS_AS(run_cite(co), Error);
}

TEST_CASE("hash tokens") {
  CHECK(hash_token("Paris", 1000) == hash_token("paris", 1000));
  CHECK(hash_token("paris", 1000) < 1000);
  CHECK(hash_token("paris", 1u << 30) != hash_token("london", 1u << 30));
}
