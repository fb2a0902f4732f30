// Links only the shared library; everything goes through agrame.h.
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "agrame/agrame.h"

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("agrame-capi-" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string at(const std::string& name) const { return (dir / name).string(); }
};

void write_text(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::string take(char* s) {
  std::string out = s ? s : "";
  agrame_string_free(s);
  return out;
}

const float kQuery[] = {1, 0, 0, 1};

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(agrame_version()) == "0.3.0");
  CHECK(std::string(agrame_status_name(AGRAME_OK)) == "ok");
  CHECK(std::string(agrame_status_name(AGRAME_ERR_DIM_MISMATCH)) == "dim_mismatch");
  CHECK(std::string(agrame_status_name(static_cast<agrame_status>(77))) == "unknown");
}

TEST_CASE("maxsim and the citation rule") {
  const float unit[] = {1, 0, 0.6f, 0.8f};
  double s = 0;
  REQUIRE(agrame_maxsim(kQuery, 2, unit, 2, 2, &s) == AGRAME_OK);
  CHECK(std::abs(s - 1.8) <= 1e-6);
  const float bad[] = {2, 0};
  CHECK(agrame_maxsim(bad, 1, unit, 2, 2, &s) == AGRAME_ERR_INVALID_ARGUMENT);
  CHECK(std::string(agrame_last_error()).size() > 0);
  CHECK(agrame_maxsim(kQuery, 2, unit, 2, 2, nullptr) == AGRAME_ERR_INVALID_ARGUMENT);

  const double scores[] = {5.0, 4.5};
  int64_t chosen = 7;
  REQUIRE(agrame_choose_citation(scores, 2, 1.0, &chosen) == AGRAME_OK);
  CHECK(chosen == -1);
  REQUIRE(agrame_choose_citation(scores, 2, 0.25, &chosen) == AGRAME_OK);
  CHECK(chosen == 0);
  CHECK(agrame_choose_citation(scores, 0, 0.25, &chosen) != AGRAME_OK);
}

TEST_CASE("pipelines and index handles") {
  Scratch tmp;
  agrame_synth_corpus_options so;
  agrame_synth_corpus_options_init(&so);
  CHECK(so.queries == 50);
  so.queries = 5;
  so.passages = 3;
  so.sentences = 2;
  std::string prefix = tmp.at("syn");
  so.out = prefix.c_str();
  char* summary = nullptr;
  REQUIRE(agrame_run_synth_corpus(&so, &summary) == AGRAME_OK);
  CHECK(take(summary).find("\"examples\":5") != std::string::npos);

  agrame_index_options io;
  agrame_index_options_init(&io);
  CHECK(std::string(io.embeddings) == "toy-encode");
  std::string passages = prefix + ".passages.jsonl", idx = tmp.at("idx");
  io.passages = passages.c_str();
  io.out = idx.c_str();
  io.vocab = 1000;
  io.input_dim = 4;
  io.dim = 2;
  REQUIRE(agrame_run_index(&io, &summary) == AGRAME_OK);
  take(summary);

  agrame_index* h = nullptr;
  std::string agrv = idx + ".agrv";
  REQUIRE(agrame_index_open(agrv.c_str(), &h) == AGRAME_OK);
  uint32_t dim = 0, n = 0;
  REQUIRE(agrame_index_info(h, &dim, &n) == AGRAME_OK);
  CHECK(dim == 2);
  CHECK(n == 15);
  const char* id = nullptr;
  REQUIRE(agrame_index_record_id(h, 4, &id) == AGRAME_OK);
  uint32_t rec = 99;
  REQUIRE(agrame_index_find(h, id, &rec) == AGRAME_OK);
  CHECK(rec == 4);
  CHECK(agrame_index_find(h, "no-such-id", &rec) != AGRAME_OK);
  uint32_t sentences = 0;
  REQUIRE(agrame_index_sentence_count(h, 0, &sentences) == AGRAME_OK);
  CHECK(sentences == 2);

  double passage = 0, s0 = 0, s1 = 0, combined = 0;
  REQUIRE(agrame_score_passage(h, 0, kQuery, 2, 2, &passage) == AGRAME_OK);
  REQUIRE(agrame_score_sentence(h, 0, 0, kQuery, 2, 2, &s0) == AGRAME_OK);
  REQUIRE(agrame_score_sentence(h, 0, 1, kQuery, 2, 2, &s1) == AGRAME_OK);
  REQUIRE(agrame_score_combined(h, 0, 1, kQuery, kQuery, 2, 2, 1.0, &combined) == AGRAME_OK);
  CHECK(std::abs(combined - (s1 + passage)) <= 1e-12);
  CHECK(passage >= std::max(s0, s1) - 1e-12);
  CHECK(agrame_score_sentence(h, 0, 2, kQuery, 2, 2, &s0) == AGRAME_ERR_INVALID_ARGUMENT);
  const float wide[] = {1, 0, 0, 0};
  CHECK(agrame_score_passage(h, 0, wide, 1, 4, &passage) == AGRAME_ERR_DIM_MISMATCH);
  CHECK(agrame_score_passage(h, 99, kQuery, 2, 2, &passage) == AGRAME_ERR_INVALID_ARGUMENT);
  agrame_index_close(h);

  agrame_train_options to;
  agrame_train_options_init(&to);
  CHECK(to.epochs == 100);
  std::string corpus = prefix + ".corpus.jsonl", out = tmp.at("train");
  to.corpus = corpus.c_str();
  to.out = out.c_str();
  to.epochs = 0;
  REQUIRE(agrame_run_train_toy(&to, &summary) == AGRAME_OK);
  CHECK(take(summary).find("\"initial\"") != std::string::npos);

  agrame_rank_options ro;
  agrame_rank_options_init(&ro);
  CHECK(ro.top_k == 10);
  ro.index = agrv.c_str();
  ro.queries = agrv.c_str();  // wrong kind
  std::string rout = tmp.at("r.jsonl");
  ro.out = rout.c_str();
  CHECK(agrame_run_rank(&ro, &summary) != AGRAME_OK);
  CHECK(summary == nullptr);

  std::string bad = tmp.at("bad.agrv");
  write_text(bad, "XXXX0000000000000");
  CHECK(agrame_index_open(bad.c_str(), &h) == AGRAME_ERR_FORMAT);
  CHECK(std::string(agrame_last_error()) == "not an AGRV file");
  CHECK(agrame_index_open(tmp.at("absent.agrv").c_str(), &h) == AGRAME_ERR_IO);

  agrame_eval_options eo;
  agrame_eval_options_init(&eo);
  CHECK(agrame_run_eval(&eo, &summary) == AGRAME_ERR_INVALID_ARGUMENT);
}
