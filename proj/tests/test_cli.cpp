// Drives the installed command-line binary through the shell.
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "oracle.hpp"

#ifndef AGRAME_CLI_PATH
#error "AGRAME_CLI_PATH must name the agrame binary"
#endif

namespace {

int run(const std::string& args, const oracle::TempDir& dir) {
  std::string cmd = std::string("\"") + AGRAME_CLI_PATH + "\" " + args + " > \"" + (dir / "stdout").string() +
                    "\" 2> \"" + (dir / "stderr").string() + "\"";
  int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("usage errors exit 2") {
  oracle::TempDir dir;
  CHECK(run("--version", dir) == 0);
  CHECK(oracle::slurp(dir / "stdout").find("0.3.0") != std::string::npos);
  CHECK(run("", dir) == 2);
  CHECK(run("frobnicate", dir) == 2);
  CHECK(run("synth-corpus", dir) == 2);  // --out is required
  CHECK(run("synth-corpus --queries 3 --passages 1 --out " + q(dir / "x"), dir) == 2);
}

TEST_CASE("end to end through the binary") {
  oracle::TempDir dir;
  const std::string syn = " --queries 6 --passages 3 --sentences 2 --filler-vocab 30";
  REQUIRE(run("synth-corpus" + syn + " --out " + q(dir / "a"), dir) == 0);
  REQUIRE(run("synth-corpus" + syn + " --out " + q(dir / "b"), dir) == 0);
  CHECK(oracle::slurp(dir / "a.corpus.jsonl") == oracle::slurp(dir / "b.corpus.jsonl"));
  CHECK(oracle::slurp(dir / "a.passages.jsonl") == oracle::slurp(dir / "b.passages.jsonl"));

  REQUIRE(run("train-toy --corpus " + q(dir / "a.corpus.jsonl") + " --epochs 0 --dim 4 --input-dim 4 --out " +
                  q(dir / "t"),
              dir) == 0);
  auto csv = oracle::slurp(dir / "t.metrics.csv");
  CHECK(csv.rfind("epoch,l_psg,l_sent,total,sentence_agreement,passage_agreement\n0,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

  const std::string enc = " --encoder " + q(dir / "t.encoder.agre");
  REQUIRE(run("index --passages " + q(dir / "a.passages.jsonl") + enc + " --out " + q(dir / "p"), dir) == 0);
  REQUIRE(run("index --kind queries --passages " + q(dir / "a.queries.jsonl") + enc + " --out " + q(dir / "qq"),
              dir) == 0);
  const std::string pair = " --index " + q(dir / "p.agrv") + " --queries " + q(dir / "qq.agrv");
  REQUIRE(run("rank" + pair + " --level sentence --out " + q(dir / "r1.jsonl"), dir) == 0);
  REQUIRE(run("rank" + pair + " --level sentence --out " + q(dir / "r2.jsonl"), dir) == 0);
  CHECK(oracle::slurp(dir / "r1.jsonl") == oracle::slurp(dir / "r2.jsonl"));
  CHECK_FALSE(oracle::slurp(dir / "r1.jsonl").empty());

  REQUIRE(run("rank" + pair + " --top-k 0 --out " + q(dir / "r0.jsonl"), dir) == 0);
  CHECK(oracle::slurp(dir / "r0.jsonl").empty());

  REQUIRE(run("eval --rankings " + q(dir / "r1.jsonl") + " --qrels " + q(dir / "a.qrels.tsv"), dir) == 0);
  CHECK(oracle::slurp(dir / "stdout").rfind("run,level,queries,p_at_1,r_at_5\n", 0) == 0);

  CHECK(run("rank" + pair + " --level word --out " + q(dir / "rw.jsonl"), dir) == 2);
  CHECK(run("index --passages " + q(dir / "a.passages.jsonl") + enc + " --expect-dim 5 --out " + q(dir / "p5"),
            dir) == 3);
  CHECK(oracle::slurp(dir / "stderr").find("dim mismatch") != std::string::npos);

  auto bytes = oracle::slurp(dir / "p.agrv");
  oracle::spit(dir / "p.agrv", "ZZZZ" + bytes.substr(4));
  CHECK(run("rank" + pair + " --out " + q(dir / "rb.jsonl"), dir) == 3);
  CHECK(oracle::slurp(dir / "stderr").find("not an AGRV file") != std::string::npos);
}
