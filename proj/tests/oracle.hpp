#pragma once

// Reference implementations written without touching the library's scoring
// or loss code. Everything is plain nested loops over doubles.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "agrame/core.hpp"
#include "agrame/losses.hpp"
#include "agrame/toy.hpp"

namespace oracle {

using Rows = std::vector<std::vector<double>>;

Rows rows_of(const agrame::EmbeddingMatrix& m);

// sum over q of max over the picked rows of p
double maxsim(const Rows& q, const Rows& p, const std::vector<std::size_t>& pick);
double maxsim(const Rows& q, const Rows& p);
std::vector<std::size_t> span_rows(const agrame::SentenceSpan& s);

// Per-query-token max over the picked rows.
std::vector<double> token_max(const Rows& q, const Rows& p, const std::vector<std::size_t>& pick);

struct LossParts {
  double l_psg = 0.0;
  double l_sent = 0.0;
  double total = 0.0;
};

struct OraclePassage {
  Rows rows;
  std::vector<agrame::SentenceSpan> spans;
};

LossParts loss_stack(const Rows& q_default, const Rows& q_prime, const std::vector<OraclePassage>& passages,
                     const std::vector<double>& teacher_passage,
                     const std::vector<std::vector<double>>& teacher_sentence);

// Seeded two passages of two sentences each, random unit rows (d=4) and
// random teacher scores.
struct LossFixture {
  agrame::QueryEncoding q_default;
  agrame::QueryEncoding q_prime;
  agrame::PassageSet set;
  agrame::TeacherScores teacher;
};
LossFixture loss_fixture(std::uint64_t seed);
LossParts loss_stack(const LossFixture& f);

// Toy example with the same 2 x 2 shape over a small vocabulary.
agrame::ToyExample toy_fixture(std::mt19937_64& rng, std::size_t vocab);

// Random unit rows with binary32-representable entries.
agrame::EmbeddingMatrix random_unit(std::mt19937_64& rng, std::size_t rows, std::size_t dim);

// Random partition of [0, tokens) into 1..max_sentences contiguous spans.
std::vector<agrame::SentenceSpan> random_spans(std::mt19937_64& rng, std::size_t tokens,
                                               std::size_t max_sentences);

// Valid passage records with random spans, masks and optional texts; ids
// unique within one call.
std::vector<agrame::PassageRecord> random_passages(std::mt19937_64& rng, std::size_t count, std::size_t dim);
// Query records, some ids carrying both markers.
std::vector<agrame::QueryEncoding> random_queries(std::mt19937_64& rng, std::size_t count, std::size_t dim);

// d=2 reference passage: q = {[1,0],[0,1]}, p = {[1,0],[.6,.8],[0,1],[.8,.6]},
// sentences [0,2) and [2,4), proposition {1} in sentence 0.
agrame::PassageRecord fixture_passage();
agrame::QueryEncoding fixture_query(agrame::Marker marker);

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& p);
void spit(const std::filesystem::path& p, const std::string& text);

}  // namespace oracle
