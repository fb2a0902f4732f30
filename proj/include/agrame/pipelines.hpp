#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "agrame/bench.hpp"
#include "agrame/toy.hpp"

// File-to-file pipelines behind the command-line tool. Every pipeline writes
// its outputs plus "<out>.run.json" holding the resolved configuration, and
// returns a JSON summary. Identical inputs give byte-identical outputs.
namespace agrame {

const char* library_version() noexcept;

struct IndexOptions {
  std::filesystem::path passages;  // JSON-lines input
  // "toy-encode" or the path of an .agrv file holding the token rows.
  std::string embeddings = "toy-encode";
  std::filesystem::path out;  // prefix; writes <out>.agrv
  std::string kind = "passages";  // or "queries"
  std::filesystem::path encoder;  // toy checkpoint; empty for a seeded random encoder
  std::size_t vocab = 4096;
  std::size_t input_dim = 16;
  std::size_t dim = 16;
  std::uint64_t seed = 1;
  std::string markers = "both";  // queries: "both", "passage" or "sentence"
  std::size_t expect_dim = 0;    // 0 accepts any
};
std::string run_index(const IndexOptions& opts);

struct RankOptions {
  std::filesystem::path index;
  std::filesystem::path queries;
  std::string level = "passage";
  double alpha = 1.0;
  std::size_t top_k = 10;
  bool breakdown = false;
  std::filesystem::path candidates;  // optional per-query candidate ids
  std::filesystem::path out;         // JSON-lines output
};
std::string run_rank(const RankOptions& opts);

struct TrainToyOptions {
  std::filesystem::path corpus;
  std::string mode = "multi_granular";
  std::string marker_mode = "A1";
  std::size_t epochs = 100;
  double learning_rate = 0.5;
  std::uint64_t seed = 1;
  std::size_t input_dim = 16;
  std::size_t dim = 16;
  double marker_scale = 0.1;
  double temperature = 1.0;
  double alpha = 1.0;
  std::uint64_t teacher_seed = 0;
  std::filesystem::path out;  // prefix; <out>.metrics.csv and <out>.encoder.agre
};
std::string run_train_toy(const TrainToyOptions& opts);

// passage_only and multi_granular A1/A2/A3 from one seed; writes
// <out>.ablation.csv. mode and marker_mode are ignored.
std::string run_ablate(const TrainToyOptions& opts);

struct CiteOptions {
  std::filesystem::path answers;             // JSON-lines answers with proposition masks
  std::filesystem::path answer_encodings;    // query-kind .agrv, ids "<qid>/<sentence>"
  std::filesystem::path isolated_encodings;  // ids "<qid>/<sentence>/<proposition>"
  std::filesystem::path contexts;            // passage index
  std::filesystem::path context_map;         // optional "<qid> <ctx id>..." lines
  std::string variant = "propcite";
  double margin = 1.0;
  std::filesystem::path out;
};
std::string run_cite(const CiteOptions& opts);

struct EvalOptions {
  std::filesystem::path rankings;
  std::filesystem::path citations;
  std::filesystem::path qrels;
  std::filesystem::path contexts;  // passage index, for citation texts
  std::filesystem::path report;    // optional CSV
  std::string run = "run";
};
// Summary carries the metrics and a "table" string.
std::string run_eval(const EvalOptions& opts);

struct SynthCorpusOptions {
  SynthCorpusConfig config;
  std::filesystem::path out;
};
std::string run_synth_corpus(const SynthCorpusOptions& opts);

struct SynthCitationsOptions {
  SynthCitationConfig config;
  std::filesystem::path out;
};
std::string run_synth_citations(const SynthCitationsOptions& opts);

// FNV-1a of the lowercased word, modulo vocab.
std::uint32_t hash_token(const std::string& word, std::size_t vocab);

}  // namespace agrame
