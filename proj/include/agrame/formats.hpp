#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "agrame/evalkit.hpp"
#include "agrame/propcite.hpp"
#include "agrame/scorer.hpp"
#include "agrame/toy.hpp"

namespace agrame {

// Training corpus, one example per line:
//   {"query_id","query_tokens":[..],"answer","passages":[{"id","tokens":[..],
//    "sentences":[[s,e],..],"sentence_texts":[..]}],
//    "teacher":{"passage_scores":[..],"sentence_scores":[[..],..]}}
// A missing "teacher" is synthesized from the answer with teacher_seed.
void write_corpus(const ToyCorpus& corpus, const std::filesystem::path& path);
ToyCorpus read_corpus(const std::filesystem::path& path, std::uint64_t teacher_seed = 0);

// Generated answers: {"query_id","sentences":[{"text","propositions":[[tok,..],..]}]}
struct AnswerSentenceSpec {
  std::string text;
  std::vector<std::vector<std::uint32_t>> propositions;
};
struct AnswerSpec {
  std::string query_id;
  std::vector<AnswerSentenceSpec> sentences;
};
std::vector<AnswerSpec> read_answers(const std::filesystem::path& path);
void write_answers(const std::vector<AnswerSpec>& answers, const std::filesystem::path& path);

// Ranking output: one ScoredUnit per line with query_id and 1-based rank.
std::string encode_scored_unit(const std::string& query_id, std::size_t rank, const ScoredUnit& unit,
                               const std::string* text);

struct RankingFile {
  std::string level;  // "passage", "sentence" or "proposition"
  std::vector<RankedQuery> queries;  // file order of first appearance
};
RankingFile read_rankings(const std::filesystem::path& path);

// Citation output: per answer, the rendered text plus the audit record.
std::string encode_citation(const CitationResult& result, const AnswerSpec& spec,
                            const std::vector<std::string>& context_ids, CiteVariant variant, double margin);

// Reads citation output back as (claims, cited indices, context ids).
struct CitationFileEntry {
  std::string query_id;
  std::vector<std::string> context_ids;
  std::vector<CitedSentence> sentences;
};
std::vector<CitationFileEntry> read_citations(const std::filesystem::path& path);

// Whitespace-separated: query_id then ids. Used for rerank candidate lists and
// per-query citation contexts.
std::vector<std::pair<std::string, std::vector<std::string>>> read_id_lists(const std::filesystem::path& path);

}  // namespace agrame
