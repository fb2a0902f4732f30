#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agrame/core.hpp"

namespace agrame {

// One sentence of a generated answer, encoded on its own. Proposition masks
// index rows of the sentence encoding (sentence index 0).
struct AnswerSentence {
  std::string text;
  EmbeddingMatrix encoding;
  std::vector<PropositionMask> propositions;
  // Propositions encoded in isolation; only the prop_isolated variant reads
  // these. Empty or one per proposition.
  std::vector<EmbeddingMatrix> isolated_encodings;
};

struct GeneratedAnswer {
  std::string query_id;
  std::vector<AnswerSentence> sentences;
};

struct PropositionCitation {
  std::optional<std::size_t> chosen;
  double top_score = 0.0;
  // Absent when there is a single context.
  std::optional<double> runner_up;
};

struct SentenceCitation {
  std::vector<std::size_t> cited;  // 0-based, sorted, unique
  std::vector<PropositionCitation> propositions;
  // Scores of the whole-sentence query against each context (sentence
  // variants only).
  std::vector<double> context_scores;
  bool no_propositions = false;
};

struct CitationResult {
  std::string query_id;
  std::vector<SentenceCitation> sentences;
};

enum class CiteVariant : std::uint8_t {
  PropCite,             // proposition rows sliced from the sentence encoding
  PropIsolatedEncoding,  // proposition encoded on its own
  SentenceTop1,
  SentenceTop2,
};

const char* to_string(CiteVariant v) noexcept;
CiteVariant parse_cite_variant(const std::string& s);

// MaxSim of the query rows against every context's full token matrix.
std::vector<double> score_contexts(const RowView& query_rows, std::span<const PassageRecord* const> contexts);

// Threshold rule on precomputed context scores: the argmax (lowest index on
// ties), withheld when margin > 0 and top - runner_up < margin.
PropositionCitation choose_citation(std::span<const double> scores, double margin);

// Cites the argmax context unless margin > 0 and the gap between the top two
// scores is below margin. With one context the citation is always emitted.
PropositionCitation cite_proposition(const RowView& prop_rows, std::span<const PassageRecord* const> contexts,
                                     double margin);

// Per-proposition citations unioned into the sentence's citation set.
// Sentences without propositions get no citations.
SentenceCitation cite_sentence(const AnswerSentence& sentence, std::span<const PassageRecord* const> contexts,
                               const RankingConfig& cfg);

SentenceCitation cite_variant(const AnswerSentence& sentence, std::span<const PassageRecord* const> contexts,
                              CiteVariant variant, const RankingConfig& cfg);

CitationResult cite_answer(const GeneratedAnswer& answer, std::span<const PassageRecord* const> contexts,
                           CiteVariant variant, const RankingConfig& cfg);

// "text [1][3]." with citation markers before trailing sentence punctuation.
std::string render_cited(const std::string& text, std::span<const std::size_t> cited);

}  // namespace agrame
