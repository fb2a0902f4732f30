#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agrame/core.hpp"

namespace agrame {

// Per-query-token maxima and the absolute passage-token index that attained
// each one. The sum of per_token_max is the unit's raw MaxSim score.
struct ScoreBreakdown {
  std::vector<double> per_token_max;
  std::vector<std::uint32_t> per_token_argmax;
};

enum class UnitKind : std::uint8_t { Passage, Sentence, Proposition };

struct UnitRef {
  UnitKind kind = UnitKind::Passage;
  std::uint32_t index = 0;

  friend bool operator==(const UnitRef&, const UnitRef&) = default;
};

// "passage", "sentence:3", "proposition:0"
std::string to_string(const UnitRef& unit);
UnitRef parse_unit(const std::string& text);

struct ScoredUnit {
  std::string passage_id;
  UnitRef unit;
  double score = 0.0;
  // Raw MaxSim of the unit before any passage-score mixing.
  double raw_score = 0.0;
  std::optional<ScoreBreakdown> breakdown;
};

// Sum over query rows of the maximum dot product against the unit rows,
// accumulated in double. Ties in the maximum resolve to the lowest token.
double maxsim(const RowView& query, const RowView& unit, ScoreBreakdown* breakdown = nullptr);
double maxsim(const EmbeddingMatrix& query, const RowView& unit, ScoreBreakdown* breakdown = nullptr);
double maxsim(const QueryEncoding& query, const RowView& unit, ScoreBreakdown* breakdown = nullptr);

// Full-passage MaxSim with the default query marker.
double score_passage(const QueryEncoding& query, const PassageRecord& passage,
                     ScoreBreakdown* breakdown = nullptr);

// In-passage sentence relevance: MaxSim over the sentence's token rows of the
// passage-level encoding, with the sentence-marker query.
double score_sentence_in_passage(const QueryEncoding& query_prime, const PassageRecord& passage,
                                 std::size_t sentence_idx, ScoreBreakdown* breakdown = nullptr);

// score_sentence_in_passage(query_prime) + alpha * score_passage(query_default)
double combined_sentence_score(const QueryEncoding& query_prime, const QueryEncoding& query_default,
                               const PassageRecord& passage, std::size_t sentence_idx,
                               const RankingConfig& cfg);

double score_proposition(const QueryEncoding& query, const PassageRecord& passage,
                         std::size_t prop_idx, ScoreBreakdown* breakdown = nullptr);

// Descending score, ties by passage id then unit index.
std::vector<ScoredUnit> rank_passages(const QueryEncoding& query_default,
                                      std::span<const PassageRecord* const> candidates,
                                      bool with_breakdown = false);
std::vector<ScoredUnit> rank_sentences(const QueryEncoding& query_prime,
                                       const QueryEncoding& query_default,
                                       std::span<const PassageRecord* const> candidates,
                                       const RankingConfig& cfg, bool with_breakdown = false);
std::vector<ScoredUnit> rank_propositions(const QueryEncoding& query_default,
                                          std::span<const PassageRecord* const> candidates,
                                          bool with_breakdown = false);

std::vector<ScoredUnit> rank_passages(const QueryEncoding& query_default,
                                      std::span<const PassageRecord> candidates,
                                      bool with_breakdown = false);
std::vector<ScoredUnit> rank_sentences(const QueryEncoding& query_prime,
                                       const QueryEncoding& query_default,
                                       std::span<const PassageRecord> candidates,
                                       const RankingConfig& cfg, bool with_breakdown = false);

// Passage relevance when every sentence was encoded on its own: the maximum
// of the group's sentence scores. Throws on an empty group.
double passage_score_from_sentence_encoding(const QueryEncoding& query,
                                            std::span<const PassageRecord* const> sentence_records);

void sort_scored(std::vector<ScoredUnit>& units);

}  // namespace agrame
