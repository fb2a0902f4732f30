#include "agrame/scorer.hpp"

#include <algorithm>
#include <limits>

#include "agrame/parallel.hpp"

namespace agrame {
namespace {

void require_marker(const QueryEncoding& q, Marker expected) {
  if (q.marker != expected)
    throw Error(ErrorKind::MarkerMismatch,
                std::string("marker mismatch: query '") + q.id + "' uses the " + marker_name(q.marker) +
                    " marker, expected " + marker_name(expected));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

std::vector<const PassageRecord*> pointers(std::span<const PassageRecord> records) {
  std::vector<const PassageRecord*> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(&r);
  return out;
}

}  // namespace

std::string to_string(const UnitRef& unit) {
  switch (unit.kind) {
    case UnitKind::Passage:
      return "passage";
    case UnitKind::Sentence:
      return "sentence:" + std::to_string(unit.index);
    case UnitKind::Proposition:
      return "proposition:" + std::to_string(unit.index);
  }
  return "passage";
}

UnitRef parse_unit(const std::string& text) {
  if (text == "passage") return {UnitKind::Passage, 0};
  auto colon = text.find(':');
  if (colon != std::string::npos) {
    std::string kind = text.substr(0, colon);
    try {
      unsigned long idx = std::stoul(text.substr(colon + 1));
      if (kind == "sentence") return {UnitKind::Sentence, static_cast<std::uint32_t>(idx)};
      if (kind == "proposition") return {UnitKind::Proposition, static_cast<std::uint32_t>(idx)};
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorKind::Format, "unrecognized unit '" + text + "'");
}

double maxsim(const RowView& query, const RowView& unit, ScoreBreakdown* breakdown) {
  if (query.dim() != unit.dim())
    throw Error(ErrorKind::DimMismatch, "dim mismatch: query " + std::to_string(query.dim()) + " vs unit " +
                                            std::to_string(unit.dim()));
  if (unit.size() == 0) throw Error(ErrorKind::InvalidSpan, "invalid span");
  if (breakdown) {
    breakdown->per_token_max.assign(query.size(), 0.0);
    breakdown->per_token_argmax.assign(query.size(), 0);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    auto q = query.row(i);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < unit.size(); ++k) {
      double s = dot(q, unit.row(k));
      if (s > best) {
        best = s;
        best_k = k;
      }
    }
    total += best;
    if (breakdown) {
      breakdown->per_token_max[i] = best;
      breakdown->per_token_argmax[i] = static_cast<std::uint32_t>(unit.source_index(best_k));
    }
  }
  return total;
}

double maxsim(const EmbeddingMatrix& query, const RowView& unit, ScoreBreakdown* breakdown) {
  return maxsim(RowView(query), unit, breakdown);
}

double maxsim(const QueryEncoding& query, const RowView& unit, ScoreBreakdown* breakdown) {
  return maxsim(RowView(query.embeddings), unit, breakdown);
}

double score_passage(const QueryEncoding& query, const PassageRecord& passage, ScoreBreakdown* breakdown) {
  require_marker(query, Marker::Passage);
  return maxsim(query, RowView(passage.embeddings), breakdown);
}

double score_sentence_in_passage(const QueryEncoding& query_prime, const PassageRecord& passage,
                                 std::size_t sentence_idx, ScoreBreakdown* breakdown) {
  require_marker(query_prime, Marker::Sentence);
  if (sentence_idx >= passage.sentences.size())
    throw Error(ErrorKind::InvalidArgument, "sentence index " + std::to_string(sentence_idx) +
                                                " out of range for passage '" + passage.id + "'");
  return maxsim(query_prime, span_slice(passage.embeddings, passage.sentences[sentence_idx]), breakdown);
}

double combined_sentence_score(const QueryEncoding& query_prime, const QueryEncoding& query_default,
                               const PassageRecord& passage, std::size_t sentence_idx,
                               const RankingConfig& cfg) {
  require_marker(query_default, Marker::Passage);
  double in_passage = score_sentence_in_passage(query_prime, passage, sentence_idx);
  return in_passage + cfg.alpha * score_passage(query_default, passage);
}

double score_proposition(const QueryEncoding& query, const PassageRecord& passage, std::size_t prop_idx,
                         ScoreBreakdown* breakdown) {
  require_marker(query, Marker::Passage);
  if (prop_idx >= passage.propositions.size())
    throw Error(ErrorKind::InvalidArgument, "proposition index " + std::to_string(prop_idx) +
                                                " out of range for passage '" + passage.id + "'");
  return maxsim(query, span_slice(passage.embeddings, passage.propositions[prop_idx]), breakdown);
}

void sort_scored(std::vector<ScoredUnit>& units) {
  std::stable_sort(units.begin(), units.end(), [](const ScoredUnit& a, const ScoredUnit& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.passage_id != b.passage_id) return a.passage_id < b.passage_id;
    return a.unit.index < b.unit.index;
  });
}

std::vector<ScoredUnit> rank_passages(const QueryEncoding& query_default,
                                      std::span<const PassageRecord* const> candidates, bool with_breakdown) {
  require_marker(query_default, Marker::Passage);
  std::vector<ScoredUnit> out(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t c) {
    const PassageRecord& p = *candidates[c];
    ScoredUnit& u = out[c];
    u.passage_id = p.id;
    u.unit = {UnitKind::Passage, 0};
    ScoreBreakdown b;
    u.score = u.raw_score = score_passage(query_default, p, with_breakdown ? &b : nullptr);
    if (with_breakdown) u.breakdown = std::move(b);
  });
  sort_scored(out);
  return out;
}

std::vector<ScoredUnit> rank_sentences(const QueryEncoding& query_prime, const QueryEncoding& query_default,
                                       std::span<const PassageRecord* const> candidates, const RankingConfig& cfg,
                                       bool with_breakdown) {
  require_marker(query_prime, Marker::Sentence);
  require_marker(query_default, Marker::Passage);
  cfg.validate();
  std::vector<std::vector<ScoredUnit>> per_passage(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t c) {
    const PassageRecord& p = *candidates[c];
    const double passage_score = score_passage(query_default, p);
    auto& units = per_passage[c];
    units.resize(p.sentences.size());
    for (std::size_t j = 0; j < p.sentences.size(); ++j) {
      ScoredUnit& u = units[j];
      u.passage_id = p.id;
      u.unit = {UnitKind::Sentence, static_cast<std::uint32_t>(j)};
      ScoreBreakdown b;
      u.raw_score = score_sentence_in_passage(query_prime, p, j, with_breakdown ? &b : nullptr);
      u.score = u.raw_score + cfg.alpha * passage_score;
      if (with_breakdown) u.breakdown = std::move(b);
    }
  });
  std::vector<ScoredUnit> out;
  for (auto& units : per_passage)
    for (auto& u : units) out.push_back(std::move(u));
  sort_scored(out);
  return out;
}

std::vector<ScoredUnit> rank_propositions(const QueryEncoding& query_default,
                                          std::span<const PassageRecord* const> candidates, bool with_breakdown) {
  require_marker(query_default, Marker::Passage);
  std::vector<std::vector<ScoredUnit>> per_passage(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t c) {
    const PassageRecord& p = *candidates[c];
    auto& units = per_passage[c];
    units.resize(p.propositions.size());
    for (std::size_t k = 0; k < p.propositions.size(); ++k) {
      ScoredUnit& u = units[k];
      u.passage_id = p.id;
      u.unit = {UnitKind::Proposition, static_cast<std::uint32_t>(k)};
      ScoreBreakdown b;
      u.score = u.raw_score = score_proposition(query_default, p, k, with_breakdown ? &b : nullptr);
      if (with_breakdown) u.breakdown = std::move(b);
    }
  });
  std::vector<ScoredUnit> out;
  for (auto& units : per_passage)
    for (auto& u : units) out.push_back(std::move(u));
  sort_scored(out);
  return out;
}

std::vector<ScoredUnit> rank_passages(const QueryEncoding& query_default, std::span<const PassageRecord> candidates,
                                      bool with_breakdown) {
  auto ptrs = pointers(candidates);
  return rank_passages(query_default, ptrs, with_breakdown);
}

std::vector<ScoredUnit> rank_sentences(const QueryEncoding& query_prime, const QueryEncoding& query_default,
                                       std::span<const PassageRecord> candidates, const RankingConfig& cfg,
                                       bool with_breakdown) {
  auto ptrs = pointers(candidates);
  return rank_sentences(query_prime, query_default, ptrs, cfg, with_breakdown);
}

double passage_score_from_sentence_encoding(const QueryEncoding& query,
                                            std::span<const PassageRecord* const> sentence_records) {
  require_marker(query, Marker::Passage);
  if (sentence_records.empty())
    throw Error(ErrorKind::InvalidArgument, "empty sentence group");
  double best = -std::numeric_limits<double>::infinity();
  for (const PassageRecord* s : sentence_records)
    best = std::max(best, maxsim(query, RowView(s->embeddings)));
  return best;
}

}  // namespace agrame
