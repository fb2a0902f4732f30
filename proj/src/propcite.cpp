#include "agrame/propcite.hpp"

#include <algorithm>
#include <numeric>

#include "agrame/parallel.hpp"
#include "agrame/scorer.hpp"

namespace agrame {
namespace {

void require_contexts(std::span<const PassageRecord* const> contexts) {
  if (contexts.empty()) throw Error(ErrorKind::InvalidArgument, "no contexts to cite");
}

// Context indices by descending score, ties to the lower index.
std::vector<std::size_t> order_by_score(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

PropositionCitation choose_citation(std::span<const double> scores, double margin) {
  if (scores.empty()) throw Error(ErrorKind::InvalidArgument, "no contexts to cite");
  std::vector<double> copy(scores.begin(), scores.end());
  auto order = order_by_score(copy);
  PropositionCitation c;
  c.top_score = scores[order[0]];
  c.chosen = order[0];
  if (order.size() > 1) {
    c.runner_up = scores[order[1]];
    if (margin > 0.0 && c.top_score - *c.runner_up < margin) c.chosen.reset();
  }
  return c;
}

namespace {

void finish(SentenceCitation& out) {
  for (const auto& p : out.propositions)
    if (p.chosen) out.cited.push_back(*p.chosen);
  std::sort(out.cited.begin(), out.cited.end());
  out.cited.erase(std::unique(out.cited.begin(), out.cited.end()), out.cited.end());
}

}  // namespace

const char* to_string(CiteVariant v) noexcept {
  switch (v) {
    case CiteVariant::PropCite:
      return "propcite";
    case CiteVariant::PropIsolatedEncoding:
      return "prop_isolated_encoding";
    case CiteVariant::SentenceTop1:
      return "sentence_top1";
    case CiteVariant::SentenceTop2:
      return "sentence_top2";
  }
  return "propcite";
}

CiteVariant parse_cite_variant(const std::string& s) {
  for (auto v : {CiteVariant::PropCite, CiteVariant::PropIsolatedEncoding, CiteVariant::SentenceTop1,
                 CiteVariant::SentenceTop2})
    if (s == to_string(v)) return v;
  throw Error(ErrorKind::InvalidArgument, "unknown citation variant '" + s + "'");
}

std::vector<double> score_contexts(const RowView& query_rows, std::span<const PassageRecord* const> contexts) {
  std::vector<double> scores(contexts.size());
  for (std::size_t k = 0; k < contexts.size(); ++k) scores[k] = maxsim(query_rows, RowView(contexts[k]->embeddings));
  return scores;
}

PropositionCitation cite_proposition(const RowView& prop_rows, std::span<const PassageRecord* const> contexts,
                                     double margin) {
  require_contexts(contexts);
  if (!(margin >= 0.0)) throw Error(ErrorKind::InvalidArgument, "citation margin must be non-negative");
  return choose_citation(score_contexts(prop_rows, contexts), margin);
}

SentenceCitation cite_sentence(const AnswerSentence& sentence, std::span<const PassageRecord* const> contexts,
                               const RankingConfig& cfg) {
  return cite_variant(sentence, contexts, CiteVariant::PropCite, cfg);
}

SentenceCitation cite_variant(const AnswerSentence& sentence, std::span<const PassageRecord* const> contexts,
                              CiteVariant variant, const RankingConfig& cfg) {
  require_contexts(contexts);
  cfg.validate();
  SentenceCitation out;
  switch (variant) {
    case CiteVariant::PropCite:
      out.no_propositions = sentence.propositions.empty();
      for (const auto& mask : sentence.propositions)
        out.propositions.push_back(
            cite_proposition(span_slice(sentence.encoding, mask), contexts, cfg.citation_margin));
      break;
    case CiteVariant::PropIsolatedEncoding:
      out.no_propositions = sentence.propositions.empty();
      if (sentence.isolated_encodings.size() != sentence.propositions.size())
        throw Error(ErrorKind::Data, "isolated proposition encodings missing for sentence '" + sentence.text + "'");
      for (const auto& iso : sentence.isolated_encodings)
        out.propositions.push_back(cite_proposition(RowView(iso), contexts, cfg.citation_margin));
      break;
    case CiteVariant::SentenceTop1:
    case CiteVariant::SentenceTop2: {
      out.context_scores = score_contexts(RowView(sentence.encoding), contexts);
      auto order = order_by_score(out.context_scores);
      std::size_t take = variant == CiteVariant::SentenceTop1 ? 1 : 2;
      order.resize(std::min(take, order.size()));
      out.cited = order;
      std::sort(out.cited.begin(), out.cited.end());
      return out;
    }
  }
  finish(out);
  return out;
}

CitationResult cite_answer(const GeneratedAnswer& answer, std::span<const PassageRecord* const> contexts,
                           CiteVariant variant, const RankingConfig& cfg) {
  CitationResult result;
  result.query_id = answer.query_id;
  result.sentences.resize(answer.sentences.size());
  parallel_for(answer.sentences.size(), [&](std::size_t s) {
    result.sentences[s] = cite_variant(answer.sentences[s], contexts, variant, cfg);
  });
  return result;
}

std::string render_cited(const std::string& text, std::span<const std::size_t> cited) {
  std::string marks;
  for (auto c : cited) marks += "[" + std::to_string(c + 1) + "]";
  std::size_t end = text.size();
  while (end > 0 && (text[end - 1] == ' ' || text[end - 1] == '\n')) --end;
  std::size_t punct = end;
  while (punct > 0 && (text[punct - 1] == '.' || text[punct - 1] == '!' || text[punct - 1] == '?')) --punct;
  std::string body = text.substr(0, punct);
  if (marks.empty()) return body + text.substr(punct, end - punct);
  return body + " " + marks + text.substr(punct, end - punct);
}

}  // namespace agrame
