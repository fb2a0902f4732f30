#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace agrame {

// query id -> acceptable answers
using Qrels = std::map<std::string, std::vector<std::string>>;

// TSV lines "query_id<TAB>answer1|answer2|...". Blank lines and lines
// starting with '#' are skipped.
Qrels parse_qrels(std::string_view tsv);
Qrels read_qrels(const std::filesystem::path& path);

// True iff some answer is a substring of the unit after case-folding and
// whitespace normalization.
bool hit(std::string_view unit_text, std::span<const std::string> answers);

struct RankedQuery {
  std::string query_id;
  std::vector<std::string> unit_texts;  // rank order
};

// Fraction of queries whose top unit hits. Throws on an empty query set, an
// empty ranking, or a query without qrels.
double precision_at_1(std::span<const RankedQuery> rankings, const Qrels& qrels);

// Fraction of queries with a hit among the top five units.
double recall_at_5(std::span<const RankedQuery> rankings, const Qrels& qrels);
double recall_at_k(std::span<const RankedQuery> rankings, const Qrels& qrels, std::size_t k);

class EntailmentOracle {
 public:
  virtual ~EntailmentOracle() = default;
  // Deterministic for fixed inputs.
  virtual bool judge(std::span<const std::string> premises, const std::string& claim) const = 0;
};

// Desk-scale stand-in for an NLI judge: the claim is entailed when every
// content word of it (stopwords removed) occurs somewhere in the premises.
// No premises never entail.
class TokenCoverageOracle final : public EntailmentOracle {
 public:
  bool judge(std::span<const std::string> premises, const std::string& claim) const override;
};

struct CitedSentence {
  std::string claim;
  std::vector<std::size_t> cited;  // indices into the answer's contexts
};

struct CitedAnswer {
  std::string query_id;
  std::vector<std::string> contexts;
  std::vector<CitedSentence> sentences;
};

struct CitationScores {
  double precision = 0.0;
  double recall = 0.0;
  // False when no citation was made anywhere; precision is then 0.
  bool precision_defined = false;
  std::size_t sentences = 0;
  std::size_t citations = 0;
};

// Whether one citation of a sentence earns precision credit. The sentence
// must be entailed by all its citations jointly; then a citation counts
// unless it alone fails to entail and the remaining citations still do.
bool citation_is_precise(const EntailmentOracle& oracle, const std::string& claim,
                         std::span<const std::string> cited_texts, std::size_t which, bool joint_entailed);

// Recall: fraction of sentences entailed by their cited passages jointly.
// Precision: fraction of citations passing citation_is_precise.
CitationScores citation_scores(std::span<const CitedAnswer> answers, const EntailmentOracle& oracle);

struct MetricRow {
  std::string run;
  std::string level;
  std::size_t queries = 0;
  double first = 0.0;   // P@1 or citation precision
  double second = 0.0;  // R@5 or citation recall
  // Citation rows only: false when precision had no citations to measure.
  bool first_defined = true;
};

std::string ranking_report_csv(std::span<const MetricRow> rows);
std::string ranking_report_table(std::span<const MetricRow> rows);
std::string citation_report_csv(std::span<const MetricRow> rows);
std::string citation_report_table(std::span<const MetricRow> rows);

}  // namespace agrame
