#include "agrame/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "agrame/error.hpp"
#include "agrame/text.hpp"
#include "binio.hpp"

namespace agrame {
namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {"a",  "an", "and", "are", "as",   "at",  "be",  "by",   "for",
                                              "in", "is", "it",  "its", "of",   "on",  "or",  "that", "the",
                                              "to", "was", "were", "with", "this", "has", "have", "had"};
  return words;
}

const std::vector<std::string>& answers_for(const Qrels& qrels, const std::string& query_id) {
  auto it = qrels.find(query_id);
  if (it == qrels.end()) throw Error(ErrorKind::Data, "missing qrels for query '" + query_id + "'");
  return it->second;
}

void check_rankings(std::span<const RankedQuery> rankings) {
  if (rankings.empty()) throw Error(ErrorKind::InvalidArgument, "empty query set");
  for (const auto& r : rankings)
    if (r.unit_texts.empty()) throw Error(ErrorKind::InvalidArgument, "empty ranking for query '" + r.query_id + "'");
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string table(std::span<const MetricRow> rows, const char* first, const char* second) {
  std::size_t run_w = 3, level_w = 5;
  for (const auto& r : rows) {
    run_w = std::max(run_w, r.run.size());
    level_w = std::max(level_w, r.level.size());
  }
  std::ostringstream out;
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-*s | %-*s | %7s | %6s | %6s\n", static_cast<int>(run_w), "Run",
                static_cast<int>(level_w), "Level", "Queries", first, second);
  out << buf;
  out << std::string(run_w, '-') << "-+-" << std::string(level_w, '-') << "-+---------+--------+-------\n";
  for (const auto& r : rows) {
    std::string first_cell = pct(r.first) + (r.first_defined ? "" : "*");
    std::snprintf(buf, sizeof buf, "%-*s | %-*s | %7zu | %6s | %6s\n", static_cast<int>(run_w), r.run.c_str(),
                  static_cast<int>(level_w), r.level.c_str(), r.queries, first_cell.c_str(),
                  pct(r.second).c_str());
    out << buf;
  }
  for (const auto& r : rows)
    if (!r.first_defined) {
      out << "* no citations were made; precision is undefined and shown as 0\n";
      break;
    }
  return out.str();
}

std::string csv(std::span<const MetricRow> rows, const char* first, const char* second, bool flag) {
  std::ostringstream out;
  out << "run,level,queries," << first << "," << second << (flag ? ",precision_defined" : "") << "\n";
  for (const auto& r : rows) {
    out << r.run << "," << r.level << "," << r.queries << "," << fixed(r.first) << "," << fixed(r.second);
    if (flag) out << "," << (r.first_defined ? "true" : "false");
    out << "\n";
  }
  return out.str();
}

}  // namespace

Qrels parse_qrels(std::string_view tsv) {
  Qrels qrels;
  std::istringstream in{std::string(tsv)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorKind::Format, "qrels line " + std::to_string(lineno) + ": expected query_id<TAB>answers");
    std::string qid = line.substr(0, tab);
    std::vector<std::string> answers;
    std::string rest = line.substr(tab + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      auto bar = rest.find('|', pos);
      std::string a = rest.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos);
      if (!normalize_text(a).empty()) answers.push_back(a);
      if (bar == std::string::npos) break;
      pos = bar + 1;
    }
    if (answers.empty()) throw Error(ErrorKind::Format, "qrels line " + std::to_string(lineno) + ": no answers");
    auto& slot = qrels[qid];
    slot.insert(slot.end(), answers.begin(), answers.end());
  }
  return qrels;
}

Qrels read_qrels(const std::filesystem::path& path) { return parse_qrels(detail::read_file(path)); }

bool hit(std::string_view unit_text, std::span<const std::string> answers) {
  std::string unit = normalize_text(unit_text);
  for (const auto& a : answers) {
    std::string needle = normalize_text(a);
    if (!needle.empty() && unit.find(needle) != std::string::npos) return true;
  }
  return false;
}

double precision_at_1(std::span<const RankedQuery> rankings, const Qrels& qrels) {
  return recall_at_k(rankings, qrels, 1);
}

double recall_at_5(std::span<const RankedQuery> rankings, const Qrels& qrels) {
  return recall_at_k(rankings, qrels, 5);
}

double recall_at_k(std::span<const RankedQuery> rankings, const Qrels& qrels, std::size_t k) {
  check_rankings(rankings);
  std::size_t hits = 0;
  for (const auto& r : rankings) {
    const auto& answers = answers_for(qrels, r.query_id);
    const std::size_t depth = std::min(k, r.unit_texts.size());
    for (std::size_t i = 0; i < depth; ++i) {
      if (hit(r.unit_texts[i], answers)) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

bool TokenCoverageOracle::judge(std::span<const std::string> premises, const std::string& claim) const {
  if (premises.empty()) return false;
  std::set<std::string> vocab;
  for (const auto& p : premises)
    for (auto& w : word_tokens(p)) vocab.insert(std::move(w));
  for (const auto& w : word_tokens(claim)) {
    if (stopwords().count(w)) continue;
    if (!vocab.count(w)) return false;
  }
  return true;
}

bool citation_is_precise(const EntailmentOracle& oracle, const std::string& claim,
                         std::span<const std::string> cited_texts, std::size_t which, bool joint_entailed) {
  if (!joint_entailed) return false;
  if (cited_texts.size() == 1) return true;
  std::string alone = cited_texts[which];
  if (oracle.judge(std::span<const std::string>(&alone, 1), claim)) return true;
  std::vector<std::string> rest;
  for (std::size_t k = 0; k < cited_texts.size(); ++k)
    if (k != which) rest.push_back(cited_texts[k]);
  return !oracle.judge(rest, claim);
}

CitationScores citation_scores(std::span<const CitedAnswer> answers, const EntailmentOracle& oracle) {
  CitationScores out;
  std::size_t entailed = 0, precise = 0;
  for (const auto& a : answers) {
    for (const auto& s : a.sentences) {
      ++out.sentences;
      std::vector<std::string> cited;
      for (auto idx : s.cited) {
        if (idx >= a.contexts.size())
          throw Error(ErrorKind::Data, "citation [" + std::to_string(idx + 1) + "] has no context in query '" +
                                           a.query_id + "'");
        cited.push_back(a.contexts[idx]);
      }
      const bool joint = !cited.empty() && oracle.judge(cited, s.claim);
      entailed += joint;
      for (std::size_t k = 0; k < cited.size(); ++k) precise += citation_is_precise(oracle, s.claim, cited, k, joint);
      out.citations += cited.size();
    }
  }
  if (out.sentences > 0) out.recall = static_cast<double>(entailed) / static_cast<double>(out.sentences);
  out.precision_defined = out.citations > 0;
  if (out.precision_defined) out.precision = static_cast<double>(precise) / static_cast<double>(out.citations);
  return out;
}

std::string ranking_report_csv(std::span<const MetricRow> rows) { return csv(rows, "p_at_1", "r_at_5", false); }
std::string ranking_report_table(std::span<const MetricRow> rows) { return table(rows, "P@1", "R@5"); }
std::string citation_report_csv(std::span<const MetricRow> rows) { return csv(rows, "precision", "recall", true); }
std::string citation_report_table(std::span<const MetricRow> rows) { return table(rows, "P", "R"); }

}  // namespace agrame
