#include "agrame/formats.hpp"

#include <map>
#include <sstream>

#include <json.hpp>

#include "binio.hpp"
#include "rng.hpp"

namespace agrame {

using ordered_json = nlohmann::ordered_json;

namespace {

template <class Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::istringstream in(detail::read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      fn(ordered_json::parse(line), lineno);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Format, path.filename().string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

}  // namespace

void write_corpus(const ToyCorpus& corpus, const std::filesystem::path& path) {
  std::vector<std::string> lines;
  for (const auto& ex : corpus.examples) {
    ordered_json j;
    j["query_id"] = ex.query_id;
    j["query_tokens"] = ex.query_tokens;
    j["answer"] = ex.answer;
    ordered_json passages = ordered_json::array();
    for (const auto& p : ex.passages) {
      ordered_json o;
      o["id"] = p.id;
      o["tokens"] = p.tokens;
      ordered_json spans = ordered_json::array();
      for (const auto& s : p.sentences) spans.push_back({s.start, s.end});
      o["sentences"] = std::move(spans);
      o["sentence_texts"] = p.sentence_texts;
      passages.push_back(std::move(o));
    }
    j["passages"] = std::move(passages);
    j["teacher"] = {{"passage_scores", ex.teacher.passage_scores}, {"sentence_scores", ex.teacher.sentence_scores}};
    lines.push_back(j.dump());
  }
  detail::write_file(path, join_lines(lines));
}

ToyCorpus read_corpus(const std::filesystem::path& path, std::uint64_t teacher_seed) {
  ToyCorpus corpus;
  std::uint32_t max_token = 0;
  for_each_json_line(path, [&](const ordered_json& j, std::size_t lineno) {
    ToyExample ex;
    ex.query_id = j.at("query_id").get<std::string>();
    ex.query_tokens = j.at("query_tokens").get<std::vector<std::uint32_t>>();
    if (ex.query_tokens.empty()) throw Error(ErrorKind::Data, "example '" + ex.query_id + "' has no query tokens");
    if (j.contains("answer")) ex.answer = j.at("answer").get<std::string>();
    for (const auto& o : j.at("passages")) {
      ToyPassage p;
      p.id = o.at("id").get<std::string>();
      p.tokens = o.at("tokens").get<std::vector<std::uint32_t>>();
      for (const auto& s : o.at("sentences")) p.sentences.push_back({s.at(0).get<std::uint32_t>(), s.at(1).get<std::uint32_t>()});
      if (o.contains("sentence_texts")) p.sentence_texts = o.at("sentence_texts").get<std::vector<std::string>>();
      for (auto t : p.tokens) max_token = std::max(max_token, t);
      ex.passages.push_back(std::move(p));
    }
    for (auto t : ex.query_tokens) max_token = std::max(max_token, t);
    if (j.contains("teacher")) {
      ex.teacher.passage_scores = j.at("teacher").at("passage_scores").get<std::vector<double>>();
      ex.teacher.sentence_scores = j.at("teacher").at("sentence_scores").get<std::vector<std::vector<double>>>();
    } else {
      if (ex.answer.empty())
        throw Error(ErrorKind::Data, "example '" + ex.query_id + "' has neither teacher scores nor an answer");
      for (const auto& p : ex.passages)
        if (p.sentence_texts.size() != p.sentences.size())
          throw Error(ErrorKind::Data, "passage '" + p.id + "' needs sentence_texts to synthesize teacher scores");
      ex.teacher = synth_teacher(ex, detail::mix_seed(teacher_seed, lineno));
    }
    std::vector<std::size_t> layout;
    for (const auto& p : ex.passages) layout.push_back(p.sentences.size());
    ex.teacher.validate(layout);
    corpus.examples.push_back(std::move(ex));
  });
  if (corpus.examples.empty()) throw Error(ErrorKind::Data, "empty corpus");
  corpus.vocab = static_cast<std::size_t>(max_token) + 1;
  return corpus;
}

std::vector<AnswerSpec> read_answers(const std::filesystem::path& path) {
  std::vector<AnswerSpec> out;
  for_each_json_line(path, [&](const ordered_json& j, std::size_t) {
    AnswerSpec a;
    a.query_id = j.at("query_id").get<std::string>();
    for (const auto& s : j.at("sentences")) {
      AnswerSentenceSpec spec;
      spec.text = s.at("text").get<std::string>();
      if (s.contains("propositions"))
        spec.propositions = s.at("propositions").get<std::vector<std::vector<std::uint32_t>>>();
      a.sentences.push_back(std::move(spec));
    }
    out.push_back(std::move(a));
  });
  return out;
}

void write_answers(const std::vector<AnswerSpec>& answers, const std::filesystem::path& path) {
  std::vector<std::string> lines;
  for (const auto& a : answers) {
    ordered_json j;
    j["query_id"] = a.query_id;
    ordered_json sents = ordered_json::array();
    for (const auto& s : a.sentences) sents.push_back({{"text", s.text}, {"propositions", s.propositions}});
    j["sentences"] = std::move(sents);
    lines.push_back(j.dump());
  }
  detail::write_file(path, join_lines(lines));
}

std::string encode_scored_unit(const std::string& query_id, std::size_t rank, const ScoredUnit& unit,
                               const std::string* text) {
  ordered_json j;
  j["query_id"] = query_id;
  j["rank"] = rank;
  j["passage_id"] = unit.passage_id;
  j["unit"] = to_string(unit.unit);
  j["score"] = unit.score;
  j["raw_score"] = unit.raw_score;
  if (text) j["text"] = *text;
  if (unit.breakdown) {
    j["per_token_max"] = unit.breakdown->per_token_max;
    j["per_token_argmax"] = unit.breakdown->per_token_argmax;
  }
  return j.dump();
}

RankingFile read_rankings(const std::filesystem::path& path) {
  RankingFile file;
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<std::pair<std::size_t, std::string>>> ranked;
  for_each_json_line(path, [&](const ordered_json& j, std::size_t lineno) {
    std::string qid = j.at("query_id").get<std::string>();
    UnitRef unit = parse_unit(j.at("unit").get<std::string>());
    std::string level = unit.kind == UnitKind::Passage ? "passage"
                        : unit.kind == UnitKind::Sentence ? "sentence"
                                                          : "proposition";
    if (file.level.empty()) file.level = level;
    if (file.level != level)
      throw Error(ErrorKind::Data, "rankings line " + std::to_string(lineno) + " mixes granularity levels");
    auto [it, fresh] = slot.emplace(qid, ranked.size());
    if (fresh) {
      ranked.emplace_back();
      file.queries.push_back({qid, {}});
    }
    std::string text = j.contains("text") ? j.at("text").get<std::string>() : std::string();
    ranked[it->second].emplace_back(j.at("rank").get<std::size_t>(), std::move(text));
  });
  for (std::size_t q = 0; q < ranked.size(); ++q) {
    std::stable_sort(ranked[q].begin(), ranked[q].end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [rank, text] : ranked[q]) file.queries[q].unit_texts.push_back(std::move(text));
  }
  return file;
}

std::string encode_citation(const CitationResult& result, const AnswerSpec& spec,
                            const std::vector<std::string>& context_ids, CiteVariant variant, double margin) {
  ordered_json j;
  j["query_id"] = result.query_id;
  j["variant"] = to_string(variant);
  j["margin"] = margin;
  j["contexts"] = context_ids;
  std::string rendered;
  ordered_json sents = ordered_json::array();
  for (std::size_t s = 0; s < result.sentences.size(); ++s) {
    const auto& sc = result.sentences[s];
    const auto& text = spec.sentences[s].text;
    std::string cited_text = render_cited(text, sc.cited);
    if (!rendered.empty()) rendered += ' ';
    rendered += cited_text;
    ordered_json o;
    o["text"] = text;
    o["cited_text"] = cited_text;
    std::vector<std::size_t> one_based;
    for (auto c : sc.cited) one_based.push_back(c + 1);
    o["citations"] = one_based;
    o["no_propositions"] = sc.no_propositions;
    ordered_json props = ordered_json::array();
    for (std::size_t k = 0; k < sc.propositions.size(); ++k) {
      const auto& pc = sc.propositions[k];
      ordered_json p;
      if (k < spec.sentences[s].propositions.size()) p["tokens"] = spec.sentences[s].propositions[k];
      p["chosen"] = pc.chosen ? ordered_json(*pc.chosen + 1) : ordered_json(nullptr);
      p["top_score"] = pc.top_score;
      p["runner_up"] = pc.runner_up ? ordered_json(*pc.runner_up) : ordered_json(nullptr);
      props.push_back(std::move(p));
    }
    o["propositions"] = std::move(props);
    if (!sc.context_scores.empty()) o["context_scores"] = sc.context_scores;
    sents.push_back(std::move(o));
  }
  j["answer"] = rendered;
  j["sentences"] = std::move(sents);
  return j.dump();
}

std::vector<CitationFileEntry> read_citations(const std::filesystem::path& path) {
  std::vector<CitationFileEntry> out;
  for_each_json_line(path, [&](const ordered_json& j, std::size_t lineno) {
    CitationFileEntry e;
    e.query_id = j.at("query_id").get<std::string>();
    e.context_ids = j.at("contexts").get<std::vector<std::string>>();
    for (const auto& s : j.at("sentences")) {
      CitedSentence cs;
      cs.claim = s.at("text").get<std::string>();
      for (auto c : s.at("citations").get<std::vector<std::size_t>>()) {
        if (c == 0) throw Error(ErrorKind::Data, "citations line " + std::to_string(lineno) + ": citation [0]");
        cs.cited.push_back(c - 1);
      }
      e.sentences.push_back(std::move(cs));
    }
    out.push_back(std::move(e));
  });
  return out;
}

std::vector<std::pair<std::string, std::vector<std::string>>> read_id_lists(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::istringstream in(detail::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string qid, id;
    if (!(fields >> qid)) continue;
    std::vector<std::string> ids;
    while (fields >> id) ids.push_back(id);
    out.emplace_back(std::move(qid), std::move(ids));
  }
  return out;
}

}  // namespace agrame
