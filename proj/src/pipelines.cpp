#include "agrame/pipelines.hpp"

#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

#include "agrame/evalkit.hpp"
#include "agrame/formats.hpp"
#include "agrame/propcite.hpp"
#include "agrame/scorer.hpp"
#include "agrame/storage.hpp"
#include "agrame/text.hpp"
#include "binio.hpp"

namespace agrame {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.3.0";

std::filesystem::path with_suffix(const std::filesystem::path& base, const std::string& suffix) {
  return std::filesystem::path(base.string() + suffix);
}

void require_path(const std::filesystem::path& p, const char* flag) {
  if (p.empty()) throw Error(ErrorKind::InvalidArgument, std::string("missing required ") + flag);
}

// seed is null for commands that draw no random numbers.
void write_run_json(const std::filesystem::path& out, const char* command, ordered_json seed, ordered_json config,
                    const std::vector<std::filesystem::path>& inputs, const std::vector<std::filesystem::path>& outputs) {
  ordered_json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["seed"] = std::move(seed);
  j["config"] = std::move(config);
  ordered_json in = ordered_json::array(), o = ordered_json::array();
  for (const auto& p : inputs)
    if (!p.empty()) in.push_back(p.string());
  for (const auto& p : outputs) o.push_back(p.string());
  j["inputs"] = std::move(in);
  j["outputs"] = std::move(o);
  detail::write_file(with_suffix(out, ".run.json"), j.dump(2) + "\n");
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string passage_text(const PassageRecord& p) { return p.text ? *p.text : join(p.sentence_texts, " "); }

template <class Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
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

ToyEncoder load_or_seed_encoder(const IndexOptions& o) {
  if (!o.encoder.empty()) return ToyEncoder::load(o.encoder);
  return ToyEncoder::random(o.vocab, o.input_dim, o.dim, o.seed);
}

std::vector<std::uint32_t> hash_tokens(const std::string& text, std::size_t vocab) {
  std::vector<std::uint32_t> out;
  for (const auto& w : word_tokens(text)) out.push_back(hash_token(w, vocab));
  return out;
}

void check_vocab(const std::vector<std::uint32_t>& tokens, std::size_t vocab, const std::string& id) {
  for (auto t : tokens)
    if (t >= vocab)
      throw Error(ErrorKind::Data, "token " + std::to_string(t) + " of '" + id + "' exceeds encoder vocab " +
                                       std::to_string(vocab));
}

std::vector<PropositionMask> parse_masks(const ordered_json& j) {
  std::vector<PropositionMask> out;
  if (!j.contains("propositions")) return out;
  for (const auto& p : j.at("propositions"))
    out.push_back({p.at("sentence").get<std::uint32_t>(), p.at("tokens").get<std::vector<std::uint32_t>>()});
  return out;
}

std::string index_passages(const IndexOptions& o) {
  const bool toy = o.embeddings == "toy-encode";
  ToyEncoder encoder;
  std::map<std::string, EmbeddingMatrix> external;
  if (toy) {
    encoder = load_or_seed_encoder(o);
    if (o.expect_dim && encoder.dim() != o.expect_dim)
      throw Error(ErrorKind::DimMismatch, "dim mismatch: encoder produces " + std::to_string(encoder.dim()) +
                                              ", expected " + std::to_string(o.expect_dim));
  } else {
    IndexManifest m = read_manifest(o.embeddings);
    if (o.expect_dim && m.dim != o.expect_dim)
      throw Error(ErrorKind::DimMismatch, "dim mismatch: embeddings have dim " + std::to_string(m.dim) +
                                              ", expected " + std::to_string(o.expect_dim));
    for (auto& [id, rows] : read_embeddings(o.embeddings)) external.emplace(id, std::move(rows));
  }

  std::vector<PassageRecord> records;
  for_each_line(o.passages, [&](const ordered_json& j, std::size_t lineno) {
    PassageRecord r;
    r.id = j.at("id").get<std::string>();
    if (j.contains("text")) r.text = j.at("text").get<std::string>();
    std::vector<std::string> sentence_strings;
    if (j.contains("sentences")) sentence_strings = j.at("sentences").get<std::vector<std::string>>();

    std::vector<std::vector<std::uint32_t>> sentence_tokens;
    if (j.contains("tokens")) {
      sentence_tokens = j.at("tokens").get<std::vector<std::vector<std::uint32_t>>>();
    } else if (toy) {
      for (const auto& s : sentence_strings) sentence_tokens.push_back(hash_tokens(s, encoder.vocab()));
    }
    if (!sentence_strings.empty() && !sentence_tokens.empty() && sentence_strings.size() != sentence_tokens.size())
      throw Error(ErrorKind::Data, "line " + std::to_string(lineno) + ": sentences and tokens disagree in count");
    r.sentence_texts = sentence_strings;

    std::vector<std::uint32_t> flat;
    if (j.contains("spans")) {
      for (const auto& s : j.at("spans")) r.sentences.push_back({s.at(0).get<std::uint32_t>(), s.at(1).get<std::uint32_t>()});
    } else {
      for (std::size_t s = 0; s < sentence_tokens.size(); ++s) {
        if (sentence_tokens[s].empty())
          throw Error(ErrorKind::Data, "sentence " + std::to_string(s) + " of '" + r.id + "' has no tokens");
        auto start = static_cast<std::uint32_t>(flat.size());
        flat.insert(flat.end(), sentence_tokens[s].begin(), sentence_tokens[s].end());
        r.sentences.push_back({start, static_cast<std::uint32_t>(flat.size())});
      }
    }
    if (r.sentences.empty())
      throw Error(ErrorKind::Data, "line " + std::to_string(lineno) + ": passage '" + r.id + "' has no sentences");
    r.propositions = parse_masks(j);

    if (toy) {
      if (j.contains("spans"))
        for (const auto& t : sentence_tokens) flat.insert(flat.end(), t.begin(), t.end());
      check_vocab(flat, encoder.vocab(), r.id);
      r.embeddings = toy_forward(encoder, flat, EncodeRole::Passage);
    } else {
      auto it = external.find(r.id);
      if (it == external.end()) throw Error(ErrorKind::Data, "no embeddings for passage '" + r.id + "'");
      r.embeddings = it->second;
    }
    auto violations = validate_passage(r);
    if (!violations.empty())
      throw Error(ErrorKind::InvalidSpan, "passage '" + r.id + "': " + violations.front().message);
    records.push_back(std::move(r));
  });
  if (records.empty()) throw Error(ErrorKind::Data, "no passages in input");

  auto agrv = with_suffix(o.out, ".agrv");
  IndexManifest m = write_index(std::span<const PassageRecord>(records), agrv);
  ordered_json summary;
  summary["kind"] = "passages";
  summary["records"] = m.record_count;
  summary["dim"] = m.dim;
  summary["version"] = m.version;
  summary["index"] = agrv.string();
  summary["spans"] = sidecar_path(agrv).string();
  return summary.dump();
}

std::string index_queries(const IndexOptions& o) {
  const bool toy = o.embeddings == "toy-encode";
  std::vector<Marker> markers;
  if (o.markers == "both" || o.markers == "passage") markers.push_back(Marker::Passage);
  if (o.markers == "both" || o.markers == "sentence") markers.push_back(Marker::Sentence);
  if (markers.empty()) throw Error(ErrorKind::InvalidArgument, "unknown marker selection '" + o.markers + "'");

  ToyEncoder encoder;
  std::vector<QueryEncoding> external;
  if (toy) {
    encoder = load_or_seed_encoder(o);
    if (o.expect_dim && encoder.dim() != o.expect_dim)
      throw Error(ErrorKind::DimMismatch, "dim mismatch: encoder produces " + std::to_string(encoder.dim()) +
                                              ", expected " + std::to_string(o.expect_dim));
  } else {
    QueryIndex qi = read_queries(o.embeddings);
    if (o.expect_dim && qi.manifest.dim != o.expect_dim)
      throw Error(ErrorKind::DimMismatch, "dim mismatch: embeddings have dim " + std::to_string(qi.manifest.dim) +
                                              ", expected " + std::to_string(o.expect_dim));
    external = std::move(qi.records);
  }

  std::vector<QueryEncoding> records;
  for_each_line(o.passages, [&](const ordered_json& j, std::size_t) {
    const std::string id = j.at("id").get<std::string>();
    std::vector<std::uint32_t> tokens;
    if (toy) {
      if (j.contains("tokens"))
        tokens = j.at("tokens").get<std::vector<std::uint32_t>>();
      else
        tokens = hash_tokens(j.at("question").get<std::string>(), encoder.vocab());
      if (tokens.empty()) throw Error(ErrorKind::Data, "query '" + id + "' has no tokens");
      check_vocab(tokens, encoder.vocab(), id);
    }
    for (Marker mk : markers) {
      if (toy) {
        EncodeRole role = mk == Marker::Passage ? EncodeRole::QueryDefault : EncodeRole::QuerySentence;
        records.push_back({id, mk, toy_forward(encoder, tokens, role)});
        continue;
      }
      auto it = std::find_if(external.begin(), external.end(),
                             [&](const QueryEncoding& q) { return q.id == id && q.marker == mk; });
      if (it == external.end())
        throw Error(ErrorKind::Data, std::string("no ") + marker_name(mk) + " encoding for query '" + id + "'");
      records.push_back(*it);
    }
  });
  if (records.empty()) throw Error(ErrorKind::Data, "no queries in input");

  auto agrv = with_suffix(o.out, ".agrv");
  IndexManifest m = write_index(std::span<const QueryEncoding>(records), agrv);
  ordered_json summary;
  summary["kind"] = "queries";
  summary["records"] = m.record_count;
  summary["dim"] = m.dim;
  summary["version"] = m.version;
  summary["index"] = agrv.string();
  return summary.dump();
}

TrainConfig train_config(const TrainToyOptions& o) {
  TrainConfig cfg;
  cfg.mode = parse_train_mode(o.mode);
  cfg.marker_mode = parse_marker_mode(o.marker_mode);
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.learning_rate;
  cfg.seed = o.seed;
  cfg.input_dim = o.input_dim;
  cfg.dim = o.dim;
  cfg.marker_scale = o.marker_scale;
  cfg.ranking.temperature = o.temperature;
  cfg.ranking.alpha = o.alpha;
  cfg.ranking.validate();
  if (!(o.learning_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");
  return cfg;
}

ordered_json train_config_json(const TrainToyOptions& o) {
  ordered_json c;
  c["corpus"] = o.corpus.string();
  c["mode"] = o.mode;
  c["marker_mode"] = o.marker_mode;
  c["epochs"] = o.epochs;
  c["learning_rate"] = o.learning_rate;
  c["seed"] = o.seed;
  c["input_dim"] = o.input_dim;
  c["dim"] = o.dim;
  c["marker_scale"] = o.marker_scale;
  c["temperature"] = o.temperature;
  c["alpha"] = o.alpha;
  c["teacher_seed"] = o.teacher_seed;
  return c;
}

ordered_json metrics_json(const EpochMetrics& m) {
  ordered_json j;
  j["epoch"] = m.epoch;
  j["l_psg"] = m.l_psg;
  j["l_sent"] = m.l_sent;
  j["total"] = m.total;
  j["sentence_agreement"] = m.sentence_agreement;
  j["passage_agreement"] = m.passage_agreement;
  return j;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

const char* library_version() noexcept { return kVersion; }

std::uint32_t hash_token(const std::string& word, std::size_t vocab) {
  if (vocab == 0) throw Error(ErrorKind::InvalidArgument, "vocab must be positive");
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : normalize_text(word)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return static_cast<std::uint32_t>(h % vocab);
}

std::string run_index(const IndexOptions& o) {
  require_path(o.passages, "--passages");
  require_path(o.out, "--out");
  std::string summary;
  if (o.kind == "passages")
    summary = index_passages(o);
  else if (o.kind == "queries")
    summary = index_queries(o);
  else
    throw Error(ErrorKind::InvalidArgument, "unknown index kind '" + o.kind + "'");

  ordered_json c;
  c["passages"] = o.passages.string();
  c["embeddings"] = o.embeddings;
  c["kind"] = o.kind;
  c["encoder"] = o.encoder.string();
  c["vocab"] = o.vocab;
  c["input_dim"] = o.input_dim;
  c["dim"] = o.dim;
  c["seed"] = o.seed;
  c["markers"] = o.markers;
  c["expect_dim"] = o.expect_dim;
  std::vector<std::filesystem::path> outputs{with_suffix(o.out, ".agrv")};
  if (o.kind == "passages") outputs.push_back(sidecar_path(outputs[0]));
  std::vector<std::filesystem::path> inputs{o.passages, o.encoder};
  if (o.embeddings != "toy-encode") inputs.emplace_back(o.embeddings);
  write_run_json(o.out, "index", o.encoder.empty() && o.embeddings == "toy-encode" ? ordered_json(o.seed) : ordered_json(nullptr), std::move(c), inputs, outputs);
  return summary;
}

std::string run_rank(const RankOptions& o) {
  require_path(o.index, "--index");
  require_path(o.queries, "--queries");
  require_path(o.out, "--out");
  UnitKind level;
  if (o.level == "passage")
    level = UnitKind::Passage;
  else if (o.level == "sentence")
    level = UnitKind::Sentence;
  else if (o.level == "proposition")
    level = UnitKind::Proposition;
  else
    throw Error(ErrorKind::InvalidArgument, "unknown level '" + o.level + "'");
  RankingConfig cfg;
  cfg.alpha = o.alpha;
  cfg.validate();

  PassageIndex index = read_passages(o.index);
  QueryIndex queries = read_queries(o.queries);
  if (index.manifest.dim != queries.manifest.dim)
    throw Error(ErrorKind::DimMismatch, "dim mismatch: index dim " + std::to_string(index.manifest.dim) +
                                            ", query dim " + std::to_string(queries.manifest.dim));

  std::map<std::string, const PassageRecord*> by_id;
  std::vector<const PassageRecord*> all;
  for (const auto& r : index.records) {
    by_id[r.id] = &r;
    all.push_back(&r);
  }

  std::vector<std::string> order;
  std::map<std::string, std::pair<const QueryEncoding*, const QueryEncoding*>> encodings;
  for (const auto& q : queries.records) {
    auto [it, fresh] = encodings.try_emplace(q.id, nullptr, nullptr);
    if (fresh) order.push_back(q.id);
    (q.marker == Marker::Passage ? it->second.first : it->second.second) = &q;
  }

  std::map<std::string, std::vector<const PassageRecord*>> candidates;
  if (!o.candidates.empty()) {
    for (auto& [qid, ids] : read_id_lists(o.candidates)) {
      auto& list = candidates[qid];
      for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end())
          throw Error(ErrorKind::Data, "candidate '" + id + "' for query '" + qid + "' is not in the index");
        list.push_back(it->second);
      }
    }
  }

  std::string out;
  std::size_t lines = 0;
  for (const auto& qid : order) {
    auto [q_def, q_sent] = encodings[qid];
    if (!q_def) throw Error(ErrorKind::Data, "query '" + qid + "' has no passage-marker encoding");
    if (level == UnitKind::Sentence && !q_sent)
      throw Error(ErrorKind::Data, "query '" + qid + "' has no sentence-marker encoding");
    std::span<const PassageRecord* const> cands = all;
    if (!o.candidates.empty()) {
      auto it = candidates.find(qid);
      if (it == candidates.end()) throw Error(ErrorKind::Data, "no candidates for query '" + qid + "'");
      cands = it->second;
    }
    std::vector<ScoredUnit> ranked;
    switch (level) {
      case UnitKind::Passage:
        ranked = rank_passages(*q_def, cands, o.breakdown);
        break;
      case UnitKind::Sentence:
        ranked = rank_sentences(*q_sent, *q_def, cands, cfg, o.breakdown);
        break;
      case UnitKind::Proposition:
        ranked = rank_propositions(*q_def, cands, o.breakdown);
        break;
    }
    if (ranked.size() > o.top_k) ranked.resize(o.top_k);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      const PassageRecord& p = *by_id.at(ranked[r].passage_id);
      std::optional<std::string> text;
      if (level == UnitKind::Passage && (p.text || !p.sentence_texts.empty()))
        text = passage_text(p);
      else if (level == UnitKind::Sentence && ranked[r].unit.index < p.sentence_texts.size())
        text = p.sentence_texts[ranked[r].unit.index];
      out += encode_scored_unit(qid, r + 1, ranked[r], text ? &*text : nullptr);
      out += '\n';
      ++lines;
    }
  }
  detail::write_file(o.out, out);

  ordered_json c;
  c["index"] = o.index.string();
  c["queries"] = o.queries.string();
  c["level"] = o.level;
  c["alpha"] = o.alpha;
  c["top_k"] = o.top_k;
  c["breakdown"] = o.breakdown;
  c["candidates"] = o.candidates.string();
  write_run_json(o.out, "rank", nullptr, std::move(c), {o.index, o.queries, o.candidates}, {o.out});

  ordered_json summary;
  summary["queries"] = order.size();
  summary["lines"] = lines;
  summary["level"] = o.level;
  summary["out"] = o.out.string();
  return summary.dump();
}

std::string run_train_toy(const TrainToyOptions& o) {
  require_path(o.corpus, "--corpus");
  require_path(o.out, "--out");
  TrainConfig cfg = train_config(o);
  ToyCorpus corpus = read_corpus(o.corpus, o.teacher_seed);
  auto csv = with_suffix(o.out, ".metrics.csv");
  auto ckpt = with_suffix(o.out, ".encoder.agre");
  TrainResult result;
  try {
    result = train_toy(corpus, cfg);
  } catch (const TrainingDiverged& e) {
    detail::write_file(csv, metrics_csv(e.history()));
    throw;
  }
  detail::write_file(csv, metrics_csv(result.history));
  result.encoder.save(ckpt);
  write_run_json(o.out, "train-toy", o.seed, train_config_json(o), {o.corpus}, {csv, ckpt});

  ordered_json summary;
  summary["examples"] = corpus.examples.size();
  summary["vocab"] = corpus.vocab;
  summary["initial"] = metrics_json(result.history.front());
  summary["final"] = metrics_json(result.history.back());
  summary["metrics"] = csv.string();
  summary["encoder"] = ckpt.string();
  return summary.dump();
}

std::string run_ablate(const TrainToyOptions& o) {
  require_path(o.corpus, "--corpus");
  require_path(o.out, "--out");
  ToyCorpus corpus = read_corpus(o.corpus, o.teacher_seed);
  struct Arm {
    const char* run;
    TrainMode mode;
    MarkerMode marker;
  };
  const Arm arms[] = {{"passage_only", TrainMode::PassageOnly, MarkerMode::A1},
                      {"A1", TrainMode::MultiGranular, MarkerMode::A1},
                      {"A2", TrainMode::MultiGranular, MarkerMode::A2},
                      {"A3", TrainMode::MultiGranular, MarkerMode::A3}};
  std::string csv =
      "run,mode,marker_mode,epochs,seed,l_psg,l_sent,total,sentence_agreement,passage_agreement,"
      "initial_sentence_agreement,initial_passage_agreement\n";
  ordered_json runs = ordered_json::array();
  for (const Arm& arm : arms) {
    TrainToyOptions arm_opts = o;
    arm_opts.mode = to_string(arm.mode);
    arm_opts.marker_mode = to_string(arm.marker);
    TrainResult r = train_toy(corpus, train_config(arm_opts));
    const EpochMetrics& first = r.history.front();
    const EpochMetrics& last = r.history.back();
    csv += std::string(arm.run) + "," + to_string(arm.mode) + "," + to_string(arm.marker) + "," +
           std::to_string(o.epochs) + "," + std::to_string(o.seed) + "," + fmt("%.9g", last.l_psg) + "," +
           fmt("%.9g", last.l_sent) + "," + fmt("%.9g", last.total) + "," + fmt("%.6f", last.sentence_agreement) +
           "," + fmt("%.6f", last.passage_agreement) + "," + fmt("%.6f", first.sentence_agreement) + "," +
           fmt("%.6f", first.passage_agreement) + "\n";
    ordered_json j = metrics_json(last);
    j["run"] = arm.run;
    runs.push_back(std::move(j));
  }
  auto out = with_suffix(o.out, ".ablation.csv");
  detail::write_file(out, csv);
  ordered_json c = train_config_json(o);
  c.erase("mode");
  c.erase("marker_mode");
  write_run_json(o.out, "ablate", o.seed, std::move(c), {o.corpus}, {out});

  ordered_json summary;
  summary["runs"] = std::move(runs);
  summary["csv"] = out.string();
  return summary.dump();
}

std::string run_cite(const CiteOptions& o) {
  require_path(o.answers, "--answers");
  require_path(o.answer_encodings, "--answer-encodings");
  require_path(o.contexts, "--contexts");
  require_path(o.out, "--out");
  const CiteVariant variant = parse_cite_variant(o.variant);
  RankingConfig cfg;
  cfg.citation_margin = o.margin;
  cfg.validate();

  auto specs = read_answers(o.answers);
  PassageIndex contexts = read_passages(o.contexts);
  std::map<std::string, const PassageRecord*> by_id;
  std::vector<const PassageRecord*> all;
  for (const auto& r : contexts.records) {
    by_id[r.id] = &r;
    all.push_back(&r);
  }
  std::map<std::string, std::vector<const PassageRecord*>> per_query;
  if (!o.context_map.empty()) {
    for (auto& [qid, ids] : read_id_lists(o.context_map)) {
      auto& list = per_query[qid];
      for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorKind::Data, "context '" + id + "' for '" + qid + "' is not in the index");
        list.push_back(it->second);
      }
    }
  }

  auto load = [](const std::filesystem::path& p) {
    std::map<std::string, EmbeddingMatrix> m;
    for (auto& q : read_queries(p).records) m.try_emplace(q.id, std::move(q.embeddings));
    return m;
  };
  auto encodings = load(o.answer_encodings);
  std::map<std::string, EmbeddingMatrix> isolated;
  if (variant == CiteVariant::PropIsolatedEncoding) {
    require_path(o.isolated_encodings, "--isolated-encodings");
    isolated = load(o.isolated_encodings);
  }

  std::string out;
  std::size_t sentences = 0, citations = 0;
  ordered_json unsupported = ordered_json::array();
  for (const auto& spec : specs) {
    std::vector<const PassageRecord*> ctx = all;
    if (!o.context_map.empty()) {
      auto it = per_query.find(spec.query_id);
      if (it == per_query.end()) throw Error(ErrorKind::Data, "no contexts listed for '" + spec.query_id + "'");
      ctx = it->second;
    }
    std::vector<std::string> ctx_ids;
    for (const auto* c : ctx) ctx_ids.push_back(c->id);

    GeneratedAnswer answer;
    answer.query_id = spec.query_id;
    for (std::size_t s = 0; s < spec.sentences.size(); ++s) {
      const std::string key = spec.query_id + "/" + std::to_string(s);
      auto it = encodings.find(key);
      if (it == encodings.end()) throw Error(ErrorKind::Data, "missing encoding for sentence '" + key + "'");
      AnswerSentence as;
      as.text = spec.sentences[s].text;
      as.encoding = it->second;
      for (std::size_t p = 0; p < spec.sentences[s].propositions.size(); ++p) {
        PropositionMask mask{0, spec.sentences[s].propositions[p]};
        if (mask.tokens.empty()) throw Error(ErrorKind::Data, "empty proposition " + std::to_string(p) + " in '" + key + "'");
        for (std::size_t t = 1; t < mask.tokens.size(); ++t)
          if (mask.tokens[t] <= mask.tokens[t - 1])
            throw Error(ErrorKind::Data, "proposition tokens not strictly increasing in '" + key + "'");
        if (mask.tokens.back() >= as.encoding.rows())
          throw Error(ErrorKind::InvalidSpan, "proposition " + std::to_string(p) + " of '" + key +
                                                  "' indexes past the sentence encoding");
        as.propositions.push_back(std::move(mask));
        if (variant == CiteVariant::PropIsolatedEncoding) {
          auto iso = isolated.find(key + "/" + std::to_string(p));
          if (iso == isolated.end())
            throw Error(ErrorKind::Data, "missing isolated encoding for '" + key + "/" + std::to_string(p) + "'");
          as.isolated_encodings.push_back(iso->second);
        }
      }
      answer.sentences.push_back(std::move(as));
    }
    CitationResult result = cite_answer(answer, ctx, variant, cfg);
    for (std::size_t s = 0; s < result.sentences.size(); ++s) {
      ++sentences;
      citations += result.sentences[s].cited.size();
      if (result.sentences[s].no_propositions) unsupported.push_back(spec.query_id + "/" + std::to_string(s));
    }
    out += encode_citation(result, spec, ctx_ids, variant, o.margin);
    out += '\n';
  }
  detail::write_file(o.out, out);

  ordered_json c;
  c["answers"] = o.answers.string();
  c["answer_encodings"] = o.answer_encodings.string();
  c["isolated_encodings"] = o.isolated_encodings.string();
  c["contexts"] = o.contexts.string();
  c["context_map"] = o.context_map.string();
  c["variant"] = o.variant;
  c["margin"] = o.margin;
  write_run_json(o.out, "cite", nullptr, std::move(c),
                 {o.answers, o.answer_encodings, o.isolated_encodings, o.contexts, o.context_map}, {o.out});

  ordered_json summary;
  summary["answers"] = specs.size();
  summary["sentences"] = sentences;
  summary["citations"] = citations;
  summary["sentences_without_propositions"] = std::move(unsupported);
  summary["out"] = o.out.string();
  return summary.dump();
}

std::string run_eval(const EvalOptions& o) {
  if (o.rankings.empty() == o.citations.empty())
    throw Error(ErrorKind::InvalidArgument, "pass exactly one of --rankings or --citations");
  ordered_json summary;
  std::string csv, table;
  ordered_json c;
  c["run"] = o.run;
  std::vector<std::filesystem::path> inputs;

  if (!o.rankings.empty()) {
    require_path(o.qrels, "--qrels");
    RankingFile file = read_rankings(o.rankings);
    Qrels qrels = read_qrels(o.qrels);
    MetricRow row;
    row.run = o.run;
    row.level = file.level;
    row.queries = file.queries.size();
    row.first = precision_at_1(file.queries, qrels);
    row.second = recall_at_5(file.queries, qrels);
    csv = ranking_report_csv(std::span<const MetricRow>(&row, 1));
    table = ranking_report_table(std::span<const MetricRow>(&row, 1));
    summary["level"] = file.level;
    summary["queries"] = row.queries;
    summary["p_at_1"] = row.first;
    summary["r_at_5"] = row.second;
    c["rankings"] = o.rankings.string();
    c["qrels"] = o.qrels.string();
    inputs = {o.rankings, o.qrels};
  } else {
    require_path(o.contexts, "--contexts");
    auto entries = read_citations(o.citations);
    PassageIndex contexts = read_passages(o.contexts);
    std::map<std::string, std::string> texts;
    for (const auto& r : contexts.records) texts[r.id] = passage_text(r);
    std::vector<CitedAnswer> answers;
    for (auto& e : entries) {
      CitedAnswer a;
      a.query_id = e.query_id;
      for (const auto& id : e.context_ids) {
        auto it = texts.find(id);
        if (it == texts.end()) throw Error(ErrorKind::Data, "context '" + id + "' is not in the index");
        a.contexts.push_back(it->second);
      }
      a.sentences = std::move(e.sentences);
      answers.push_back(std::move(a));
    }
    TokenCoverageOracle oracle;
    CitationScores s = citation_scores(answers, oracle);
    MetricRow row;
    row.run = o.run;
    row.level = "citation";
    row.queries = answers.size();
    row.first = s.precision;
    row.second = s.recall;
    row.first_defined = s.precision_defined;
    csv = citation_report_csv(std::span<const MetricRow>(&row, 1));
    table = citation_report_table(std::span<const MetricRow>(&row, 1));
    summary["answers"] = answers.size();
    summary["sentences"] = s.sentences;
    summary["citations"] = s.citations;
    summary["precision"] = s.precision;
    summary["recall"] = s.recall;
    summary["precision_defined"] = s.precision_defined;
    c["citations"] = o.citations.string();
    c["contexts"] = o.contexts.string();
    c["oracle"] = "token_coverage";
    inputs = {o.citations, o.contexts};
  }
  if (!o.report.empty()) {
    detail::write_file(o.report, csv);
    write_run_json(o.report, "eval", nullptr, std::move(c), inputs, {o.report});
  }
  summary["csv"] = csv;
  summary["table"] = table;
  return summary.dump();
}

std::string run_synth_corpus(const SynthCorpusOptions& o) {
  require_path(o.out, "--out");
  ToyCorpus corpus = synth_corpus(o.config);
  auto corpus_path = with_suffix(o.out, ".corpus.jsonl");
  auto passages_path = with_suffix(o.out, ".passages.jsonl");
  auto queries_path = with_suffix(o.out, ".queries.jsonl");
  auto qrels_path = with_suffix(o.out, ".qrels.tsv");
  auto cands_path = with_suffix(o.out, ".candidates.tsv");
  write_corpus(corpus, corpus_path);

  std::string passages, queries, qrels, cands;
  for (const auto& ex : corpus.examples) {
    ordered_json q;
    q["id"] = ex.query_id;
    q["tokens"] = ex.query_tokens;
    queries += q.dump() + "\n";
    qrels += ex.query_id + "\t" + ex.answer + "\n";
    cands += ex.query_id;
    for (const auto& p : ex.passages) {
      cands += " " + p.id;
      ordered_json j;
      j["id"] = p.id;
      j["sentences"] = p.sentence_texts;
      ordered_json toks = ordered_json::array();
      for (const auto& s : p.sentences)
        toks.push_back(std::vector<std::uint32_t>(p.tokens.begin() + s.start, p.tokens.begin() + s.end));
      j["tokens"] = std::move(toks);
      passages += j.dump() + "\n";
    }
    cands += "\n";
  }
  detail::write_file(passages_path, passages);
  detail::write_file(queries_path, queries);
  detail::write_file(qrels_path, qrels);
  detail::write_file(cands_path, cands);

  const auto& cfg = o.config;
  ordered_json c;
  c["queries"] = cfg.queries;
  c["passages"] = cfg.passages;
  c["sentences"] = cfg.sentences;
  c["sentence_length"] = cfg.sentence_length;
  c["query_length"] = cfg.query_length;
  c["filler_vocab"] = cfg.filler_vocab;
  c["seed"] = cfg.seed;
  write_run_json(o.out, "synth-corpus", cfg.seed, std::move(c), {},
                 {corpus_path, passages_path, queries_path, qrels_path, cands_path});

  ordered_json summary;
  summary["examples"] = corpus.examples.size();
  summary["vocab"] = corpus.vocab;
  summary["corpus"] = corpus_path.string();
  return summary.dump();
}

std::string run_synth_citations(const SynthCitationsOptions& o) {
  require_path(o.out, "--out");
  auto bench = synth_citations(o.config);
  std::vector<PassageRecord> contexts;
  std::vector<QueryEncoding> sentences, isolated;
  std::vector<AnswerSpec> answers;
  std::string context_map;
  for (auto& q : bench) {
    context_map += q.answer.query_id;
    for (auto& c : q.contexts) {
      context_map += " " + c.id;
      contexts.push_back(std::move(c));
    }
    context_map += "\n";
    AnswerSpec spec;
    spec.query_id = q.answer.query_id;
    for (std::size_t s = 0; s < q.answer.sentences.size(); ++s) {
      auto& as = q.answer.sentences[s];
      const std::string key = spec.query_id + "/" + std::to_string(s);
      AnswerSentenceSpec ss;
      ss.text = as.text;
      for (const auto& m : as.propositions) ss.propositions.push_back(m.tokens);
      for (std::size_t p = 0; p < as.isolated_encodings.size(); ++p)
        isolated.push_back({key + "/" + std::to_string(p), Marker::Passage, std::move(as.isolated_encodings[p])});
      sentences.push_back({key, Marker::Passage, std::move(as.encoding)});
      spec.sentences.push_back(std::move(ss));
    }
    answers.push_back(std::move(spec));
  }
  auto ctx_path = with_suffix(o.out, ".contexts.agrv");
  auto ans_path = with_suffix(o.out, ".answers.jsonl");
  auto enc_path = with_suffix(o.out, ".answers.agrv");
  auto iso_path = with_suffix(o.out, ".isolated.agrv");
  auto map_path = with_suffix(o.out, ".context_map.tsv");
  write_index(std::span<const PassageRecord>(contexts), ctx_path);
  write_index(std::span<const QueryEncoding>(sentences), enc_path);
  write_index(std::span<const QueryEncoding>(isolated), iso_path);
  write_answers(answers, ans_path);
  detail::write_file(map_path, context_map);

  const auto& cfg = o.config;
  ordered_json c;
  c["queries"] = cfg.queries;
  c["contexts"] = cfg.contexts;
  c["facts_per_context"] = cfg.facts_per_context;
  c["sentences"] = cfg.sentences;
  c["max_propositions"] = cfg.max_propositions;
  c["words_per_fact"] = cfg.words_per_fact;
  c["same_source_rate"] = cfg.same_source_rate;
  c["dim"] = cfg.dim;
  c["paraphrase_rate"] = cfg.paraphrase_rate;
  c["hallucination_rate"] = cfg.hallucination_rate;
  c["context_noise"] = cfg.context_noise;
  c["sentence_noise"] = cfg.sentence_noise;
  c["isolated_noise"] = cfg.isolated_noise;
  c["seed"] = cfg.seed;
  write_run_json(o.out, "synth-citations", cfg.seed, std::move(c), {},
                 {ctx_path, sidecar_path(ctx_path), ans_path, enc_path, iso_path, map_path});

  ordered_json summary;
  summary["answers"] = answers.size();
  summary["contexts"] = contexts.size();
  summary["sentence_encodings"] = sentences.size();
  summary["isolated_encodings"] = isolated.size();
  return summary.dump();
}

}  // namespace agrame
