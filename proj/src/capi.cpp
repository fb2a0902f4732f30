#include "agrame/agrame.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <new>
#include <string>

#include "agrame/pipelines.hpp"
#include "agrame/propcite.hpp"
#include "agrame/scorer.hpp"
#include "agrame/storage.hpp"

struct agrame_index {
  agrame::PassageIndex index;
  std::map<std::string, std::uint32_t> by_id;
};

namespace {

thread_local std::string g_last_error;

agrame_status to_status(agrame::ErrorKind kind) {
  using agrame::ErrorKind;
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return AGRAME_ERR_INVALID_ARGUMENT;
    case ErrorKind::InvalidSpan:
      return AGRAME_ERR_INVALID_SPAN;
    case ErrorKind::DimMismatch:
      return AGRAME_ERR_DIM_MISMATCH;
    case ErrorKind::MarkerMismatch:
      return AGRAME_ERR_MARKER_MISMATCH;
    case ErrorKind::Io:
      return AGRAME_ERR_IO;
    case ErrorKind::Format:
      return AGRAME_ERR_FORMAT;
    case ErrorKind::Corrupt:
      return AGRAME_ERR_CORRUPT;
    case ErrorKind::Data:
      return AGRAME_ERR_DATA;
    case ErrorKind::Diverged:
      return AGRAME_ERR_DIVERGED;
  }
  return AGRAME_ERR_INTERNAL;
}

template <class Fn>
agrame_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return AGRAME_OK;
  } catch (const agrame::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return AGRAME_ERR_INTERNAL;
}

void require(bool ok, const char* what) {
  if (!ok) throw agrame::Error(agrame::ErrorKind::InvalidArgument, what);
}

std::string str(const char* s) { return s ? s : ""; }

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

const agrame::PassageRecord& record_at(const agrame_index* index, std::uint32_t record) {
  require(index != nullptr, "null index");
  if (record >= index->index.records.size())
    throw agrame::Error(agrame::ErrorKind::InvalidArgument, "record " + std::to_string(record) + " out of range");
  return index->index.records[record];
}

agrame::EmbeddingMatrix rows_of(const float* data, std::uint32_t rows, std::uint32_t dim) {
  require(data != nullptr, "null embedding pointer");
  return agrame::EmbeddingMatrix(rows, dim, std::vector<double>(data, data + std::size_t{rows} * dim));
}

agrame::QueryEncoding query_of(const float* data, std::uint32_t rows, std::uint32_t dim, agrame::Marker m) {
  return {"", m, rows_of(data, rows, dim)};
}

template <class Opts, class Fn>
agrame_status run_pipeline(const Opts* o, char** summary_json, Fn&& fn) {
  return guarded([&] {
    require(o != nullptr, "null options");
    require(summary_json != nullptr, "null summary pointer");
    *summary_json = nullptr;
    *summary_json = dup(fn(*o));
  });
}

}  // namespace

extern "C" {

const char* agrame_version(void) { return agrame::library_version(); }

const char* agrame_status_name(agrame_status status) {
  switch (status) {
    case AGRAME_OK:
      return "ok";
    case AGRAME_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case AGRAME_ERR_INVALID_SPAN:
      return "invalid_span";
    case AGRAME_ERR_DIM_MISMATCH:
      return "dim_mismatch";
    case AGRAME_ERR_MARKER_MISMATCH:
      return "marker_mismatch";
    case AGRAME_ERR_IO:
      return "io";
    case AGRAME_ERR_FORMAT:
      return "format";
    case AGRAME_ERR_CORRUPT:
      return "corrupt";
    case AGRAME_ERR_DATA:
      return "data";
    case AGRAME_ERR_DIVERGED:
      return "diverged";
    case AGRAME_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* agrame_last_error(void) { return g_last_error.c_str(); }

void agrame_string_free(char* s) { std::free(s); }

agrame_status agrame_index_open(const char* path, agrame_index** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    auto h = std::make_unique<agrame_index>();
    h->index = agrame::read_passages(path);
    for (std::uint32_t i = 0; i < h->index.records.size(); ++i) h->by_id.emplace(h->index.records[i].id, i);
    *out = h.release();
  });
}

void agrame_index_close(agrame_index* index) { delete index; }

agrame_status agrame_index_info(const agrame_index* index, uint32_t* dim, uint32_t* record_count) {
  return guarded([&] {
    require(index != nullptr, "null index");
    if (dim) *dim = index->index.manifest.dim;
    if (record_count) *record_count = index->index.manifest.record_count;
  });
}

agrame_status agrame_index_record_id(const agrame_index* index, uint32_t record, const char** id) {
  return guarded([&] {
    require(id != nullptr, "null argument");
    *id = record_at(index, record).id.c_str();
  });
}

agrame_status agrame_index_find(const agrame_index* index, const char* id, uint32_t* record) {
  return guarded([&] {
    require(index != nullptr && id != nullptr && record != nullptr, "null argument");
    auto it = index->by_id.find(id);
    if (it == index->by_id.end()) throw agrame::Error(agrame::ErrorKind::Data, std::string("no record '") + id + "'");
    *record = it->second;
  });
}

agrame_status agrame_index_sentence_count(const agrame_index* index, uint32_t record, uint32_t* count) {
  return guarded([&] {
    require(count != nullptr, "null argument");
    *count = static_cast<std::uint32_t>(record_at(index, record).sentences.size());
  });
}

agrame_status agrame_index_proposition_count(const agrame_index* index, uint32_t record, uint32_t* count) {
  return guarded([&] {
    require(count != nullptr, "null argument");
    *count = static_cast<std::uint32_t>(record_at(index, record).propositions.size());
  });
}

agrame_status agrame_maxsim(const float* query, uint32_t query_rows, const float* unit, uint32_t unit_rows,
                            uint32_t dim, double* score) {
  return guarded([&] {
    require(score != nullptr, "null argument");
    auto q = rows_of(query, query_rows, dim);
    auto u = rows_of(unit, unit_rows, dim);
    *score = agrame::maxsim(q, agrame::RowView(u));
  });
}

agrame_status agrame_score_passage(const agrame_index* index, uint32_t record, const float* query,
                                   uint32_t query_rows, uint32_t dim, double* score) {
  return guarded([&] {
    require(score != nullptr, "null argument");
    const auto& p = record_at(index, record);
    *score = agrame::score_passage(query_of(query, query_rows, dim, agrame::Marker::Passage), p);
  });
}

agrame_status agrame_score_sentence(const agrame_index* index, uint32_t record, uint32_t sentence,
                                    const float* query_prime, uint32_t query_rows, uint32_t dim, double* score) {
  return guarded([&] {
    require(score != nullptr, "null argument");
    const auto& p = record_at(index, record);
    *score = agrame::score_sentence_in_passage(query_of(query_prime, query_rows, dim, agrame::Marker::Sentence), p,
                                               sentence);
  });
}

agrame_status agrame_score_combined(const agrame_index* index, uint32_t record, uint32_t sentence,
                                    const float* query_prime, const float* query_default, uint32_t query_rows,
                                    uint32_t dim, double alpha, double* score) {
  return guarded([&] {
    require(score != nullptr, "null argument");
    const auto& p = record_at(index, record);
    agrame::RankingConfig cfg;
    cfg.alpha = alpha;
    *score = agrame::combined_sentence_score(query_of(query_prime, query_rows, dim, agrame::Marker::Sentence),
                                             query_of(query_default, query_rows, dim, agrame::Marker::Passage), p,
                                             sentence, cfg);
  });
}

agrame_status agrame_score_proposition(const agrame_index* index, uint32_t record, uint32_t proposition,
                                       const float* query, uint32_t query_rows, uint32_t dim, double* score) {
  return guarded([&] {
    require(score != nullptr, "null argument");
    const auto& p = record_at(index, record);
    *score = agrame::score_proposition(query_of(query, query_rows, dim, agrame::Marker::Passage), p, proposition);
  });
}

agrame_status agrame_choose_citation(const double* scores, size_t count, double margin, int64_t* chosen) {
  return guarded([&] {
    require(chosen != nullptr && (scores != nullptr || count == 0), "null argument");
    require(margin >= 0.0, "citation margin must be non-negative");
    auto c = agrame::choose_citation(std::span<const double>(scores, count), margin);
    *chosen = c.chosen ? static_cast<std::int64_t>(*c.chosen) : -1;
  });
}

void agrame_index_options_init(agrame_index_options* o) {
  if (!o) return;
  agrame::IndexOptions d;
  *o = {};
  o->embeddings = "toy-encode";
  o->kind = "passages";
  o->vocab = d.vocab;
  o->input_dim = d.input_dim;
  o->dim = d.dim;
  o->seed = d.seed;
  o->markers = "both";
  o->expect_dim = d.expect_dim;
}

void agrame_rank_options_init(agrame_rank_options* o) {
  if (!o) return;
  agrame::RankOptions d;
  *o = {};
  o->level = "passage";
  o->alpha = d.alpha;
  o->top_k = d.top_k;
  o->breakdown = d.breakdown ? 1 : 0;
}

void agrame_train_options_init(agrame_train_options* o) {
  if (!o) return;
  agrame::TrainToyOptions d;
  *o = {};
  o->mode = "multi_granular";
  o->marker_mode = "A1";
  o->epochs = d.epochs;
  o->learning_rate = d.learning_rate;
  o->seed = d.seed;
  o->input_dim = d.input_dim;
  o->dim = d.dim;
  o->marker_scale = d.marker_scale;
  o->temperature = d.temperature;
  o->alpha = d.alpha;
  o->teacher_seed = d.teacher_seed;
}

void agrame_cite_options_init(agrame_cite_options* o) {
  if (!o) return;
  agrame::CiteOptions d;
  *o = {};
  o->variant = "propcite";
  o->margin = d.margin;
}

void agrame_eval_options_init(agrame_eval_options* o) {
  if (!o) return;
  *o = {};
  o->run = "run";
}

void agrame_synth_corpus_options_init(agrame_synth_corpus_options* o) {
  if (!o) return;
  agrame::SynthCorpusConfig d;
  *o = {};
  o->queries = d.queries;
  o->passages = d.passages;
  o->sentences = d.sentences;
  o->sentence_length = d.sentence_length;
  o->query_length = d.query_length;
  o->filler_vocab = d.filler_vocab;
  o->seed = d.seed;
}

void agrame_synth_citations_options_init(agrame_synth_citations_options* o) {
  if (!o) return;
  agrame::SynthCitationConfig d;
  *o = {};
  o->queries = d.queries;
  o->contexts = d.contexts;
  o->facts_per_context = d.facts_per_context;
  o->sentences = d.sentences;
  o->max_propositions = d.max_propositions;
  o->words_per_fact = d.words_per_fact;
  o->same_source_rate = d.same_source_rate;
  o->dim = d.dim;
  o->paraphrase_rate = d.paraphrase_rate;
  o->hallucination_rate = d.hallucination_rate;
  o->context_noise = d.context_noise;
  o->sentence_noise = d.sentence_noise;
  o->isolated_noise = d.isolated_noise;
  o->seed = d.seed;
}

agrame_status agrame_run_index(const agrame_index_options* o, char** summary_json) {
  return run_pipeline(o, summary_json, [](const agrame_index_options& c) {
    agrame::IndexOptions x;
    x.passages = str(c.passages);
    if (c.embeddings) x.embeddings = c.embeddings;
    x.out = str(c.out);
    if (c.kind) x.kind = c.kind;
    x.encoder = str(c.encoder);
    x.vocab = c.vocab;
    x.input_dim = c.input_dim;
    x.dim = c.dim;
    x.seed = c.seed;
    if (c.markers) x.markers = c.markers;
    x.expect_dim = c.expect_dim;
    return agrame::run_index(x);
  });
}

agrame_status agrame_run_rank(const agrame_rank_options* o, char** summary_json) {
  return run_pipeline(o, summary_json, [](const agrame_rank_options& c) {
    agrame::RankOptions x;
    x.index = str(c.index);
    x.queries = str(c.queries);
    if (c.level) x.level = c.level;
    x.alpha = c.alpha;
    x.top_k = c.top_k;
    x.breakdown = c.breakdown != 0;
    x.candidates = str(c.candidates);
    x.out = str(c.out);
    return agrame::run_rank(x);
  });
}

namespace {
agrame::TrainToyOptions train_options(const agrame_train_options& c) {
  agrame::TrainToyOptions x;
  x.corpus = str(c.corpus);
  if (c.mode) x.mode = c.mode;
  if (c.marker_mode) x.marker_mode = c.marker_mode;
  x.epochs = c.epochs;
  x.learning_rate = c.learning_rate;
  x.seed = c.seed;
  x.input_dim = c.input_dim;
  x.dim = c.dim;
  x.marker_scale = c.marker_scale;
  x.temperature = c.temperature;
  x.alpha = c.alpha;
  x.teacher_seed = c.teacher_seed;
  x.out = str(c.out);
  return x;
}
}  // namespace

agrame_status agrame_run_train_toy(const agrame_train_options* o, char** summary_json) {
  return run_pipeline(o, summary_json,
                      [](const agrame_train_options& c) { return agrame::run_train_toy(train_options(c)); });
}

agrame_status agrame_run_ablate(const agrame_train_options* o, char** summary_json) {
  return run_pipeline(o, summary_json,
                      [](const agrame_train_options& c) { return agrame::run_ablate(train_options(c)); });
}

agrame_status agrame_run_cite(const agrame_cite_options* o, char** summary_json) {
  return run_pipeline(o, summary_json, [](const agrame_cite_options& c) {
    agrame::CiteOptions x;
    x.answers = str(c.answers);
    x.answer_encodings = str(c.answer_encodings);
    x.isolated_encodings = str(c.isolated_encodings);
    x.contexts = str(c.contexts);
    x.context_map = str(c.context_map);
    if (c.variant) x.variant = c.variant;
    x.margin = c.margin;
    x.out = str(c.out);
    return agrame::run_cite(x);
  });
}

agrame_status agrame_run_eval(const agrame_eval_options* o, char** summary_json) {
  return run_pipeline(o, summary_json, [](const agrame_eval_options& c) {
    agrame::EvalOptions x;
    x.rankings = str(c.rankings);
    x.citations = str(c.citations);
    x.qrels = str(c.qrels);
    x.contexts = str(c.contexts);
    x.report = str(c.report);
    if (c.run) x.run = c.run;
    return agrame::run_eval(x);
  });
}

agrame_status agrame_run_synth_corpus(const agrame_synth_corpus_options* o, char** summary_json) {
  return run_pipeline(o, summary_json, [](const agrame_synth_corpus_options& c) {
    agrame::SynthCorpusOptions x;
    x.config.queries = c.queries;
    x.config.passages = c.passages;
    x.config.sentences = c.sentences;
    x.config.sentence_length = c.sentence_length;
    x.config.query_length = c.query_length;
    x.config.filler_vocab = c.filler_vocab;
    x.config.seed = c.seed;
    x.out = str(c.out);
    return agrame::run_synth_corpus(x);
  });
}

agrame_status agrame_run_synth_citations(const agrame_synth_citations_options* o, char** summary_json) {
  return run_pipeline(o, summary_json, [](const agrame_synth_citations_options& c) {
    agrame::SynthCitationsOptions x;
    auto& k = x.config;
    k.queries = c.queries;
    k.contexts = c.contexts;
    k.facts_per_context = c.facts_per_context;
    k.sentences = c.sentences;
    k.max_propositions = c.max_propositions;
    k.words_per_fact = c.words_per_fact;
    k.same_source_rate = c.same_source_rate;
    k.dim = c.dim;
    k.paraphrase_rate = c.paraphrase_rate;
    k.hallucination_rate = c.hallucination_rate;
    k.context_noise = c.context_noise;
    k.sentence_noise = c.sentence_noise;
    k.isolated_noise = c.isolated_noise;
    k.seed = c.seed;
    x.out = str(c.out);
    return agrame::run_synth_citations(x);
  });
}

}  // extern "C"
