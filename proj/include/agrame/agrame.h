#ifndef AGRAME_AGRAME_H
#define AGRAME_AGRAME_H

/* Stable C interface of the agrame shared library. Every call that can fail
 * returns an agrame_status; the message of the most recent failure on the
 * calling thread is available from agrame_last_error(). Strings returned
 * through char** belong to the caller and are released with
 * agrame_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(AGRAME_BUILDING_LIBRARY)
#define AGRAME_API __attribute__((visibility("default")))
#else
#define AGRAME_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum agrame_status {
  AGRAME_OK = 0,
  AGRAME_ERR_INVALID_ARGUMENT = 1,
  AGRAME_ERR_INVALID_SPAN = 2,
  AGRAME_ERR_DIM_MISMATCH = 3,
  AGRAME_ERR_MARKER_MISMATCH = 4,
  AGRAME_ERR_IO = 5,
  AGRAME_ERR_FORMAT = 6,
  AGRAME_ERR_CORRUPT = 7,
  AGRAME_ERR_DATA = 8,
  AGRAME_ERR_DIVERGED = 9,
  AGRAME_ERR_INTERNAL = 10
} agrame_status;

AGRAME_API const char* agrame_version(void);
AGRAME_API const char* agrame_status_name(agrame_status status);
AGRAME_API const char* agrame_last_error(void);
AGRAME_API void agrame_string_free(char* s);

/* Passage index loaded with its spans sidecar. */
typedef struct agrame_index agrame_index;

AGRAME_API agrame_status agrame_index_open(const char* path, agrame_index** out);
AGRAME_API void agrame_index_close(agrame_index* index);
AGRAME_API agrame_status agrame_index_info(const agrame_index* index, uint32_t* dim, uint32_t* record_count);
/* The id stays valid until the index is closed. */
AGRAME_API agrame_status agrame_index_record_id(const agrame_index* index, uint32_t record, const char** id);
AGRAME_API agrame_status agrame_index_find(const agrame_index* index, const char* id, uint32_t* record);
AGRAME_API agrame_status agrame_index_sentence_count(const agrame_index* index, uint32_t record, uint32_t* count);
AGRAME_API agrame_status agrame_index_proposition_count(const agrame_index* index, uint32_t record,
                                                        uint32_t* count);

/* Query rows are row-major, rows x dim, each of unit norm. */
AGRAME_API agrame_status agrame_maxsim(const float* query, uint32_t query_rows, const float* unit,
                                       uint32_t unit_rows, uint32_t dim, double* score);
AGRAME_API agrame_status agrame_score_passage(const agrame_index* index, uint32_t record, const float* query,
                                              uint32_t query_rows, uint32_t dim, double* score);
/* Sentence relevance uses the sentence-marker query rows. */
AGRAME_API agrame_status agrame_score_sentence(const agrame_index* index, uint32_t record, uint32_t sentence,
                                               const float* query_prime, uint32_t query_rows, uint32_t dim,
                                               double* score);
AGRAME_API agrame_status agrame_score_combined(const agrame_index* index, uint32_t record, uint32_t sentence,
                                               const float* query_prime, const float* query_default,
                                               uint32_t query_rows, uint32_t dim, double alpha, double* score);
AGRAME_API agrame_status agrame_score_proposition(const agrame_index* index, uint32_t record,
                                                  uint32_t proposition, const float* query, uint32_t query_rows,
                                                  uint32_t dim, double* score);

/* Citation threshold on precomputed context scores. *chosen is -1 when the
 * citation is withheld. */
AGRAME_API agrame_status agrame_choose_citation(const double* scores, size_t count, double margin,
                                                int64_t* chosen);

/* Pipelines. Each *_init fills the defaults; unset path fields are NULL.
 * On success *summary_json receives a JSON object describing the run. */

typedef struct agrame_index_options {
  const char* passages;
  const char* embeddings;
  const char* out;
  const char* kind;
  const char* encoder;
  uint64_t vocab;
  uint64_t input_dim;
  uint64_t dim;
  uint64_t seed;
  const char* markers;
  uint64_t expect_dim;
} agrame_index_options;

typedef struct agrame_rank_options {
  const char* index;
  const char* queries;
  const char* level;
  double alpha;
  uint64_t top_k;
  int breakdown;
  const char* candidates;
  const char* out;
} agrame_rank_options;

typedef struct agrame_train_options {
  const char* corpus;
  const char* mode;
  const char* marker_mode;
  uint64_t epochs;
  double learning_rate;
  uint64_t seed;
  uint64_t input_dim;
  uint64_t dim;
  double marker_scale;
  double temperature;
  double alpha;
  uint64_t teacher_seed;
  const char* out;
} agrame_train_options;

typedef struct agrame_cite_options {
  const char* answers;
  const char* answer_encodings;
  const char* isolated_encodings;
  const char* contexts;
  const char* context_map;
  const char* variant;
  double margin;
  const char* out;
} agrame_cite_options;

typedef struct agrame_eval_options {
  const char* rankings;
  const char* citations;
  const char* qrels;
  const char* contexts;
  const char* report;
  const char* run;
} agrame_eval_options;

typedef struct agrame_synth_corpus_options {
  uint64_t queries;
  uint64_t passages;
  uint64_t sentences;
  uint64_t sentence_length;
  uint64_t query_length;
  uint64_t filler_vocab;
  uint64_t seed;
  const char* out;
} agrame_synth_corpus_options;

typedef struct agrame_synth_citations_options {
  uint64_t queries;
  uint64_t contexts;
  uint64_t facts_per_context;
  uint64_t sentences;
  uint64_t max_propositions;
  uint64_t words_per_fact;
  double same_source_rate;
  uint64_t dim;
  double paraphrase_rate;
  double hallucination_rate;
  double context_noise;
  double sentence_noise;
  double isolated_noise;
  uint64_t seed;
  const char* out;
} agrame_synth_citations_options;

AGRAME_API void agrame_index_options_init(agrame_index_options* o);
AGRAME_API void agrame_rank_options_init(agrame_rank_options* o);
AGRAME_API void agrame_train_options_init(agrame_train_options* o);
AGRAME_API void agrame_cite_options_init(agrame_cite_options* o);
AGRAME_API void agrame_eval_options_init(agrame_eval_options* o);
AGRAME_API void agrame_synth_corpus_options_init(agrame_synth_corpus_options* o);
AGRAME_API void agrame_synth_citations_options_init(agrame_synth_citations_options* o);

AGRAME_API agrame_status agrame_run_index(const agrame_index_options* o, char** summary_json);
AGRAME_API agrame_status agrame_run_rank(const agrame_rank_options* o, char** summary_json);
AGRAME_API agrame_status agrame_run_train_toy(const agrame_train_options* o, char** summary_json);
AGRAME_API agrame_status agrame_run_ablate(const agrame_train_options* o, char** summary_json);
AGRAME_API agrame_status agrame_run_cite(const agrame_cite_options* o, char** summary_json);
AGRAME_API agrame_status agrame_run_eval(const agrame_eval_options* o, char** summary_json);
AGRAME_API agrame_status agrame_run_synth_corpus(const agrame_synth_corpus_options* o, char** summary_json);
AGRAME_API agrame_status agrame_run_synth_citations(const agrame_synth_citations_options* o,
                                                    char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
