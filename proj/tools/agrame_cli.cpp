// Command-line front end. Talks to the engine only through agrame.h.
//
// Exit codes: 0 success, 2 usage error, 3 data error.

#include <cstdio>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "agrame/agrame.h"

namespace {

constexpr int kUsage = 2;
constexpr int kData = 3;

// Optional string flag whose C view stays NULL when the flag is absent.
struct Str {
  std::string value;
  const char* c() const { return value.empty() ? nullptr : value.c_str(); }
};

int finish(agrame_status status, char* summary, bool eval = false) {
  if (status != AGRAME_OK) {
    std::fprintf(stderr, "error (%s): %s\n", agrame_status_name(status), agrame_last_error());
    return status == AGRAME_ERR_INVALID_ARGUMENT ? kUsage : kData;
  }
  if (eval) {
    auto j = nlohmann::json::parse(summary);
    std::fputs(j.at("csv").get<std::string>().c_str(), stdout);
    std::fputs("\n", stdout);
    std::fputs(j.at("table").get<std::string>().c_str(), stdout);
  } else {
    std::printf("%s\n", summary);
  }
  agrame_string_free(summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-granular late-interaction ranking and citation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(agrame_version()));

  // index
  agrame_index_options io;
  agrame_index_options_init(&io);
  Str io_passages, io_embeddings{"toy-encode"}, io_out, io_kind{"passages"}, io_encoder, io_markers{"both"};
  auto* index = app.add_subcommand("index", "encode or import token rows and write an .agrv index");
  index->add_option("--passages", io_passages.value, "JSON-lines passages or queries")->required()->check(CLI::ExistingFile);
  index->add_option("--embeddings", io_embeddings.value, "toy-encode, or an .agrv file with the token rows")
      ->capture_default_str();
  index->add_option("--out", io_out.value, "output prefix")->required();
  index->add_option("--kind", io_kind.value, "passages or queries")
      ->check(CLI::IsMember({"passages", "queries"}))
      ->capture_default_str();
  index->add_option("--encoder", io_encoder.value, "toy encoder checkpoint")->check(CLI::ExistingFile);
  index->add_option("--vocab", io.vocab, "vocab of the seeded encoder")->capture_default_str();
  index->add_option("--input-dim", io.input_dim)->capture_default_str();
  index->add_option("--dim", io.dim)->capture_default_str();
  index->add_option("--seed", io.seed)->capture_default_str();
  index->add_option("--markers", io_markers.value, "queries: both, passage or sentence")
      ->check(CLI::IsMember({"both", "passage", "sentence"}))
      ->capture_default_str();
  index->add_option("--expect-dim", io.expect_dim, "fail unless the rows have this dim");

  // rank
  agrame_rank_options ro;
  agrame_rank_options_init(&ro);
  Str ro_index, ro_queries, ro_level{"passage"}, ro_candidates, ro_out;
  bool ro_breakdown = false;
  auto* rank = app.add_subcommand("rank", "rank passages, sentences or propositions");
  rank->add_option("--index", ro_index.value)->required()->check(CLI::ExistingFile);
  rank->add_option("--queries", ro_queries.value)->required()->check(CLI::ExistingFile);
  rank->add_option("--level", ro_level.value)
      ->check(CLI::IsMember({"passage", "sentence", "proposition"}))
      ->capture_default_str();
  rank->add_option("--alpha", ro.alpha, "passage-score weight for sentence ranking")->capture_default_str();
  rank->add_option("--top-k", ro.top_k)->capture_default_str();
  rank->add_flag("--breakdown", ro_breakdown, "add per-query-token maxima and argmax");
  rank->add_option("--candidates", ro_candidates.value, "per-query candidate ids")->check(CLI::ExistingFile);
  rank->add_option("--out", ro_out.value)->required();

  // train-toy and ablate share their options
  agrame_train_options to;
  agrame_train_options_init(&to);
  Str to_corpus, to_mode{"multi_granular"}, to_marker{"A1"}, to_out;
  auto add_train = [&](CLI::App* sub, bool modes) {
    sub->add_option("--corpus", to_corpus.value)->required()->check(CLI::ExistingFile);
    if (modes) {
      sub->add_option("--mode", to_mode.value)
          ->check(CLI::IsMember({"passage_only", "multi_granular"}))
          ->capture_default_str();
      sub->add_option("--marker-mode", to_marker.value)->check(CLI::IsMember({"A1", "A2", "A3"}))->capture_default_str();
    }
    sub->add_option("--epochs", to.epochs)->capture_default_str();
    sub->add_option("--lr", to.learning_rate)->capture_default_str();
    sub->add_option("--seed", to.seed)->capture_default_str();
    sub->add_option("--input-dim", to.input_dim)->capture_default_str();
    sub->add_option("--dim", to.dim)->capture_default_str();
    sub->add_option("--marker-scale", to.marker_scale)->capture_default_str();
    sub->add_option("--temperature", to.temperature)->capture_default_str();
    sub->add_option("--alpha", to.alpha)->capture_default_str();
    sub->add_option("--teacher-seed", to.teacher_seed, "noise seed when teacher scores are synthesized")
        ->capture_default_str();
    sub->add_option("--out", to_out.value, "output prefix")->required();
  };
  auto* train = app.add_subcommand("train-toy", "distill the toy encoder on a corpus");
  add_train(train, true);
  auto* ablate = app.add_subcommand("ablate", "passage_only vs multi_granular A1/A2/A3 from one seed");
  add_train(ablate, false);

  // cite
  agrame_cite_options co;
  agrame_cite_options_init(&co);
  Str co_answers, co_enc, co_iso, co_contexts, co_map, co_variant{"propcite"}, co_out;
  auto* cite = app.add_subcommand("cite", "add citations to generated answers");
  cite->add_option("--answers", co_answers.value)->required()->check(CLI::ExistingFile);
  cite->add_option("--answer-encodings", co_enc.value, "sentence encodings, ids <qid>/<sentence>")
      ->required()
      ->check(CLI::ExistingFile);
  cite->add_option("--isolated-encodings", co_iso.value, "ids <qid>/<sentence>/<proposition>")
      ->check(CLI::ExistingFile);
  cite->add_option("--contexts", co_contexts.value, "passage index of the input contexts")
      ->required()
      ->check(CLI::ExistingFile);
  cite->add_option("--context-map", co_map.value, "per-query context ids")->check(CLI::ExistingFile);
  cite->add_option("--variant", co_variant.value)
      ->check(CLI::IsMember({"propcite", "prop_isolated_encoding", "sentence_top1", "sentence_top2"}))
      ->capture_default_str();
  cite->add_option("--margin", co.margin)->capture_default_str();
  cite->add_option("--out", co_out.value)->required();

  // eval
  agrame_eval_options eo;
  agrame_eval_options_init(&eo);
  Str eo_rankings, eo_citations, eo_qrels, eo_contexts, eo_report, eo_run{"run"};
  auto* eval = app.add_subcommand("eval", "P@1/R@5 of rankings or citation precision/recall");
  auto* opt_rank = eval->add_option("--rankings", eo_rankings.value)->check(CLI::ExistingFile);
  auto* opt_cite = eval->add_option("--citations", eo_citations.value)->check(CLI::ExistingFile);
  opt_rank->excludes(opt_cite);
  eval->add_option("--qrels", eo_qrels.value)->check(CLI::ExistingFile);
  eval->add_option("--contexts", eo_contexts.value)->check(CLI::ExistingFile);
  eval->add_option("--report", eo_report.value, "write the CSV here");
  eval->add_option("--run", eo_run.value, "run label")->capture_default_str();

  // synth-corpus
  agrame_synth_corpus_options so;
  agrame_synth_corpus_options_init(&so);
  Str so_out;
  auto* synth = app.add_subcommand("synth-corpus", "write the seeded synthetic training corpus");
  synth->add_option("--queries", so.queries)->capture_default_str();
  synth->add_option("--passages", so.passages)->capture_default_str();
  synth->add_option("--sentences", so.sentences)->capture_default_str();
  synth->add_option("--sentence-length", so.sentence_length)->capture_default_str();
  synth->add_option("--query-length", so.query_length)->capture_default_str();
  synth->add_option("--filler-vocab", so.filler_vocab)->capture_default_str();
  synth->add_option("--seed", so.seed)->capture_default_str();
  synth->add_option("--out", so_out.value, "output prefix")->required();

  // synth-citations
  agrame_synth_citations_options sc;
  agrame_synth_citations_options_init(&sc);
  Str sc_out;
  auto* synth_cite = app.add_subcommand("synth-citations", "write the seeded synthetic citation benchmark");
  synth_cite->add_option("--queries", sc.queries)->capture_default_str();
  synth_cite->add_option("--contexts", sc.contexts)->capture_default_str();
  synth_cite->add_option("--facts-per-context", sc.facts_per_context)->capture_default_str();
  synth_cite->add_option("--sentences", sc.sentences)->capture_default_str();
  synth_cite->add_option("--max-propositions", sc.max_propositions)->capture_default_str();
  synth_cite->add_option("--words-per-fact", sc.words_per_fact)->capture_default_str();
  synth_cite->add_option("--same-source-rate", sc.same_source_rate)->capture_default_str();
  synth_cite->add_option("--dim", sc.dim)->capture_default_str();
  synth_cite->add_option("--paraphrase-rate", sc.paraphrase_rate)->capture_default_str();
  synth_cite->add_option("--hallucination-rate", sc.hallucination_rate)->capture_default_str();
  synth_cite->add_option("--context-noise", sc.context_noise)->capture_default_str();
  synth_cite->add_option("--sentence-noise", sc.sentence_noise)->capture_default_str();
  synth_cite->add_option("--isolated-noise", sc.isolated_noise)->capture_default_str();
  synth_cite->add_option("--seed", sc.seed)->capture_default_str();
  synth_cite->add_option("--out", sc_out.value, "output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  char* summary = nullptr;
  if (index->parsed()) {
    io.passages = io_passages.c();
    io.embeddings = io_embeddings.c();
    io.out = io_out.c();
    io.kind = io_kind.c();
    io.encoder = io_encoder.c();
    io.markers = io_markers.c();
    auto status = agrame_run_index(&io, &summary);
    return finish(status, summary);
  }
  if (rank->parsed()) {
    ro.index = ro_index.c();
    ro.queries = ro_queries.c();
    ro.level = ro_level.c();
    ro.breakdown = ro_breakdown ? 1 : 0;
    ro.candidates = ro_candidates.c();
    ro.out = ro_out.c();
    auto status = agrame_run_rank(&ro, &summary);
    return finish(status, summary);
  }
  if (train->parsed() || ablate->parsed()) {
    to.corpus = to_corpus.c();
    to.mode = to_mode.c();
    to.marker_mode = to_marker.c();
    to.out = to_out.c();
    if (train->parsed()) {
      auto status = agrame_run_train_toy(&to, &summary);
      return finish(status, summary);
    }
    auto status = agrame_run_ablate(&to, &summary);
    return finish(status, summary);
  }
  if (cite->parsed()) {
    co.answers = co_answers.c();
    co.answer_encodings = co_enc.c();
    co.isolated_encodings = co_iso.c();
    co.contexts = co_contexts.c();
    co.context_map = co_map.c();
    co.variant = co_variant.c();
    co.out = co_out.c();
    auto status = agrame_run_cite(&co, &summary);
    return finish(status, summary);
  }
  if (eval->parsed()) {
    eo.rankings = eo_rankings.c();
    eo.citations = eo_citations.c();
    eo.qrels = eo_qrels.c();
    eo.contexts = eo_contexts.c();
    eo.report = eo_report.c();
    eo.run = eo_run.c();
    auto status = agrame_run_eval(&eo, &summary);
    return finish(status, summary, true);
  }
  if (synth->parsed()) {
    so.out = so_out.c();
    auto status = agrame_run_synth_corpus(&so, &summary);
    return finish(status, summary);
  }
  if (synth_cite->parsed()) {
    sc.out = sc_out.c();
    auto status = agrame_run_synth_citations(&sc, &summary);
    return finish(status, summary);
  }
  return kUsage;
}
