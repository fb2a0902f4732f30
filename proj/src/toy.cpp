#include "agrame/toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "agrame/parallel.hpp"
#include "binio.hpp"
#include "rng.hpp"

namespace agrame {
namespace {

constexpr std::string_view kEncoderMagic = "AGRE";
constexpr std::uint32_t kEncoderVersion = 1;

// Double-precision forward pass of one token sequence, kept for backprop.
struct Encoded {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> x;  // rows x input_dim
  std::vector<double> norm;
  std::vector<double> z;  // rows x dim, unit rows

  const double* row(std::size_t i) const { return z.data() + i * dim; }
};

Encoded encode(const ToyEncoder& enc, std::span<const std::uint32_t> tokens, EncodeRole role) {
  const std::size_t din = enc.input_dim();
  const std::size_t d = enc.dim();
  auto p = enc.params();
  Encoded e;
  e.rows = tokens.size();
  e.dim = d;
  e.x.assign(e.rows * din, 0.0);
  e.norm.assign(e.rows, 0.0);
  e.z.assign(e.rows * d, 0.0);
  const double* marker = p.data() + enc.marker_offset(role);
  const double* proj = p.data() + enc.projection_offset();
  for (std::size_t t = 0; t < e.rows; ++t) {
    if (tokens[t] >= enc.vocab())
      throw Error(ErrorKind::InvalidArgument, "token id " + std::to_string(tokens[t]) + " out of range for vocab " +
                                                  std::to_string(enc.vocab()));
    const double* emb = p.data() + enc.embed_offset(tokens[t]);
    double* x = e.x.data() + t * din;
    for (std::size_t b = 0; b < din; ++b) x[b] = emb[b] + marker[b];
    double* z = e.z.data() + t * d;
    double sq = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      double acc = 0.0;
      for (std::size_t b = 0; b < din; ++b) acc += proj[a * din + b] * x[b];
      z[a] = acc;
      sq += acc * acc;
    }
    double n = std::sqrt(sq);
    if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorKind::InvalidArgument, "zero-norm row");
    e.norm[t] = n;
    for (std::size_t a = 0; a < d; ++a) z[a] /= n;
  }
  return e;
}

// Adds the parameter gradient for d(loss)/d(z) = dz.
void backward(const ToyEncoder& enc, std::span<const std::uint32_t> tokens, EncodeRole role, const Encoded& e,
              std::span<const double> dz, std::span<double> grad) {
  const std::size_t din = enc.input_dim();
  const std::size_t d = enc.dim();
  const double* proj = enc.params().data() + enc.projection_offset();
  double* gproj = grad.data() + enc.projection_offset();
  double* gmarker = grad.data() + enc.marker_offset(role);
  std::vector<double> dy(d), dx(din);
  for (std::size_t t = 0; t < e.rows; ++t) {
    const double* z = e.row(t);
    const double* g = dz.data() + t * d;
    double proj_on_z = 0.0;
    bool any = false;
    for (std::size_t a = 0; a < d; ++a) {
      proj_on_z += z[a] * g[a];
      any = any || g[a] != 0.0;
    }
    if (!any) continue;
    for (std::size_t a = 0; a < d; ++a) dy[a] = (g[a] - z[a] * proj_on_z) / e.norm[t];
    const double* x = e.x.data() + t * din;
    std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < din; ++b) {
        gproj[a * din + b] += dy[a] * x[b];
        dx[b] += proj[a * din + b] * dy[a];
      }
    }
    double* gemb = grad.data() + enc.embed_offset(tokens[t]);
    for (std::size_t b = 0; b < din; ++b) {
      gemb[b] += dx[b];
      gmarker[b] += dx[b];
    }
  }
}

struct MaxsimTrace {
  double score = 0.0;
  std::vector<std::size_t> argmax;  // absolute row in the unit's encoding
};

MaxsimTrace trace_maxsim(const Encoded& q, const Encoded& p, std::size_t lo, std::size_t hi, double* min_gap) {
  MaxsimTrace tr;
  tr.argmax.resize(q.rows);
  for (std::size_t i = 0; i < q.rows; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    double second = -std::numeric_limits<double>::infinity();
    std::size_t best_j = lo;
    for (std::size_t j = lo; j < hi; ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < q.dim; ++a) s += q.row(i)[a] * p.row(j)[a];
      if (s > best) {
        second = best;
        best = s;
        best_j = j;
      } else if (s > second) {
        second = s;
      }
    }
    tr.score += best;
    tr.argmax[i] = best_j;
    if (min_gap) *min_gap = std::min(*min_gap, best - second);
  }
  return tr;
}

// Gradient flows only through each query row's argmax token.
void maxsim_backward(const MaxsimTrace& tr, const Encoded& q, const Encoded& p, double g, std::vector<double>& dq,
                     std::vector<double>& dp) {
  if (g == 0.0) return;
  for (std::size_t i = 0; i < q.rows; ++i) {
    std::size_t j = tr.argmax[i];
    for (std::size_t a = 0; a < q.dim; ++a) {
      dq[i * q.dim + a] += g * p.row(j)[a];
      dp[j * p.dim + a] += g * q.row(i)[a];
    }
  }
}

std::string render_token(char cls, std::size_t idx) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%04zu", cls, idx);
  return buf;
}

}  // namespace

ToyEncoder::ToyEncoder(std::size_t vocab, std::size_t input_dim, std::size_t dim)
    : vocab_(vocab), input_dim_(input_dim), dim_(dim), params_(vocab * input_dim + dim * input_dim + 3 * input_dim) {
  if (vocab == 0 || input_dim == 0 || dim == 0)
    throw Error(ErrorKind::InvalidArgument, "toy encoder dimensions must be positive");
}

ToyEncoder ToyEncoder::random(std::size_t vocab, std::size_t input_dim, std::size_t dim, std::uint64_t seed,
                              double marker_scale) {
  ToyEncoder enc(vocab, input_dim, dim);
  detail::Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(input_dim));
  auto p = enc.params();
  std::size_t k = 0;
  for (; k < enc.marker_offset(EncodeRole::QueryDefault); ++k) p[k] = s * rng.normal();
  for (; k < p.size(); ++k) p[k] = marker_scale * s * rng.normal();
  return enc;
}

void ToyEncoder::save(const std::filesystem::path& path) const {
  detail::ByteWriter w;
  w.bytes(kEncoderMagic);
  w.u32(kEncoderVersion);
  w.u32(static_cast<std::uint32_t>(vocab_));
  w.u32(static_cast<std::uint32_t>(input_dim_));
  w.u32(static_cast<std::uint32_t>(dim_));
  for (double v : params_) w.f32(static_cast<float>(v));
  detail::write_file(path, w.buffer());
}

ToyEncoder ToyEncoder::load(const std::filesystem::path& path) {
  std::string data = detail::read_file(path);
  detail::ByteReader r(data);
  if (r.remaining() < kEncoderMagic.size() || r.bytes(kEncoderMagic.size()) != kEncoderMagic)
    throw Error(ErrorKind::Format, "not an AGRE encoder checkpoint");
  if (r.u32() != kEncoderVersion) throw Error(ErrorKind::Format, "unsupported encoder checkpoint version");
  std::size_t vocab = r.u32(), din = r.u32(), dim = r.u32();
  ToyEncoder enc(vocab, din, dim);
  for (double& v : enc.params_) v = r.f32();
  if (r.remaining() != 0) throw Error(ErrorKind::Corrupt, "corrupt encoder checkpoint: trailing bytes");
  return enc;
}

EmbeddingMatrix toy_forward(const ToyEncoder& encoder, std::span<const std::uint32_t> tokens, EncodeRole role) {
  if (tokens.empty()) throw Error(ErrorKind::InvalidArgument, "empty token sequence");
  Encoded e = encode(encoder, tokens, role);
  std::vector<double> data(e.z.begin(), e.z.end());
  return EmbeddingMatrix::normalized(e.rows, e.dim, std::move(data));
}

EncodeRole training_sentence_role(MarkerMode mode) {
  return mode == MarkerMode::A3 ? EncodeRole::QueryDefault : EncodeRole::QuerySentence;
}

EncodeRole ranking_sentence_role(TrainMode train, MarkerMode mode) {
  if (train == TrainMode::PassageOnly) return EncodeRole::QueryDefault;
  return mode == MarkerMode::A1 ? EncodeRole::QuerySentence : EncodeRole::QueryDefault;
}

LossReport toy_loss(const ToyEncoder& encoder, const ToyExample& example, const ToyLossOptions& options,
                    std::span<double> gradient, double* min_gap) {
  if (!gradient.empty() && gradient.size() != encoder.params().size())
    throw Error(ErrorKind::InvalidArgument, "gradient buffer size mismatch");
  if (min_gap) *min_gap = std::numeric_limits<double>::infinity();
  const EncodeRole sent_role = training_sentence_role(options.marker_mode);
  Encoded q_def = encode(encoder, example.query_tokens, EncodeRole::QueryDefault);
  Encoded q_sent = encode(encoder, example.query_tokens, sent_role);

  const std::size_t n = example.passages.size();
  std::vector<Encoded> enc_p(n);
  std::vector<MaxsimTrace> psg_trace(n);
  std::vector<std::vector<MaxsimTrace>> sent_trace(n);
  StudentScores student;
  student.passage.resize(n);
  student.sentence.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ToyPassage& p = example.passages[i];
    enc_p[i] = encode(encoder, p.tokens, EncodeRole::Passage);
    psg_trace[i] = trace_maxsim(q_def, enc_p[i], 0, enc_p[i].rows, min_gap);
    student.passage[i] = psg_trace[i].score;
    for (const auto& s : p.sentences) {
      if (s.start >= s.end || s.end > p.tokens.size())
        throw Error(ErrorKind::InvalidSpan, "invalid span in passage '" + p.id + "'");
      sent_trace[i].push_back(trace_maxsim(q_sent, enc_p[i], s.start, s.end, min_gap));
      student.sentence[i].push_back(sent_trace[i].back().score);
    }
  }

  LossGradient lg;
  LossReport report = loss_from_scores(student, example.teacher, options.temperature, gradient.empty() ? nullptr : &lg);
  if (gradient.empty()) return report;

  const bool sentence_terms = options.mode == TrainMode::MultiGranular;
  std::vector<double> dq_def(q_def.z.size(), 0.0), dq_sent(q_sent.z.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> dp(enc_p[i].z.size(), 0.0);
    maxsim_backward(psg_trace[i], q_def, enc_p[i], lg.passage[i], dq_def, dp);
    if (sentence_terms)
      for (std::size_t j = 0; j < sent_trace[i].size(); ++j)
        maxsim_backward(sent_trace[i][j], q_sent, enc_p[i], lg.sentence[i][j], dq_sent, dp);
    backward(encoder, example.passages[i].tokens, EncodeRole::Passage, enc_p[i], dp, gradient);
  }
  backward(encoder, example.query_tokens, EncodeRole::QueryDefault, q_def, dq_def, gradient);
  if (sentence_terms) backward(encoder, example.query_tokens, sent_role, q_sent, dq_sent, gradient);
  return report;
}

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& loss,
                           std::span<const double> analytic, std::span<double> params, double epsilon) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3))
    throw Error(ErrorKind::InvalidArgument, "grad_check epsilon must lie in [1e-6, 1e-3]");
  if (analytic.size() != params.size()) throw Error(ErrorKind::InvalidArgument, "gradient size mismatch");
  GradCheckResult result;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + epsilon;
    const double up = loss(params);
    params[k] = saved - epsilon;
    const double down = loss(params);
    params[k] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), kGradCheckFloor});
    const double rel = std::abs(analytic[k] - numeric) / denom;
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = k;
    }
  }
  return result;
}

TeacherScores synth_teacher(const ToyExample& example, std::uint64_t seed) {
  detail::Rng rng(seed);
  TeacherScores t;
  for (const auto& p : example.passages) {
    auto labels = synth_sentence_labels(p.sentence_texts, example.answer);
    auto& scores = t.sentence_scores.emplace_back();
    bool any = false;
    for (int l : labels) {
      scores.push_back(5.0 * l + rng.uniform(-0.1, 0.1));
      any = any || l == 1;
    }
    t.passage_scores.push_back((any ? 5.0 : 0.0) + rng.uniform(-0.1, 0.1));
  }
  return t;
}

ToyCorpus synth_corpus(const SynthCorpusConfig& cfg) {
  if (cfg.queries < 2 || cfg.passages < 2 || cfg.sentences < 1 || cfg.sentence_length < 3 || cfg.query_length < 1 ||
      cfg.filler_vocab < 1)
    throw Error(ErrorKind::InvalidArgument, "synthetic corpus needs >=2 queries, >=2 passages, sentences of >=3 tokens");
  const std::size_t n_topic = cfg.queries * cfg.query_length;
  const std::size_t answer_base = n_topic;
  const std::size_t filler_base = answer_base + cfg.queries;
  ToyCorpus corpus;
  corpus.vocab = filler_base + cfg.filler_vocab;

  auto word = [&](std::uint32_t tok) {
    if (tok < answer_base) return render_token('t', tok);
    if (tok < filler_base) return render_token('a', tok - answer_base);
    return render_token('f', tok - filler_base);
  };
  auto topic = [&](std::size_t q, std::size_t k) { return static_cast<std::uint32_t>(q * cfg.query_length + k); };
  auto answer = [&](std::size_t q) { return static_cast<std::uint32_t>(answer_base + q); };

  detail::Rng rng(cfg.seed);
  auto filler = [&] { return static_cast<std::uint32_t>(filler_base + rng.below(cfg.filler_vocab)); };
  auto other_query = [&](std::size_t q) {
    std::size_t o = rng.below(cfg.queries - 1);
    return o >= q ? o + 1 : o;
  };
  // Sentence of filler tokens with the given content tokens at random slots.
  auto sentence = [&](std::vector<std::uint32_t> content) {
    std::vector<std::uint32_t> s(cfg.sentence_length);
    for (auto& t : s) t = filler();
    std::vector<std::size_t> slots(cfg.sentence_length);
    for (std::size_t k = 0; k < slots.size(); ++k) slots[k] = k;
    rng.shuffle(slots);
    for (std::size_t k = 0; k < content.size() && k < slots.size(); ++k) s[slots[k]] = content[k];
    return s;
  };
  auto topic_pair = [&](std::size_t q) {
    std::vector<std::uint32_t> ks(cfg.query_length);
    for (std::size_t k = 0; k < ks.size(); ++k) ks[k] = topic(q, k);
    rng.shuffle(ks);
    ks.resize(std::min<std::size_t>(2, ks.size()));
    return ks;
  };

  for (std::size_t q = 0; q < cfg.queries; ++q) {
    ToyExample ex;
    char qid[16];
    std::snprintf(qid, sizeof qid, "q%03zu", q);
    ex.query_id = qid;
    for (std::size_t k = 0; k < cfg.query_length; ++k) ex.query_tokens.push_back(topic(q, k));
    ex.answer = word(answer(q));

    const std::size_t positive = rng.below(cfg.passages);
    for (std::size_t i = 0; i < cfg.passages; ++i) {
      std::vector<std::vector<std::uint32_t>> sents;
      if (i == positive) {
        sents.push_back(sentence({answer(q)}));
        for (int k = 0; k < 2 && sents.size() < cfg.sentences; ++k) sents.push_back(sentence(topic_pair(q)));
      } else {
        sents.push_back(sentence(topic_pair(other_query(q))));
        if (sents.size() < cfg.sentences) sents.push_back(sentence({answer(other_query(q))}));
        if (sents.size() < cfg.sentences && rng.below(2) == 0)
          sents.push_back(sentence({topic(q, rng.below(cfg.query_length))}));
      }
      while (sents.size() < cfg.sentences) sents.push_back(sentence({}));
      rng.shuffle(sents);

      ToyPassage p;
      p.id = ex.query_id + "-p" + std::to_string(i);
      for (const auto& s : sents) {
        auto start = static_cast<std::uint32_t>(p.tokens.size());
        std::string text;
        for (auto t : s) {
          p.tokens.push_back(t);
          if (!text.empty()) text += ' ';
          text += word(t);
        }
        p.sentences.push_back({start, static_cast<std::uint32_t>(p.tokens.size())});
        p.sentence_texts.push_back(std::move(text));
      }
      ex.passages.push_back(std::move(p));
    }
    ex.teacher = synth_teacher(ex, detail::mix_seed(cfg.seed, q));
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

EpochMetrics evaluate_toy(const ToyEncoder& encoder, const ToyCorpus& corpus, const TrainConfig& cfg) {
  const std::size_t n = corpus.examples.size();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "empty corpus");
  const EncodeRole rank_role = ranking_sentence_role(cfg.mode, cfg.marker_mode);
  const ToyLossOptions opts{cfg.mode, cfg.marker_mode, cfg.ranking.temperature};

  std::vector<LossReport> reports(n);
  std::vector<int> psg_hit(n, 0), sent_hit(n, 0);
  parallel_for(n, [&](std::size_t e) {
    const ToyExample& ex = corpus.examples[e];
    reports[e] = toy_loss(encoder, ex, opts);
    Encoded q_def = encode(encoder, ex.query_tokens, EncodeRole::QueryDefault);
    Encoded q_rank = encode(encoder, ex.query_tokens, rank_role);

    const auto& tp = ex.teacher.passage_scores;
    const std::size_t t_psg = static_cast<std::size_t>(std::max_element(tp.begin(), tp.end()) - tp.begin());
    const auto& ts = ex.teacher.sentence_scores[t_psg];
    const std::size_t t_sent = static_cast<std::size_t>(std::max_element(ts.begin(), ts.end()) - ts.begin());

    double best_psg = -std::numeric_limits<double>::infinity();
    double best_sent = -std::numeric_limits<double>::infinity();
    std::size_t arg_psg = 0, arg_sent_p = 0, arg_sent_s = 0;
    for (std::size_t i = 0; i < ex.passages.size(); ++i) {
      const ToyPassage& p = ex.passages[i];
      Encoded enc_p = encode(encoder, p.tokens, EncodeRole::Passage);
      double psg = trace_maxsim(q_def, enc_p, 0, enc_p.rows, nullptr).score;
      if (psg > best_psg) {
        best_psg = psg;
        arg_psg = i;
      }
      for (std::size_t j = 0; j < p.sentences.size(); ++j) {
        double s = trace_maxsim(q_rank, enc_p, p.sentences[j].start, p.sentences[j].end, nullptr).score +
                   cfg.ranking.alpha * psg;
        if (s > best_sent) {
          best_sent = s;
          arg_sent_p = i;
          arg_sent_s = j;
        }
      }
    }
    psg_hit[e] = arg_psg == t_psg;
    sent_hit[e] = arg_sent_p == t_psg && arg_sent_s == t_sent;
  });

  EpochMetrics m;
  for (std::size_t e = 0; e < n; ++e) {
    m.l_psg += reports[e].l_psg;
    m.l_sent += reports[e].l_sent;
    m.total += reports[e].total;
    m.passage_agreement += psg_hit[e];
    m.sentence_agreement += sent_hit[e];
  }
  const double inv = 1.0 / static_cast<double>(n);
  m.l_psg *= inv;
  m.l_sent *= inv;
  m.total *= inv;
  m.passage_agreement *= inv;
  m.sentence_agreement *= inv;
  return m;
}

TrainResult train_toy(const ToyCorpus& corpus, const TrainConfig& cfg) {
  return train_toy(corpus, cfg, ToyEncoder::random(corpus.vocab, cfg.input_dim, cfg.dim, cfg.seed, cfg.marker_scale));
}

TrainResult train_toy(const ToyCorpus& corpus, const TrainConfig& cfg, ToyEncoder initial) {
  if (corpus.examples.empty()) throw Error(ErrorKind::InvalidArgument, "empty corpus");
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
    throw Error(ErrorKind::InvalidArgument, "learning rate must be a finite non-negative number");
  cfg.ranking.validate();
  if (initial.vocab() < corpus.vocab) throw Error(ErrorKind::InvalidArgument, "encoder vocab smaller than corpus vocab");

  TrainResult result{std::move(initial), {}};
  auto check = [&](const EpochMetrics& m) {
    if (!std::isfinite(m.total) || !std::isfinite(m.l_psg) || !std::isfinite(m.l_sent))
      throw TrainingDiverged("training diverged at epoch " + std::to_string(m.epoch), result.history);
  };
  EpochMetrics m0 = evaluate_toy(result.encoder, corpus, cfg);
  check(m0);
  result.history.push_back(m0);

  const std::size_t n = corpus.examples.size();
  const std::size_t np = result.encoder.params().size();
  const ToyLossOptions opts{cfg.mode, cfg.marker_mode, cfg.ranking.temperature};
  std::vector<std::vector<double>> grads(n, std::vector<double>(np));
  std::vector<double> total(np);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    parallel_for(n, [&](std::size_t e) {
      std::fill(grads[e].begin(), grads[e].end(), 0.0);
      toy_loss(result.encoder, corpus.examples[e], opts, grads[e]);
    });
    std::fill(total.begin(), total.end(), 0.0);
    for (const auto& g : grads)
      for (std::size_t k = 0; k < np; ++k) total[k] += g[k];
    auto params = result.encoder.params();
    const double step = cfg.learning_rate / static_cast<double>(n);
    for (std::size_t k = 0; k < np; ++k) params[k] -= step * total[k];

    EpochMetrics m;
    try {
      m = evaluate_toy(result.encoder, corpus, cfg);
    } catch (const Error& e) {
      // non-finite parameters surface as degenerate rows
      throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) + ": " + e.what(),
                             result.history);
    }
    m.epoch = epoch;
    check(m);
    result.history.push_back(m);
  }
  return result;
}

std::string metrics_csv(std::span<const EpochMetrics> history) {
  std::ostringstream out;
  out << "epoch,l_psg,l_sent,total,sentence_agreement,passage_agreement\n";
  char buf[256];
  for (const auto& m : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.6f,%.6f\n", m.epoch, m.l_psg, m.l_sent, m.total,
                  m.sentence_agreement, m.passage_agreement);
    out << buf;
  }
  return out.str();
}

const char* to_string(TrainMode m) noexcept {
  return m == TrainMode::PassageOnly ? "passage_only" : "multi_granular";
}

const char* to_string(MarkerMode m) noexcept {
  switch (m) {
    case MarkerMode::A1:
      return "A1";
    case MarkerMode::A2:
      return "A2";
    case MarkerMode::A3:
      return "A3";
  }
  return "A1";
}

TrainMode parse_train_mode(const std::string& s) {
  if (s == "passage_only") return TrainMode::PassageOnly;
  if (s == "multi_granular") return TrainMode::MultiGranular;
  throw Error(ErrorKind::InvalidArgument, "unknown training mode '" + s + "'");
}

MarkerMode parse_marker_mode(const std::string& s) {
  if (s == "A1") return MarkerMode::A1;
  if (s == "A2") return MarkerMode::A2;
  if (s == "A3") return MarkerMode::A3;
  throw Error(ErrorKind::InvalidArgument, "unknown marker mode '" + s + "'");
}

}  // namespace agrame
