#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "agrame/core.hpp"
#include "agrame/losses.hpp"

namespace agrame {

// Which marker embedding is added to every input token.
enum class EncodeRole : std::uint8_t {
  QueryDefault = 0,   // m_q
  QuerySentence = 1,  // m'_q
  Passage = 2,        // m_p
};

// A deliberately small stand-in encoder:
//   row_t = normalize(projection * (embed[token_t] + marker))
// All parameters live in one flat buffer:
//   embed (vocab x input_dim) | projection (dim x input_dim) | 3 markers (input_dim each)
class ToyEncoder {
 public:
  ToyEncoder() = default;
  ToyEncoder(std::size_t vocab, std::size_t input_dim, std::size_t dim);

  // Gaussian init from a fixed seed. embed ~ N(0, 1/input_dim),
  // projection ~ N(0, 1/input_dim), markers ~ N(0, marker_scale^2/input_dim).
  static ToyEncoder random(std::size_t vocab, std::size_t input_dim, std::size_t dim, std::uint64_t seed,
                           double marker_scale = 0.1);

  std::size_t vocab() const noexcept { return vocab_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  std::size_t embed_offset(std::uint32_t token) const noexcept { return token * input_dim_; }
  std::size_t projection_offset() const noexcept { return vocab_ * input_dim_; }
  std::size_t marker_offset(EncodeRole role) const noexcept {
    return projection_offset() + dim_ * input_dim_ + static_cast<std::size_t>(role) * input_dim_;
  }

  // binary32 little-endian, magic "AGRE", version, vocab, input_dim, dim,
  // then the flat parameter buffer.
  void save(const std::filesystem::path& path) const;
  static ToyEncoder load(const std::filesystem::path& path);

  friend bool operator==(const ToyEncoder&, const ToyEncoder&) = default;

 private:
  std::size_t vocab_ = 0;
  std::size_t input_dim_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> params_;
};

// Throws Error(InvalidArgument) for an out-of-range token and for a
// zero-norm row ("zero-norm row").
EmbeddingMatrix toy_forward(const ToyEncoder& encoder, std::span<const std::uint32_t> tokens, EncodeRole role);

// One training example: query tokens, k+1 passages as token sequences with
// sentence spans, and teacher scores.
struct ToyPassage {
  std::string id;
  std::vector<std::uint32_t> tokens;
  std::vector<SentenceSpan> sentences;
  std::vector<std::string> sentence_texts;
};

struct ToyExample {
  std::string query_id;
  std::vector<std::uint32_t> query_tokens;
  std::string answer;
  std::vector<ToyPassage> passages;
  TeacherScores teacher;
};

struct ToyCorpus {
  std::size_t vocab = 0;
  std::vector<ToyExample> examples;
};

enum class TrainMode : std::uint8_t { PassageOnly, MultiGranular };

// A1: train and rank sentences with m'_q. A2: train with m'_q, rank with m_q.
// A3: m_q for both.
enum class MarkerMode : std::uint8_t { A1, A2, A3 };

EncodeRole training_sentence_role(MarkerMode mode);
EncodeRole ranking_sentence_role(TrainMode train, MarkerMode mode);

struct ToyLossOptions {
  TrainMode mode = TrainMode::MultiGranular;
  MarkerMode marker_mode = MarkerMode::A1;
  double temperature = 1.0;
};

// Loss of one example under the encoder. When gradient is non-null it must
// have params().size() entries; d(loss)/d(params) is added to it. The
// optimized loss is total (multi-granular) or l_psg (passage-only); the
// report always carries every component. min_gap, when non-null, receives
// the smallest distance between the best and second-best dot product over
// every MaxSim row involved (infinity when a unit has one token).
LossReport toy_loss(const ToyEncoder& encoder, const ToyExample& example, const ToyLossOptions& options,
                    std::span<double> gradient = {}, double* min_gap = nullptr);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
};

inline constexpr double kGradCheckFloor = 1e-6;

// Central differences of loss around params, compared entry-wise with
// analytic. Relative error is |a - n| / max(|a|, |n|, 1e-6). params is
// restored before returning. epsilon must lie in [1e-6, 1e-3].
GradCheckResult grad_check(const std::function<double(std::span<const double>)>& loss,
                           std::span<const double> analytic, std::span<double> params, double epsilon);

struct SynthCorpusConfig {
  std::size_t queries = 50;
  std::size_t passages = 8;
  std::size_t sentences = 4;
  std::size_t sentence_length = 6;
  std::size_t query_length = 3;
  std::size_t filler_vocab = 200;
  std::uint64_t seed = 7;
};

// Each query owns query_length topic tokens and one answer token. Its
// positive passage has one sentence holding the answer (no topic overlap),
// two sentences with heavy topic overlap, and filler; negatives carry other
// queries' topics and answers plus at most one of this query's topic
// tokens. Teacher scores follow synth_sentence_labels: +5 for sentences (and
// passages) containing the answer, 0 otherwise, plus U(-0.1, 0.1) noise.
ToyCorpus synth_corpus(const SynthCorpusConfig& cfg);

// Teacher scores from answer containment with seeded noise.
TeacherScores synth_teacher(const ToyExample& example, std::uint64_t seed);

struct TrainConfig {
  TrainMode mode = TrainMode::MultiGranular;
  MarkerMode marker_mode = MarkerMode::A1;
  std::size_t epochs = 100;
  double learning_rate = 0.5;
  std::uint64_t seed = 1;
  std::size_t input_dim = 16;
  std::size_t dim = 16;
  double marker_scale = 0.1;
  RankingConfig ranking;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double l_psg = 0.0;
  double l_sent = 0.0;
  double total = 0.0;
  double sentence_agreement = 0.0;
  double passage_agreement = 0.0;
};

struct TrainResult {
  ToyEncoder encoder;
  std::vector<EpochMetrics> history;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, std::vector<EpochMetrics> history)
      : Error(ErrorKind::Diverged, what), history_(std::move(history)) {}
  const std::vector<EpochMetrics>& history() const noexcept { return history_; }

 private:
  std::vector<EpochMetrics> history_;
};

// Mean losses and agreement over the corpus. Passage agreement: the student's
// top passage (m_q) is the teacher's top passage. Sentence agreement: the top
// sentence by combined score across all passages is the teacher's best
// sentence inside the teacher's best passage.
EpochMetrics evaluate_toy(const ToyEncoder& encoder, const ToyCorpus& corpus, const TrainConfig& cfg);

// Full-batch gradient descent from ToyEncoder::random(seed). Row 0 of the
// history is the untrained encoder. Throws TrainingDiverged on a non-finite
// loss.
TrainResult train_toy(const ToyCorpus& corpus, const TrainConfig& cfg);
TrainResult train_toy(const ToyCorpus& corpus, const TrainConfig& cfg, ToyEncoder initial);

std::string metrics_csv(std::span<const EpochMetrics> history);

const char* to_string(TrainMode m) noexcept;
const char* to_string(MarkerMode m) noexcept;
TrainMode parse_train_mode(const std::string& s);
MarkerMode parse_marker_mode(const std::string& s);

}  // namespace agrame
