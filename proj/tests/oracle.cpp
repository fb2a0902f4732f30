#include "oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace oracle {

Rows rows_of(const agrame::EmbeddingMatrix& m) {
  Rows out(m.rows(), std::vector<double>(m.dim()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = 0; k < m.dim(); ++k) out[i][k] = m.data()[i * m.dim() + k];
  return out;
}

std::vector<double> token_max(const Rows& q, const Rows& p, const std::vector<std::size_t>& pick) {
  std::vector<double> out;
  for (const auto& qi : q) {
    double best = -std::numeric_limits<double>::infinity();
    for (auto j : pick) {
      double dot = 0.0;
      for (std::size_t k = 0; k < qi.size(); ++k) dot += qi[k] * p[j][k];
      if (dot > best) best = dot;
    }
    out.push_back(best);
  }
  return out;
}

double maxsim(const Rows& q, const Rows& p, const std::vector<std::size_t>& pick) {
  double total = 0.0;
  for (double v : token_max(q, p, pick)) total += v;
  return total;
}

double maxsim(const Rows& q, const Rows& p) {
  std::vector<std::size_t> all(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) all[j] = j;
  return maxsim(q, p, all);
}

std::vector<std::size_t> span_rows(const agrame::SentenceSpan& s) {
  std::vector<std::size_t> out;
  for (auto t = s.start; t < s.end; ++t) out.push_back(t);
  return out;
}

namespace {

// exp(x_i) / sum exp(x_j), no shift; inputs here are small.
std::vector<double> plain_softmax(const std::vector<double>& x) {
  double z = 0.0;
  for (double v : x) z += std::exp(v);
  std::vector<double> out;
  for (double v : x) out.push_back(std::exp(v) / z);
  return out;
}

double plain_kl(const std::vector<double>& t, const std::vector<double>& s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) sum += t[i] * (std::log(t[i]) - std::log(s[i]));
  return sum;
}

}  // namespace

LossParts loss_stack(const Rows& q_default, const Rows& q_prime, const std::vector<OraclePassage>& passages,
                     const std::vector<double>& teacher_passage,
                     const std::vector<std::vector<double>>& teacher_sentence) {
  std::vector<double> student_passage;
  for (const auto& p : passages) student_passage.push_back(maxsim(q_default, p.rows));
  auto t_psg = plain_softmax(teacher_passage);
  LossParts out;
  out.l_psg = plain_kl(t_psg, plain_softmax(student_passage));
  for (std::size_t i = 0; i < passages.size(); ++i) {
    std::vector<double> student_sent;
    for (const auto& s : passages[i].spans) student_sent.push_back(maxsim(q_prime, passages[i].rows, span_rows(s)));
    double l_i = plain_kl(plain_softmax(teacher_sentence[i]), plain_softmax(student_sent));
    out.l_sent += t_psg[i] * l_i;
  }
  out.total = out.l_psg + out.l_sent;
  return out;
}

LossFixture loss_fixture(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> score(-3.0, 3.0);
  LossFixture f;
  f.q_default = {"q", agrame::Marker::Passage, random_unit(rng, 3, 4)};
  f.q_prime = {"q", agrame::Marker::Sentence, random_unit(rng, 3, 4)};
  f.set.query_id = "q";
  for (int i = 0; i < 2; ++i) {
    agrame::PassageRecord p;
    p.id = "p" + std::to_string(i);
    p.embeddings = random_unit(rng, 5, 4);
    p.sentences = {{0, 2}, {2, 5}};
    f.set.passages.push_back(p);
    f.teacher.passage_scores.push_back(score(rng));
    f.teacher.sentence_scores.push_back({score(rng), score(rng)});
  }
  return f;
}

LossParts loss_stack(const LossFixture& f) {
  std::vector<OraclePassage> ps;
  for (const auto& p : f.set.passages) ps.push_back({rows_of(p.embeddings), p.sentences});
  return loss_stack(rows_of(f.q_default.embeddings), rows_of(f.q_prime.embeddings), ps, f.teacher.passage_scores,
                    f.teacher.sentence_scores);
}

agrame::ToyExample toy_fixture(std::mt19937_64& rng, std::size_t vocab) {
  std::uniform_int_distribution<std::uint32_t> tok(0, static_cast<std::uint32_t>(vocab - 1));
  std::uniform_real_distribution<double> score(-3.0, 3.0);
  agrame::ToyExample ex;
  ex.query_id = "q";
  for (int t = 0; t < 3; ++t) ex.query_tokens.push_back(tok(rng));
  for (int i = 0; i < 2; ++i) {
    agrame::ToyPassage p;
    p.id = "p" + std::to_string(i);
    for (int t = 0; t < 5; ++t) p.tokens.push_back(tok(rng));
    p.sentences = {{0, 2}, {2, 5}};
    ex.passages.push_back(p);
    ex.teacher.passage_scores.push_back(score(rng));
    ex.teacher.sentence_scores.push_back({score(rng), score(rng)});
  }
  return ex;
}

agrame::EmbeddingMatrix random_unit(std::mt19937_64& rng, std::size_t rows, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> data(rows * dim);
  for (std::size_t i = 0; i < rows; ++i) {
    double norm = 0.0;
    std::vector<double> v(dim);
    while (norm < 1e-3) {
      norm = 0.0;
      for (auto& x : v) {
        x = g(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
    }
    for (std::size_t k = 0; k < dim; ++k) data[i * dim + k] = static_cast<float>(v[k] / norm);  // representable in an index file
  }
  return agrame::EmbeddingMatrix(rows, dim, std::move(data));
}

std::vector<agrame::SentenceSpan> random_spans(std::mt19937_64& rng, std::size_t tokens,
                                               std::size_t max_sentences) {
  std::size_t count = std::uniform_int_distribution<std::size_t>(1, std::min(tokens, max_sentences))(rng);
  // choose count-1 distinct cut points in [1, tokens)
  std::vector<std::uint32_t> cuts;
  for (std::uint32_t t = 1; t < tokens; ++t) cuts.push_back(t);
  std::shuffle(cuts.begin(), cuts.end(), rng);
  cuts.resize(count - 1);
  std::sort(cuts.begin(), cuts.end());
  std::vector<agrame::SentenceSpan> spans;
  std::uint32_t start = 0;
  for (auto c : cuts) {
    spans.push_back({start, c});
    start = c;
  }
  spans.push_back({start, static_cast<std::uint32_t>(tokens)});
  return spans;
}

std::vector<agrame::PassageRecord> random_passages(std::mt19937_64& rng, std::size_t count, std::size_t dim) {
  std::uniform_int_distribution<std::size_t> tokens(1, 16);
  std::bernoulli_distribution coin(0.5);
  std::vector<agrame::PassageRecord> out;
  for (std::size_t i = 0; i < count; ++i) {
    agrame::PassageRecord p;
    p.id = "doc-" + std::to_string(i) + (coin(rng) ? "-\u00e9t\u00e9" : "");
    std::size_t m = tokens(rng);
    p.embeddings = random_unit(rng, m, dim);
    p.sentences = random_spans(rng, m, 4);
    std::size_t props = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
    for (std::size_t k = 0; k < props; ++k) {
      std::uint32_t s = std::uniform_int_distribution<std::uint32_t>(
          0, static_cast<std::uint32_t>(p.sentences.size() - 1))(rng);
      agrame::PropositionMask mask{s, {}};
      for (auto t = p.sentences[s].start; t < p.sentences[s].end; ++t)
        if (coin(rng)) mask.tokens.push_back(t);
      if (mask.tokens.empty()) mask.tokens.push_back(p.sentences[s].start);
      p.propositions.push_back(std::move(mask));
    }
    if (coin(rng)) {
      p.text = "text of \"" + p.id + "\"\n";
      for (std::size_t s = 0; s < p.sentences.size(); ++s) p.sentence_texts.push_back("sentence " + std::to_string(s));
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<agrame::QueryEncoding> random_queries(std::mt19937_64& rng, std::size_t count, std::size_t dim) {
  std::uniform_int_distribution<std::size_t> tokens(1, 16);
  std::vector<agrame::QueryEncoding> out;
  for (std::size_t i = 0; out.size() < count; ++i) {
    std::string id = "q" + std::to_string(i);
    out.push_back({id, agrame::Marker::Passage, random_unit(rng, tokens(rng), dim)});
    if (out.size() < count && i % 2 == 0)
      out.push_back({id, agrame::Marker::Sentence, random_unit(rng, tokens(rng), dim)});
  }
  return out;
}

agrame::PassageRecord fixture_passage() {
  agrame::PassageRecord p;
  p.id = "P";
  p.embeddings = agrame::EmbeddingMatrix(4, 2, {1.0, 0.0, 0.6, 0.8, 0.0, 1.0, 0.8, 0.6});
  p.sentences = {{0, 2}, {2, 4}};
  p.propositions = {{0, {1}}};
  return p;
}

agrame::QueryEncoding fixture_query(agrame::Marker marker) {
  return {"Q", marker, agrame::EmbeddingMatrix(2, 2, {1.0, 0.0, 0.0, 1.0})};
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("agrame-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace oracle
