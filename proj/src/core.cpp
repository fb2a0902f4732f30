#include "agrame/core.hpp"

#include <cmath>
#include <string>

namespace agrame {
namespace {

double row_norm(std::span<const double> row) {
  double acc = 0.0;
  for (double v : row) acc += v * v;
  return std::sqrt(acc);
}

void check_shape(std::size_t rows, std::size_t dim, std::size_t size) {
  if (rows == 0 || dim == 0)
    throw Error(ErrorKind::InvalidArgument, "embedding matrix must have at least one row and one column");
  if (size != rows * dim)
    throw Error(ErrorKind::InvalidArgument,
                "embedding data size " + std::to_string(size) + " does not match " +
                    std::to_string(rows) + "x" + std::to_string(dim));
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<double> data)
    : rows_(rows), dim_(dim), data_(std::move(data)) {
  check_shape(rows_, dim_, data_.size());
  for (double v : data_)
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite embedding entry");
  for (std::size_t i = 0; i < rows_; ++i) {
    double n = row_norm(row(i));
    if (std::abs(n - 1.0) > kUnitNormTolerance)
      throw Error(ErrorKind::InvalidArgument,
                  "row " + std::to_string(i) + " is not unit-norm (norm " + std::to_string(n) + ")");
  }
}

EmbeddingMatrix EmbeddingMatrix::normalized(std::size_t rows, std::size_t dim,
                                            std::vector<double> data) {
  check_shape(rows, dim, data.size());
  for (std::size_t i = 0; i < rows; ++i) {
    std::span<double> r(data.data() + i * dim, dim);
    double n = row_norm(r);
    if (!(n > 0.0) || !std::isfinite(n))
      throw Error(ErrorKind::InvalidArgument, "zero-norm row " + std::to_string(i));
    for (double& v : r) v /= n;
  }
  return EmbeddingMatrix(rows, dim, std::move(data));
}

const char* marker_name(Marker m) noexcept {
  return m == Marker::Passage ? "passage" : "sentence";
}

void RankingConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw Error(ErrorKind::InvalidArgument, "alpha must be a finite non-negative number");
  if (!(citation_margin >= 0.0) || !std::isfinite(citation_margin))
    throw Error(ErrorKind::InvalidArgument, "citation margin must be a finite non-negative number");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw Error(ErrorKind::InvalidArgument, "temperature must be positive");
}

std::vector<Violation> validate_passage(const PassageRecord& record) {
  std::vector<Violation> out;
  auto add = [&out](const char* field, std::size_t index, std::string msg) {
    out.push_back({field, index, std::move(msg)});
  };

  const auto& m = record.embeddings;
  const std::size_t tokens = m.rows();
  if (tokens == 0 || m.dim() == 0) add("embeddings", 0, "empty embedding matrix");
  for (std::size_t i = 0; i < tokens; ++i) {
    double n = row_norm(m.row(i));
    if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitNormTolerance)
      add("embeddings", i, "row not unit-norm");
  }

  const auto& spans = record.sentences;
  if (spans.empty()) add("sentences", 0, "no sentence spans");
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.start >= s.end) add("sentences", i, "empty span at index " + std::to_string(i));
    if (s.end > tokens) add("sentences", i, "span out of range at index " + std::to_string(i));
    std::uint32_t expected_start = i == 0 ? 0 : spans[i - 1].end;
    if (s.start < expected_start)
      add("sentences", i, "overlapping spans at index " + std::to_string(i));
    else if (s.start > expected_start)
      add("sentences", i, "gap before span at index " + std::to_string(i));
  }
  if (!spans.empty() && spans.back().end != tokens && spans.back().end <= tokens)
    add("sentences", spans.size() - 1, "spans do not cover all tokens");

  if (!record.sentence_texts.empty() && record.sentence_texts.size() != spans.size())
    add("sentence_texts", record.sentence_texts.size(), "sentence text count differs from span count");

  for (std::size_t k = 0; k < record.propositions.size(); ++k) {
    const auto& p = record.propositions[k];
    if (p.tokens.empty()) {
      add("propositions", k, "empty proposition");
      continue;
    }
    bool increasing = true;
    for (std::size_t t = 1; t < p.tokens.size(); ++t)
      if (p.tokens[t] <= p.tokens[t - 1]) increasing = false;
    if (!increasing) add("propositions", k, "proposition tokens not strictly increasing");

    bool in_range = true;
    for (auto t : p.tokens)
      if (t >= tokens) in_range = false;
    if (!in_range) add("propositions", k, "token index out of range");

    if (p.sentence >= spans.size()) {
      add("propositions", k, "proposition references missing sentence " + std::to_string(p.sentence));
      continue;
    }
    const auto& s = spans[p.sentence];
    for (auto t : p.tokens) {
      if (t < tokens && (t < s.start || t >= s.end)) {
        add("propositions", k, "token outside sentence span");
        break;
      }
    }
  }
  return out;
}

EmbeddingMatrix RowView::to_matrix() const {
  std::vector<double> data;
  data.reserve(size() * dim());
  for (std::size_t k = 0; k < size(); ++k) {
    auto r = row(k);
    data.insert(data.end(), r.begin(), r.end());
  }
  return EmbeddingMatrix(size(), dim(), std::move(data));
}

RowView span_slice(const EmbeddingMatrix& matrix, const SentenceSpan& span) {
  if (span.start >= span.end || span.end > matrix.rows())
    throw Error(ErrorKind::InvalidSpan, "invalid span");
  return RowView(matrix, span.start, span.size());
}

RowView span_slice(const EmbeddingMatrix& matrix, const PropositionMask& mask) {
  if (mask.tokens.empty()) throw Error(ErrorKind::InvalidSpan, "invalid span");
  for (std::size_t t = 0; t < mask.tokens.size(); ++t) {
    if (mask.tokens[t] >= matrix.rows() || (t > 0 && mask.tokens[t] <= mask.tokens[t - 1]))
      throw Error(ErrorKind::InvalidSpan, "invalid span");
  }
  return RowView(matrix, mask.tokens);
}

}  // namespace agrame
