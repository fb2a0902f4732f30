#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "agrame/error.hpp"

namespace agrame {

inline constexpr double kUnitNormTolerance = 1e-4;

// Token-level vectors for one query or one retrieval unit. Rows are unit-norm
// so that a dot product is a cosine; construction rejects anything else.
// Held in double; index files round to binary32.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  // Throws Error(InvalidArgument) unless rows >= 1, dim >= 1, data has
  // rows*dim finite entries and every row norm is within 1e-4 of one.
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<double> data);

  // Same as the constructor but normalizes every row first. Zero rows throw.
  static EmbeddingMatrix normalized(std::size_t rows, std::size_t dim,
                                    std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

// Half-open token range [start, end) of one sentence within a passage.
struct SentenceSpan {
  std::uint32_t start = 0;
  std::uint32_t end = 0;

  std::uint32_t size() const noexcept { return end - start; }
  friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

// Absolute token indices of one proposition. Masks may overlap each other.
struct PropositionMask {
  std::uint32_t sentence = 0;
  std::vector<std::uint32_t> tokens;

  friend bool operator==(const PropositionMask&, const PropositionMask&) = default;
};

struct PassageRecord {
  std::string id;
  std::optional<std::string> text;
  // One entry per sentence span when present; used for answer matching.
  std::vector<std::string> sentence_texts;
  EmbeddingMatrix embeddings;
  std::vector<SentenceSpan> sentences;
  std::vector<PropositionMask> propositions;

  friend bool operator==(const PassageRecord&, const PassageRecord&) = default;
};

enum class Marker : std::uint8_t {
  Passage = 0,   // default query marker, passage-level relevance
  Sentence = 1,  // in-passage sentence-level relevance
};

const char* marker_name(Marker m) noexcept;

struct QueryEncoding {
  std::string id;
  Marker marker = Marker::Passage;
  EmbeddingMatrix embeddings;

  friend bool operator==(const QueryEncoding&, const QueryEncoding&) = default;
};

struct RankingConfig {
  double alpha = 1.0;
  double citation_margin = 1.0;
  double temperature = 1.0;

  // Throws Error(InvalidArgument) on a negative alpha or margin, or a
  // non-positive temperature.
  void validate() const;
};

struct Violation {
  std::string field;
  std::size_t index = 0;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

std::vector<Violation> validate_passage(const PassageRecord& record);

// Rows of an EmbeddingMatrix selected by a span or a mask. Borrows the
// matrix; the matrix must outlive the view.
class RowView {
 public:
  explicit RowView(const EmbeddingMatrix& m) noexcept
      : matrix_(&m), first_(0), count_(m.rows()) {}

  std::size_t size() const noexcept {
    return indices_.empty() ? count_ : indices_.size();
  }
  std::size_t dim() const noexcept { return matrix_->dim(); }

  // Absolute row index in the underlying matrix of the k-th selected row.
  std::size_t source_index(std::size_t k) const noexcept {
    return indices_.empty() ? first_ + k : indices_[k];
  }
  std::span<const double> row(std::size_t k) const noexcept {
    return matrix_->row(source_index(k));
  }

  EmbeddingMatrix to_matrix() const;

 private:
  friend RowView span_slice(const EmbeddingMatrix&, const SentenceSpan&);
  friend RowView span_slice(const EmbeddingMatrix&, const PropositionMask&);

  RowView(const EmbeddingMatrix& m, std::size_t first, std::size_t count) noexcept
      : matrix_(&m), first_(first), count_(count) {}
  RowView(const EmbeddingMatrix& m, std::vector<std::uint32_t> indices)
      : matrix_(&m), first_(0), count_(0), indices_(std::move(indices)) {}

  const EmbeddingMatrix* matrix_;
  std::size_t first_;
  std::size_t count_;
  std::vector<std::uint32_t> indices_;
};

// Throws Error(InvalidSpan, "invalid span") when the span or mask does not
// fit the matrix.
RowView span_slice(const EmbeddingMatrix& matrix, const SentenceSpan& span);
RowView span_slice(const EmbeddingMatrix& matrix, const PropositionMask& mask);

}  // namespace agrame
