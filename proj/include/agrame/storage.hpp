#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "agrame/core.hpp"

namespace agrame {

// Binary layout of <name>.agrv, all integers little-endian:
//
//   "AGRV" | version u32 | dim u32 | record_count u32 | kind u8
//   per record:
//     id_len u16 | id bytes (UTF-8) | marker u8 (query files only)
//     token_count u32 | token_count * dim binary32, row-major
//
// Passage files carry span metadata in <name>.spans.jsonl, one object per
// record in file order:
//   {"id":..,"sentences":[[s,e],..],"propositions":[{"sentence":i,"tokens":[..]},..]}
// followed by optional "text" and "sentence_texts" keys when the record has
// them.

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 17;

enum class IndexKind : std::uint8_t { Passages = 0, Queries = 1 };

struct IndexManifest {
  std::uint32_t version = kFormatVersion;
  std::uint32_t dim = 0;
  std::uint32_t record_count = 0;
  IndexKind kind = IndexKind::Passages;

  friend bool operator==(const IndexManifest&, const IndexManifest&) = default;
};

struct PassageIndex {
  IndexManifest manifest;
  std::vector<PassageRecord> records;
};

struct QueryIndex {
  IndexManifest manifest;
  std::vector<QueryEncoding> records;
};

// foo.agrv -> foo.spans.jsonl; other names get ".spans.jsonl" appended.
std::filesystem::path sidecar_path(const std::filesystem::path& index_path);

// Passage ids must be unique; query files allow one record per (id, marker).
// Every record must share one dim. Writes the sidecar for passage files.
IndexManifest write_index(std::span<const PassageRecord> records, const std::filesystem::path& path);
IndexManifest write_index(std::span<const QueryEncoding> records, const std::filesystem::path& path);

// Strict loads: bad magic, truncated payloads, missing or extra sidecar
// entries, and validation violations all throw.
std::variant<PassageIndex, QueryIndex> read_index(const std::filesystem::path& path);
PassageIndex read_passages(const std::filesystem::path& path);
QueryIndex read_queries(const std::filesystem::path& path);

// Header only.
IndexManifest read_manifest(const std::filesystem::path& path);

// Binary payload of a passage file without its sidecar, as (id, rows) pairs.
// Used when spans come from another source.
std::vector<std::pair<std::string, EmbeddingMatrix>> read_embeddings(const std::filesystem::path& path);

std::string encode_sidecar_line(const PassageRecord& record);

}  // namespace agrame
