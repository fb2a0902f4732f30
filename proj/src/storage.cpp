#include "agrame/storage.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "binio.hpp"

namespace agrame {

using ordered_json = nlohmann::ordered_json;

namespace detail {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "read failed for '" + path.string() + "'");
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace detail

namespace {

constexpr std::string_view kMagic = "AGRV";

void write_header(detail::ByteWriter& w, const IndexManifest& m) {
  w.bytes(kMagic);
  w.u32(m.version);
  w.u32(m.dim);
  w.u32(m.record_count);
  w.u8(static_cast<std::uint8_t>(m.kind));
}

IndexManifest read_header(detail::ByteReader& r) {
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic)
    throw Error(ErrorKind::Format, "not an AGRV file");
  IndexManifest m;
  m.version = r.u32();
  if (m.version != kFormatVersion)
    throw Error(ErrorKind::Format, "unsupported AGRV version " + std::to_string(m.version));
  m.dim = r.u32();
  m.record_count = r.u32();
  std::uint8_t kind = r.u8();
  if (kind > 1) throw Error(ErrorKind::Corrupt, "corrupt index: unknown kind byte");
  m.kind = static_cast<IndexKind>(kind);
  if (m.dim == 0) throw Error(ErrorKind::Corrupt, "corrupt index: zero dim");
  return m;
}

void write_id(detail::ByteWriter& w, const std::string& id) {
  if (id.size() > 0xFFFF) throw Error(ErrorKind::InvalidArgument, "record id longer than 65535 bytes");
  w.u16(static_cast<std::uint16_t>(id.size()));
  w.bytes(id);
}

void write_rows(detail::ByteWriter& w, const EmbeddingMatrix& m) {
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.f32s(m.data());
}

EmbeddingMatrix read_rows(detail::ByteReader& r, std::uint32_t dim) {
  std::uint32_t tokens = r.u32();
  if (tokens == 0) throw Error(ErrorKind::Corrupt, "corrupt index: record with zero tokens");
  if (static_cast<std::uint64_t>(tokens) * dim * 4 > r.remaining())
    throw Error(ErrorKind::Corrupt, "corrupt index: truncated payload");
  auto data = r.f32s(static_cast<std::size_t>(tokens) * dim);
  try {
    return EmbeddingMatrix(tokens, dim, std::move(data));
  } catch (const Error& e) {
    throw Error(ErrorKind::Corrupt, std::string("corrupt index: ") + e.what());
  }
}

template <class Record>
std::uint32_t common_dim(std::span<const Record> records) {
  if (records.empty()) return 0;
  std::size_t dim = records.front().embeddings.dim();
  for (const auto& r : records)
    if (r.embeddings.dim() != dim) throw Error(ErrorKind::DimMismatch, "dim mismatch across records");
  return static_cast<std::uint32_t>(dim);
}

void check_count(std::size_t n) {
  if (n > 0xFFFFFFFFu) throw Error(ErrorKind::InvalidArgument, "too many records");
}

PassageRecord parse_sidecar_line(const std::string& line, std::size_t lineno) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Corrupt, "corrupt sidecar line " + std::to_string(lineno) + ": " + e.what());
  }
  try {
    PassageRecord rec;
    rec.id = j.at("id").get<std::string>();
    for (const auto& s : j.at("sentences")) {
      if (!s.is_array() || s.size() != 2)
        throw Error(ErrorKind::Corrupt, "corrupt sidecar line " + std::to_string(lineno) + ": bad span");
      rec.sentences.push_back({s[0].get<std::uint32_t>(), s[1].get<std::uint32_t>()});
    }
    if (j.contains("propositions")) {
      for (const auto& p : j.at("propositions"))
        rec.propositions.push_back(
            {p.at("sentence").get<std::uint32_t>(), p.at("tokens").get<std::vector<std::uint32_t>>()});
    }
    if (j.contains("text")) rec.text = j.at("text").get<std::string>();
    if (j.contains("sentence_texts")) rec.sentence_texts = j.at("sentence_texts").get<std::vector<std::string>>();
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Corrupt, "corrupt sidecar line " + std::to_string(lineno) + ": " + e.what());
  }
}

std::vector<std::pair<std::string, EmbeddingMatrix>> read_passage_payload(detail::ByteReader& r,
                                                                         const IndexManifest& m) {
  std::vector<std::pair<std::string, EmbeddingMatrix>> out;
  out.reserve(std::min<std::size_t>(m.record_count, 1u << 20));
  for (std::uint32_t i = 0; i < m.record_count; ++i) {
    std::string id(r.bytes(r.u16()));
    out.emplace_back(std::move(id), read_rows(r, m.dim));
  }
  if (r.remaining() != 0) throw Error(ErrorKind::Corrupt, "corrupt index: trailing bytes");
  return out;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& index_path) {
  auto p = index_path;
  if (p.extension() == ".agrv") return p.replace_extension(".spans.jsonl");
  return std::filesystem::path(p.string() + ".spans.jsonl");
}

std::string encode_sidecar_line(const PassageRecord& record) {
  ordered_json j;
  j["id"] = record.id;
  ordered_json spans = ordered_json::array();
  for (const auto& s : record.sentences) spans.push_back({s.start, s.end});
  j["sentences"] = std::move(spans);
  ordered_json props = ordered_json::array();
  for (const auto& p : record.propositions) {
    ordered_json o;
    o["sentence"] = p.sentence;
    o["tokens"] = p.tokens;
    props.push_back(std::move(o));
  }
  j["propositions"] = std::move(props);
  if (record.text) j["text"] = *record.text;
  if (!record.sentence_texts.empty()) j["sentence_texts"] = record.sentence_texts;
  return j.dump();
}

IndexManifest write_index(std::span<const PassageRecord> records, const std::filesystem::path& path) {
  check_count(records.size());
  IndexManifest m{kFormatVersion, common_dim(records), static_cast<std::uint32_t>(records.size()),
                  IndexKind::Passages};
  if (records.empty()) throw Error(ErrorKind::InvalidArgument, "no records to write");
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) throw Error(ErrorKind::InvalidArgument, "duplicate id '" + r.id + "'");
    auto violations = validate_passage(r);
    if (!violations.empty())
      throw Error(ErrorKind::Data, "passage '" + r.id + "': " + violations.front().message);
  }

  detail::ByteWriter w;
  write_header(w, m);
  std::string sidecar;
  for (const auto& r : records) {
    write_id(w, r.id);
    write_rows(w, r.embeddings);
    sidecar += encode_sidecar_line(r);
    sidecar += '\n';
  }
  detail::write_file(path, w.buffer());
  detail::write_file(sidecar_path(path), sidecar);
  return m;
}

IndexManifest write_index(std::span<const QueryEncoding> records, const std::filesystem::path& path) {
  check_count(records.size());
  if (records.empty()) throw Error(ErrorKind::InvalidArgument, "no records to write");
  IndexManifest m{kFormatVersion, common_dim(records), static_cast<std::uint32_t>(records.size()),
                  IndexKind::Queries};
  std::set<std::pair<std::string, Marker>> seen;
  for (const auto& r : records)
    if (!seen.insert({r.id, r.marker}).second)
      throw Error(ErrorKind::InvalidArgument,
                  "duplicate id '" + r.id + "' for the " + marker_name(r.marker) + " marker");

  detail::ByteWriter w;
  write_header(w, m);
  for (const auto& r : records) {
    write_id(w, r.id);
    w.u8(static_cast<std::uint8_t>(r.marker));
    write_rows(w, r.embeddings);
  }
  detail::write_file(path, w.buffer());
  return m;
}

IndexManifest read_manifest(const std::filesystem::path& path) {
  std::string data = detail::read_file(path);
  detail::ByteReader r(data);
  return read_header(r);
}

std::vector<std::pair<std::string, EmbeddingMatrix>> read_embeddings(const std::filesystem::path& path) {
  std::string data = detail::read_file(path);
  detail::ByteReader r(data);
  IndexManifest m = read_header(r);
  if (m.kind != IndexKind::Passages) throw Error(ErrorKind::Format, "expected a passage index");
  return read_passage_payload(r, m);
}

PassageIndex read_passages(const std::filesystem::path& path) {
  std::string data = detail::read_file(path);
  detail::ByteReader r(data);
  PassageIndex index;
  index.manifest = read_header(r);
  if (index.manifest.kind != IndexKind::Passages) throw Error(ErrorKind::Format, "expected a passage index");
  auto payload = read_passage_payload(r, index.manifest);

  auto side = sidecar_path(path);
  if (!std::filesystem::exists(side)) throw Error(ErrorKind::Data, "missing spans: no sidecar '" + side.string() + "'");
  std::istringstream lines(detail::read_file(side));
  std::map<std::string, PassageRecord> spans;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    PassageRecord rec = parse_sidecar_line(line, lineno);
    std::string id = rec.id;
    if (!spans.emplace(id, std::move(rec)).second)
      throw Error(ErrorKind::Data, "duplicate sidecar entry for '" + id + "'");
  }

  std::set<std::string> ids;
  index.records.reserve(payload.size());
  for (auto& [id, rows] : payload) {
    if (!ids.insert(id).second) throw Error(ErrorKind::Corrupt, "corrupt index: duplicate id '" + id + "'");
    auto it = spans.find(id);
    if (it == spans.end()) throw Error(ErrorKind::Data, "missing spans for '" + id + "'");
    PassageRecord rec = std::move(it->second);
    spans.erase(it);
    rec.embeddings = std::move(rows);
    auto violations = validate_passage(rec);
    if (!violations.empty())
      throw Error(ErrorKind::Data, "passage '" + id + "': " + violations.front().message);
    index.records.push_back(std::move(rec));
  }
  if (!spans.empty())
    throw Error(ErrorKind::Data, "sidecar entry '" + spans.begin()->first + "' has no embeddings");
  return index;
}

QueryIndex read_queries(const std::filesystem::path& path) {
  std::string data = detail::read_file(path);
  detail::ByteReader r(data);
  QueryIndex index;
  index.manifest = read_header(r);
  if (index.manifest.kind != IndexKind::Queries) throw Error(ErrorKind::Format, "expected a query index");
  std::set<std::pair<std::string, Marker>> seen;
  for (std::uint32_t i = 0; i < index.manifest.record_count; ++i) {
    QueryEncoding q;
    q.id = std::string(r.bytes(r.u16()));
    std::uint8_t marker = r.u8();
    if (marker > 1) throw Error(ErrorKind::Corrupt, "corrupt index: unknown marker byte");
    q.marker = static_cast<Marker>(marker);
    q.embeddings = read_rows(r, index.manifest.dim);
    if (!seen.insert({q.id, q.marker}).second)
      throw Error(ErrorKind::Corrupt, "corrupt index: duplicate query '" + q.id + "'");
    index.records.push_back(std::move(q));
  }
  if (r.remaining() != 0) throw Error(ErrorKind::Corrupt, "corrupt index: trailing bytes");
  return index;
}

std::variant<PassageIndex, QueryIndex> read_index(const std::filesystem::path& path) {
  IndexManifest m = read_manifest(path);
  if (m.kind == IndexKind::Queries) return read_queries(path);
  return read_passages(path);
}

}  // namespace agrame
