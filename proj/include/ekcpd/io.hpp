#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ekcpd/error.hpp"
#include "ekcpd/sequence.hpp"

namespace ekcpd::io {

using json = nlohmann::json;

inline constexpr std::array<char, 4> kBinaryMagic{'E', 'K', 'C', 'P'};
inline constexpr std::uint32_t kBinaryVersion = 1;
inline constexpr std::size_t kBinaryHeaderSize = 24;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint64_t get_le(const std::string& in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Format, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Format, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Format, "write failed for " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binary: "EKCP" | u32 version | u64 T | u64 d | T*d float32, all little-endian.

inline std::string encode_binary(const EmbeddingSequence& seq) {
  std::string out;
  out.reserve(kBinaryHeaderSize + 4 * seq.values().size());
  out.append(kBinaryMagic.data(), kBinaryMagic.size());
  detail::put_u32(out, kBinaryVersion);
  detail::put_u64(out, seq.size());
  detail::put_u64(out, seq.dim());
  for (double v : seq.values()) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    detail::put_u32(out, bits);
  }
  return out;
}

inline bool is_binary(const std::string& bytes) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), kBinaryMagic.data(), 4) == 0;
}

inline EmbeddingSequence decode_binary(const std::string& bytes) {
  if (bytes.size() < kBinaryHeaderSize || !is_binary(bytes)) {
    throw Error(ErrorCode::Format, "binary header: expected at least " + std::to_string(kBinaryHeaderSize) +
                                       " bytes starting with EKCP, got " + std::to_string(bytes.size()) + " bytes");
  }
  const auto version = static_cast<std::uint32_t>(detail::get_le(bytes, 4, 4));
  if (version != kBinaryVersion) {
    throw Error(ErrorCode::Format, "unsupported binary version " + std::to_string(version));
  }
  const std::uint64_t T = detail::get_le(bytes, 8, 8);
  const std::uint64_t d = detail::get_le(bytes, 16, 8);
  if (T == 0 || d == 0 || T > (std::uint64_t{1} << 40) / d) {
    throw Error(ErrorCode::Format, "binary header has invalid shape T=" + std::to_string(T) + ", d=" +
                                       std::to_string(d));
  }
  const std::uint64_t expected = kBinaryHeaderSize + 4 * T * d;
  if (bytes.size() != expected) {
    throw Error(ErrorCode::Format, "binary file size mismatch: expected " + std::to_string(expected) +
                                       " bytes, got " + std::to_string(bytes.size()));
  }
  std::vector<double> values(T * d);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = static_cast<std::uint32_t>(detail::get_le(bytes, kBinaryHeaderSize + 4 * i, 4));
    float f;
    std::memcpy(&f, &bits, sizeof f);
    values[i] = f;
  }
  try {
    return EmbeddingSequence(T, d, std::move(values));
  } catch (const Error& e) {
    throw Error(ErrorCode::Format, e.what());
  }
}

// ---------------------------------------------------------------------------
// JSONL: one {"id"?, "embedding": [...], "text"?} object per line.

inline EmbeddingSequence decode_jsonl(std::istream& in) {
  std::vector<double> values;
  std::vector<std::string> ids;
  std::size_t d = 0;
  std::size_t T = 0;
  bool any_id = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("embedding") || !obj["embedding"].is_array()) {
      throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": missing \"embedding\" array");
    }
    const auto& emb = obj["embedding"];
    if (T == 0) {
      d = emb.size();
      if (d == 0) throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": empty embedding");
    } else if (emb.size() != d) {
      throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": dimension " +
                                         std::to_string(emb.size()) + ", expected " + std::to_string(d));
    }
    for (const auto& v : emb) {
      if (!v.is_number()) throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": non-numeric entry");
      values.push_back(v.get<double>());
    }
    if (obj.contains("id") && obj["id"].is_string()) {
      any_id = true;
      ids.push_back(obj["id"].get<std::string>());
    } else {
      ids.push_back(std::to_string(T));
    }
    ++T;
  }
  if (T == 0) throw Error(ErrorCode::Format, "JSONL input has no rows");
  try {
    return EmbeddingSequence(T, d, std::move(values), any_id ? std::move(ids) : std::vector<std::string>{});
  } catch (const Error& e) {
    throw Error(ErrorCode::Format, e.what());
  }
}

/// Numbers are written in shortest round-trip form, so reading back yields the
/// same doubles.
inline void encode_jsonl(std::ostream& out, const EmbeddingSequence& seq,
                         const std::vector<std::string>& texts = {}) {
  for (std::size_t t = 0; t < seq.size(); ++t) {
    json obj;
    if (!seq.ids().empty()) obj["id"] = seq.ids()[t];
    const auto row = seq.row0(t);
    obj["embedding"] = std::vector<double>(row.begin(), row.end());
    if (t < texts.size()) obj["text"] = texts[t];
    out << obj.dump() << '\n';
  }
}

inline EmbeddingSequence read_embeddings(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  if (is_binary(bytes)) return decode_binary(bytes);
  std::istringstream in(bytes);
  return decode_jsonl(in);
}

inline void write_binary(const std::filesystem::path& path, const EmbeddingSequence& seq) {
  detail::write_file(path, encode_binary(seq));
}

inline void write_jsonl(const std::filesystem::path& path, const EmbeddingSequence& seq) {
  std::ostringstream out;
  encode_jsonl(out, seq);
  detail::write_file(path, out.str());
}

/// Writes binary when the extension is .bin, JSONL otherwise.
inline void write_embeddings(const std::filesystem::path& path, const EmbeddingSequence& seq) {
  if (path.extension() == ".bin") {
    write_binary(path, seq);
  } else {
    write_jsonl(path, seq);
  }
}

// ---------------------------------------------------------------------------
// Segmentation JSON: {"T": int, "boundaries": [...], "meta": {...}}

inline json segmentation_to_json(const Segmentation& seg, const json& meta = json::object()) {
  return json{{"T", seg.length()}, {"boundaries", seg.boundaries()}, {"meta", meta}};
}

inline Segmentation segmentation_from_json(const json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorCode::Format, "segmentation must be a JSON object");
    const auto T = j.at("T").get<std::size_t>();
    auto bounds = j.at("boundaries").get<std::vector<std::size_t>>();
    if (bounds.empty() || bounds.back() != T) {
      throw Error(ErrorCode::Format, "boundaries must end in T=" + std::to_string(T));
    }
    return Segmentation(std::move(bounds));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("segmentation JSON: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Format) throw;
    throw Error(ErrorCode::Format, e.what());
  }
}

inline Segmentation read_segmentation(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Format, path.string() + ": " + e.what());
  }
  return segmentation_from_json(j);
}

inline void write_segmentation(const std::filesystem::path& path, const Segmentation& seg,
                               const json& meta = json::object()) {
  detail::write_file(path, segmentation_to_json(seg, meta).dump() + "\n");
}

}  // namespace ekcpd::io
