#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "altext/corpus.hpp"
#include "altext/error.hpp"
#include "altext/matrix.hpp"

namespace altext {

enum class EncodingMode { avg, cls, none };

inline std::string to_string(EncodingMode m) {
  switch (m) {
    case EncodingMode::avg: return "avg";
    case EncodingMode::cls: return "cls";
    case EncodingMode::none: break;
  }
  return "n/a";
}

inline EncodingMode parse_encoding_mode(const std::string& s) {
  if (s == "avg") return EncodingMode::avg;
  if (s == "cls") return EncodingMode::cls;
  if (s == "n/a") return EncodingMode::none;
  throw ValidationError("unknown encoding mode '" + s + "' (expected avg, cls or n/a)");
}

struct EmbeddingManifest {
  std::string model;
  EncodingMode mode = EncodingMode::none;
  std::vector<std::string> ids;

  friend bool operator==(const EmbeddingManifest&, const EmbeddingManifest&) = default;
};

/// Row-per-document representation with its provenance.
struct EmbeddingMatrix {
  DenseMatrix values;
  EmbeddingManifest manifest;

  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t dims() const noexcept { return values.cols(); }
};

/// ALEM binary layout: "ALEM", u32 version, u32 rows, u32 dims, then
/// rows*dims binary32 values, all little-endian, row-major.
namespace alem {

inline constexpr std::array<char, 4> kMagic{'A', 'L', 'E', 'M'};
inline constexpr std::uint32_t kVersion = 1;

inline std::filesystem::path manifest_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

/// Encodes values as little-endian binary32, row-major.
inline std::vector<unsigned char> encode_f32(const DenseMatrix& m) {
  std::vector<unsigned char> out;
  out.reserve(m.values().size() * 4);
  for (double v : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

inline DenseMatrix decode_f32(const unsigned char* data, std::size_t bytes, std::size_t rows,
                              std::size_t dims) {
  if (bytes != rows * dims * 4) {
    throw ParseError("payload has " + std::to_string(bytes) + " bytes, expected " +
                     std::to_string(rows * dims * 4));
  }
  std::vector<double> values(rows * dims);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = std::bit_cast<float>(get_u32(data + 4 * i));
    if (!std::isfinite(f)) {
      throw ParseError("non-finite value at (row " + std::to_string(i / dims) + ", col " +
                       std::to_string(i % dims) + ")");
    }
    values[i] = f;
  }
  return DenseMatrix(rows, dims, std::move(values));
}

}  // namespace alem

inline void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  if (m.manifest.ids.size() != m.rows()) {
    throw ValidationError("manifest lists " + std::to_string(m.manifest.ids.size()) +
                          " ids for " + std::to_string(m.rows()) + " rows");
  }
  std::vector<unsigned char> bytes(alem::kMagic.begin(), alem::kMagic.end());
  alem::put_u32(bytes, alem::kVersion);
  alem::put_u32(bytes, static_cast<std::uint32_t>(m.rows()));
  alem::put_u32(bytes, static_cast<std::uint32_t>(m.dims()));
  auto payload = alem::encode_f32(m.values);
  bytes.insert(bytes.end(), payload.begin(), payload.end());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());

  nlohmann::json manifest = {
      {"model", m.manifest.model}, {"mode", to_string(m.manifest.mode)}, {"ids", m.manifest.ids}};
  std::ofstream mout(alem::manifest_path(path));
  if (!mout) throw Error("cannot write " + alem::manifest_path(path).string());
  mout << manifest.dump() << '\n';
}

/// Reads an ALEM file and its sidecar manifest without corpus checks.
inline EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || !std::equal(alem::kMagic.begin(), alem::kMagic.end(), bytes.begin()))
    throw ParseError(path.string() + ": bad magic, not an ALEM file");
  const auto version = alem::get_u32(bytes.data() + 4);
  if (version != alem::kVersion)
    throw ParseError(path.string() + ": unsupported ALEM version " + std::to_string(version));
  const std::size_t rows = alem::get_u32(bytes.data() + 8);
  const std::size_t dims = alem::get_u32(bytes.data() + 12);

  EmbeddingMatrix m;
  try {
    m.values = alem::decode_f32(bytes.data() + 16, bytes.size() - 16, rows, dims);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }

  std::ifstream min(alem::manifest_path(path));
  if (!min) throw Error("missing manifest " + alem::manifest_path(path).string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(min);
    m.manifest.model = j.at("model").get<std::string>();
    m.manifest.mode = parse_encoding_mode(j.at("mode").get<std::string>());
    m.manifest.ids = j.at("ids").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(alem::manifest_path(path).string() + ": " + e.what());
  }
  if (m.manifest.ids.size() != rows) {
    throw ValidationError("manifest lists " + std::to_string(m.manifest.ids.size()) +
                          " ids but file has " + std::to_string(rows) + " rows");
  }
  return m;
}

/// Throws unless `m` has one row per corpus document with ids in corpus order.
inline void check_alignment(const EmbeddingMatrix& m, const Corpus& corpus) {
  if (m.rows() != corpus.size()) {
    throw ValidationError("embedding has " + std::to_string(m.rows()) + " rows, corpus has " +
                          std::to_string(corpus.size()) + " documents");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (m.manifest.ids[r] != corpus[r].id) {
      throw ValidationError("row " + std::to_string(r) + " id '" + m.manifest.ids[r] +
                            "' does not match corpus id '" + corpus[r].id + "'");
    }
  }
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path, const Corpus& corpus) {
  auto m = read_embeddings(path);
  check_alignment(m, corpus);
  return m;
}

}  // namespace altext
