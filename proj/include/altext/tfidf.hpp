#pragma once

#include <algorithm>
#include <cmath>

#include "altext/alem.hpp"
#include "altext/text.hpp"

namespace altext {

/// Smoothed inverse document frequency: ln((1 + D) / (1 + df)) + 1.
inline double smoothed_idf(std::size_t documents, std::size_t doc_freq) {
  return std::log((1.0 + static_cast<double>(documents)) / (1.0 + static_cast<double>(doc_freq))) + 1.0;
}

/// Raw term count times smoothed idf, each row L2-normalised. Documents with
/// no retained tokens get a zero row. Document frequencies are recomputed
/// from the streams so the matrix always agrees with its inputs.
inline EmbeddingMatrix tfidf(const Corpus& corpus, const Vocabulary& vocabulary,
                             const TokenStreams& streams) {
  if (streams.size() != corpus.size()) {
    throw ValidationError("token streams do not match corpus size");
  }
  const std::size_t V = vocabulary.size();
  const std::size_t D = corpus.size();
  std::vector<std::size_t> df(V, 0);
  std::vector<std::uint32_t> last_doc(V, UINT32_MAX);
  for (std::size_t d = 0; d < D; ++d) {
    for (auto t : streams[d]) {
      if (last_doc[t] != d) {
        last_doc[t] = static_cast<std::uint32_t>(d);
        ++df[t];
      }
    }
  }
  std::vector<double> idf(V);
  for (std::size_t t = 0; t < V; ++t) idf[t] = smoothed_idf(D, df[t]);

  EmbeddingMatrix out;
  out.values = DenseMatrix(D, V);
  for (std::size_t d = 0; d < D; ++d) {
    auto row = out.values.row(d);
    for (auto t : streams[d]) row[t] += 1.0;
    std::vector<std::uint32_t> present(streams[d]);
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    double norm2 = 0.0;
    for (auto t : present) {
      row[t] *= idf[t];
      norm2 += row[t] * row[t];
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& v : row) v *= inv;
    }
  }
  out.manifest = {"tfidf", EncodingMode::none, corpus.ids()};
  return out;
}

}  // namespace altext
