#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "altext/alem.hpp"
#include "altext/text.hpp"

namespace altext {

struct WordVectorLexicon {
  std::size_t dims = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  void add(std::string word, std::vector<double> v) {
    if (dims == 0) dims = v.size();
    if (v.size() != dims) {
      throw ValidationError("vector for '" + word + "' has " + std::to_string(v.size()) +
                            " components, expected " + std::to_string(dims));
    }
    vectors.emplace(std::move(word), std::move(v));
  }
};

/// Text format "word v1 ... vd", one word per line. A leading "count dims"
/// header line (fastText .vec style) is skipped. First occurrence of a word wins.
inline WordVectorLexicon parse_lexicon(std::istream& in) {
  WordVectorLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> v;
    std::string tok;
    while (fields >> tok) {
      double x = 0.0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (ec != std::errc() || p != tok.data() + tok.size())
        throw ParseError("bad number '" + tok + "' in lexicon", line_no);
      v.push_back(x);
    }
    if (line_no == 1 && v.size() == 1 && word.find_first_not_of("0123456789") == std::string::npos) {
      continue;
    }
    if (v.empty()) throw ParseError("lexicon entry '" + word + "' has no components", line_no);
    if (lex.vectors.contains(word)) continue;
    try {
      lex.add(std::move(word), std::move(v));
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return lex;
}

inline WordVectorLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon " + path.string());
  return parse_lexicon(in);
}

/// Mean of the lexicon vectors of a document's in-lexicon tokens (with
/// multiplicity); zero vector when nothing matches.
inline EmbeddingMatrix avg_word_vectors(const Corpus& corpus, const WordVectorLexicon& lexicon,
                                        std::string model = "wordvec") {
  EmbeddingMatrix out;
  out.values = DenseMatrix(corpus.size(), lexicon.dims);
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    auto row = out.values.row(d);
    std::size_t hits = 0;
    for (const auto& t : tokenize(corpus[d].text)) {
      auto it = lexicon.vectors.find(t);
      if (it == lexicon.vectors.end()) continue;
      for (std::size_t j = 0; j < lexicon.dims; ++j) row[j] += it->second[j];
      ++hits;
    }
    if (hits > 0)
      for (auto& v : row) v /= static_cast<double>(hits);
  }
  out.manifest = {std::move(model), EncodingMode::none, corpus.ids()};
  return out;
}

}  // namespace altext
