#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "altext/corpus.hpp"
#include "altext/error.hpp"

namespace altext {

/// Splits on runs of non-alphanumeric ASCII characters and lowercases.
/// Bytes >= 0x80 count as word characters so UTF-8 words stay whole.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || c >= 0x80) {
      current.push_back(ch);
    } else if (c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

using StopList = std::unordered_set<std::string>;

/// One token per line; blank lines and '#' comments ignored.
inline StopList load_stoplist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open stoplist " + path.string());
  StopList words;
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with('#')) continue;
    for (auto& t : tokenize(line)) words.insert(std::move(t));
  }
  return words;
}

struct Vocabulary {
  std::vector<std::string> terms;  // sorted
  std::unordered_map<std::string, std::uint32_t> term_index;
  std::vector<std::size_t> doc_freq;
  std::vector<std::size_t> total_count;

  std::size_t size() const noexcept { return terms.size(); }
};

/// Per-document term indices into the vocabulary, original token order.
using TokenStreams = std::vector<std::vector<std::uint32_t>>;

struct PreprocessOptions {
  std::size_t min_count = 10;
  std::size_t min_doc_freq = 5;
};

struct Preprocessed {
  Vocabulary vocabulary;
  TokenStreams streams;
};

/// Lowercase, drop stopwords, then keep only terms with corpus count >=
/// min_count and document frequency >= min_doc_freq.
inline Preprocessed preprocess(const Corpus& corpus, const StopList& stoplist,
                               const PreprocessOptions& options = {}) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(corpus.size());
  std::map<std::string, std::pair<std::size_t, std::size_t>> stats;  // count, doc freq
  for (const auto& doc : corpus.documents()) {
    auto tokens = tokenize(doc.text);
    std::erase_if(tokens, [&](const std::string& t) { return stoplist.contains(t); });
    std::unordered_set<std::string_view> seen;
    for (const auto& t : tokens) {
      auto& s = stats[t];
      ++s.first;
      if (seen.insert(t).second) ++s.second;
    }
    docs.push_back(std::move(tokens));
  }

  Preprocessed out;
  auto& vocab = out.vocabulary;
  for (const auto& [term, s] : stats) {
    if (s.first >= options.min_count && s.second >= options.min_doc_freq) {
      vocab.term_index.emplace(term, static_cast<std::uint32_t>(vocab.terms.size()));
      vocab.terms.push_back(term);
      vocab.total_count.push_back(s.first);
      vocab.doc_freq.push_back(s.second);
    }
  }
  if (vocab.terms.empty()) {
    throw ValidationError("vocabulary is empty after stopword removal and rare-term pruning");
  }

  out.streams.reserve(docs.size());
  for (const auto& tokens : docs) {
    std::vector<std::uint32_t> stream;
    for (const auto& t : tokens) {
      if (auto it = vocab.term_index.find(t); it != vocab.term_index.end()) stream.push_back(it->second);
    }
    out.streams.push_back(std::move(stream));
  }
  return out;
}

}  // namespace altext
