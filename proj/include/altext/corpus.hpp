#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "altext/error.hpp"
#include "altext/rng.hpp"

namespace altext {

/// Binary class label; 1 is the positive class.
using BinaryLabel = int;

struct Document {
  std::string id;
  std::string text;
  std::optional<BinaryLabel> true_label;
};

/// Ordered document collection. File order is the canonical row order for
/// every representation matrix built over it.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::string name, std::vector<Document> documents) : name_(std::move(name)) {
    for (auto& d : documents) add(std::move(d));
  }

  void add(Document doc) {
    if (doc.text.empty()) throw ValidationError("document '" + doc.id + "' has empty text");
    if (doc.true_label && *doc.true_label != 0 && *doc.true_label != 1) {
      throw ValidationError("document '" + doc.id + "' has label outside {0,1}");
    }
    auto [it, inserted] = index_.emplace(doc.id, documents_.size());
    if (!inserted) throw ValidationError("duplicate document id '" + doc.id + "'");
    documents_.push_back(std::move(doc));
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return documents_.size(); }
  bool empty() const noexcept { return documents_.empty(); }
  const Document& operator[](std::size_t row) const { return documents_[row]; }
  const std::vector<Document>& documents() const noexcept { return documents_; }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// True when every document carries a ground-truth label (simulated-oracle mode).
  bool fully_labelled() const {
    for (const auto& d : documents_)
      if (!d.true_label) return false;
    return !documents_.empty();
  }

  std::vector<std::size_t> rows_with_label(BinaryLabel label) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < documents_.size(); ++i)
      if (documents_[i].true_label == label) rows.push_back(i);
    return rows;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(documents_.size());
    for (const auto& d : documents_) out.push_back(d.id);
    return out;
  }

  std::vector<std::string> texts() const {
    std::vector<std::string> out;
    out.reserve(documents_.size());
    for (const auto& d : documents_) out.push_back(d.text);
    return out;
  }

 private:
  std::string name_;
  std::vector<Document> documents_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Parses JSON Lines: {"id": string, "text": string, "label": 0|1 (optional)}.
/// Blank lines are ignored; every other line must be one object.
inline Corpus parse_corpus(std::istream& in, std::string name) {
  Corpus corpus(std::move(name), {});
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);
    if (!obj.contains("id") || !obj["id"].is_string())
      throw ParseError("missing string field 'id'", line_no);
    if (!obj.contains("text") || !obj["text"].is_string())
      throw ParseError("missing string field 'text'", line_no);

    Document doc{obj["id"].get<std::string>(), obj["text"].get<std::string>(), std::nullopt};
    if (obj.contains("label") && !obj["label"].is_null()) {
      const auto& l = obj["label"];
      if (!l.is_number_integer() || (l.get<std::int64_t>() != 0 && l.get<std::int64_t>() != 1))
        throw ParseError("document '" + doc.id + "': label must be 0 or 1", line_no);
      doc.true_label = l.get<int>();
    }
    if (doc.text.empty()) throw ParseError("document '" + doc.id + "' has empty text", line_no);
    if (corpus.find(doc.id)) throw ParseError("duplicate document id '" + doc.id + "'", line_no);
    corpus.add(std::move(doc));
  }
  return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return parse_corpus(in, path.stem().string());
}

enum class LabelSource { human, machine };

inline const char* to_string(LabelSource s) { return s == LabelSource::human ? "human" : "machine"; }

/// Partition of corpus rows into the oracle-labelled set L and the pool U,
/// plus machine labels on U. Rows never move from L back to U.
class LabelPool {
 public:
  explicit LabelPool(std::size_t corpus_size)
      : human_(corpus_size, kNone), machine_(corpus_size, kNone) {}

  std::size_t corpus_size() const noexcept { return human_.size(); }
  std::size_t labelled_count() const noexcept { return labelled_order_.size(); }
  std::size_t unlabelled_count() const noexcept { return human_.size() - labelled_order_.size(); }

  bool is_labelled(std::size_t row) const { return human_.at(row) != kNone; }

  void assign_human(std::size_t row, BinaryLabel label) {
    check_label(label);
    if (is_labelled(row)) throw ValidationError("row " + std::to_string(row) + " already labelled");
    human_[row] = static_cast<std::int8_t>(label);
    machine_[row] = kNone;
    labelled_order_.push_back(row);
  }

  void assign_machine(std::size_t row, BinaryLabel label) {
    check_label(label);
    if (is_labelled(row))
      throw ValidationError("cannot machine-label human-labelled row " + std::to_string(row));
    machine_[row] = static_cast<std::int8_t>(label);
  }

  void clear_machine() { std::fill(machine_.begin(), machine_.end(), kNone); }

  std::optional<BinaryLabel> human_label(std::size_t row) const { return get(human_.at(row)); }
  std::optional<BinaryLabel> machine_label(std::size_t row) const { return get(machine_.at(row)); }

  /// Labelled rows in acquisition order.
  const std::vector<std::size_t>& labelled_rows() const noexcept { return labelled_order_; }

  /// Unlabelled rows in corpus order.
  std::vector<std::size_t> unlabelled_rows() const {
    std::vector<std::size_t> rows;
    rows.reserve(unlabelled_count());
    for (std::size_t i = 0; i < human_.size(); ++i)
      if (human_[i] == kNone) rows.push_back(i);
    return rows;
  }

  std::size_t human_count(BinaryLabel label) const {
    std::size_t n = 0;
    for (auto row : labelled_order_) n += human_[row] == label;
    return n;
  }

 private:
  static constexpr std::int8_t kNone = -1;

  static void check_label(BinaryLabel label) {
    if (label != 0 && label != 1) throw ValidationError("label must be 0 or 1");
  }
  static std::optional<BinaryLabel> get(std::int8_t v) {
    if (v == kNone) return std::nullopt;
    return v;
  }

  std::vector<std::int8_t> human_;
  std::vector<std::int8_t> machine_;
  std::vector<std::size_t> labelled_order_;
};

namespace detail {
inline std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> rows,
                                                           std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) std::swap(rows[i], rows[i + rng.below(rows.size() - i)]);
  rows.resize(count);
  return rows;
}
}  // namespace detail

/// Class-balanced initial labelled set: per_class positives and per_class
/// negatives, sampled uniformly without replacement. Requires ground truth.
inline LabelPool seed_pool(const Corpus& corpus, std::uint64_t seed, std::size_t per_class = 5) {
  auto pos = corpus.rows_with_label(1);
  auto neg = corpus.rows_with_label(0);
  if (pos.size() < per_class || neg.size() < per_class) {
    throw ValidationError("seeding needs at least " + std::to_string(per_class) +
                          " documents of each class; corpus has " + std::to_string(pos.size()) +
                          " positive and " + std::to_string(neg.size()) + " negative");
  }
  Rng rng(derive_seed(seed, 0x5eed));
  LabelPool pool(corpus.size());
  for (auto row : detail::sample_without_replacement(std::move(pos), per_class, rng))
    pool.assign_human(row, 1);
  for (auto row : detail::sample_without_replacement(std::move(neg), per_class, rng))
    pool.assign_human(row, 0);
  return pool;
}

/// Live-oracle seeding: `count` rows uniformly at random regardless of class.
inline std::vector<std::size_t> sample_seed_rows(std::size_t corpus_size, std::uint64_t seed,
                                                 std::size_t count = 10) {
  std::vector<std::size_t> rows(corpus_size);
  for (std::size_t i = 0; i < corpus_size; ++i) rows[i] = i;
  Rng rng(derive_seed(seed, 0x5eed));
  auto picked = detail::sample_without_replacement(std::move(rows), std::min(count, corpus_size), rng);
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace altext
