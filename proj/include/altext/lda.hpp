#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "altext/alem.hpp"
#include "altext/rng.hpp"
#include "altext/text.hpp"

namespace altext {

struct LdaOptions {
  std::size_t topics = 300;
  std::size_t iterations = 1000;
  /// Symmetric document-topic prior; defaults to 50 / topics.
  std::optional<double> alpha;
  double eta = 0.01;
  std::uint64_t seed = 0;
};

/// Count state of collapsed Gibbs sampling for LDA.
struct LdaModel {
  std::size_t topics = 0;
  std::size_t vocab_size = 0;
  double alpha = 0.0;
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> topic_word;  // topics x vocab, row-major
  std::vector<std::uint32_t> topic_total;
  std::vector<std::uint32_t> doc_topic;  // docs x topics, row-major
  std::vector<std::uint32_t> doc_length;

  std::size_t docs() const noexcept { return doc_length.size(); }
  std::uint32_t word_count(std::size_t k, std::size_t w) const { return topic_word[k * vocab_size + w]; }
  std::uint32_t doc_count(std::size_t d, std::size_t k) const { return doc_topic[d * topics + k]; }
};

/// Collapsed Gibbs sampler (Griffiths & Steyvers). Single-threaded so a
/// fixed seed gives a fixed chain.
class LdaSampler {
 public:
  LdaSampler(std::size_t vocab_size, const TokenStreams& streams, const LdaOptions& options)
      : streams_(streams), rng_(derive_seed(options.seed, 0x1da)) {
    if (vocab_size == 0) throw ValidationError("LDA needs a non-empty vocabulary");
    if (options.topics < 2) throw ValidationError("LDA needs at least 2 topics");
    auto& m = model_;
    m.topics = options.topics;
    m.vocab_size = vocab_size;
    m.alpha = options.alpha.value_or(50.0 / static_cast<double>(options.topics));
    m.eta = options.eta;
    m.seed = options.seed;
    m.topic_word.assign(m.topics * vocab_size, 0);
    m.topic_total.assign(m.topics, 0);
    m.doc_topic.assign(streams.size() * m.topics, 0);
    m.doc_length.resize(streams.size());
    weights_.resize(m.topics);

    assignments_.resize(streams.size());
    for (std::size_t d = 0; d < streams.size(); ++d) {
      m.doc_length[d] = static_cast<std::uint32_t>(streams[d].size());
      assignments_[d].resize(streams[d].size());
      for (std::size_t i = 0; i < streams[d].size(); ++i) {
        const auto w = streams[d][i];
        if (w >= vocab_size) throw ValidationError("token index outside vocabulary");
        const auto k = static_cast<std::uint32_t>(rng_.below(m.topics));
        assignments_[d][i] = k;
        add(d, w, k);
      }
    }
  }

  /// One pass over every token.
  void sweep() {
    auto& m = model_;
    const double v_eta = static_cast<double>(m.vocab_size) * m.eta;
    for (std::size_t d = 0; d < streams_.size(); ++d) {
      const auto& stream = streams_[d];
      auto& z = assignments_[d];
      for (std::size_t i = 0; i < stream.size(); ++i) {
        const auto w = stream[i];
        remove(d, w, z[i]);
        double total = 0.0;
        const std::uint32_t* dt = &m.doc_topic[d * m.topics];
        for (std::size_t k = 0; k < m.topics; ++k) {
          total += (dt[k] + m.alpha) * (m.topic_word[k * m.vocab_size + w] + m.eta) /
                   (m.topic_total[k] + v_eta);
          weights_[k] = total;
        }
        const double u = rng_.uniform() * total;
        std::size_t k = 0;
        while (k + 1 < m.topics && weights_[k] <= u) ++k;
        z[i] = static_cast<std::uint32_t>(k);
        add(d, w, z[i]);
      }
    }
  }

  const LdaModel& model() const noexcept { return model_; }

  /// Posterior-mean topic proportions: (n_dk + alpha) / (N_d + K alpha).
  DenseMatrix document_topics() const {
    const auto& m = model_;
    DenseMatrix theta(m.docs(), m.topics);
    for (std::size_t d = 0; d < m.docs(); ++d) {
      const double denom = m.doc_length[d] + static_cast<double>(m.topics) * m.alpha;
      for (std::size_t k = 0; k < m.topics; ++k) theta(d, k) = (m.doc_count(d, k) + m.alpha) / denom;
    }
    return theta;
  }

 private:
  void add(std::size_t d, std::uint32_t w, std::uint32_t k) {
    ++model_.topic_word[k * model_.vocab_size + w];
    ++model_.topic_total[k];
    ++model_.doc_topic[d * model_.topics + k];
  }
  void remove(std::size_t d, std::uint32_t w, std::uint32_t k) {
    --model_.topic_word[k * model_.vocab_size + w];
    --model_.topic_total[k];
    --model_.doc_topic[d * model_.topics + k];
  }

  const TokenStreams& streams_;
  Rng rng_;
  LdaModel model_;
  std::vector<std::vector<std::uint32_t>> assignments_;
  std::vector<double> weights_;
};

struct LdaFit {
  LdaModel model;
  EmbeddingMatrix embedding;
  /// Rows with no retained tokens; their vectors are uniform 1/K.
  std::vector<std::size_t> empty_rows;
};

inline LdaFit lda_fit(const Corpus& corpus, const Vocabulary& vocabulary, const TokenStreams& streams,
                      const LdaOptions& options = {},
                      const std::function<void(std::size_t, const LdaModel&)>& on_sweep = {}) {
  if (streams.size() != corpus.size()) throw ValidationError("token streams do not match corpus size");
  LdaSampler sampler(vocabulary.size(), streams, options);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    sampler.sweep();
    if (on_sweep) on_sweep(it, sampler.model());
  }
  LdaFit fit{sampler.model(), {}, {}};
  fit.embedding.values = sampler.document_topics();
  fit.embedding.manifest = {"lda", EncodingMode::none, corpus.ids()};
  for (std::size_t d = 0; d < streams.size(); ++d)
    if (streams[d].empty()) fit.empty_rows.push_back(d);
  return fit;
}

}  // namespace altext
