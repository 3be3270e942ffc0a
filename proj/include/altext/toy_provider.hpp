#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "altext/provider.hpp"
#include "altext/rng.hpp"
#include "altext/text.hpp"

namespace altext {

/// Small deterministic encoder for tests and offline runs: each token hashes
/// to a column of W, token embeddings are tanh(W[:, h]) and a document is
/// their mean ("avg") or tanh of the mean column ("cls"). Fine-tuning trains
/// W together with a logistic head using Adam.
class HashedEncoderProvider : public EmbeddingProvider, public EpochTunable {
 public:
  struct Options {
    std::size_t dims = 16;
    std::size_t buckets = 1024;
    std::uint64_t seed = 7;
    double init_scale = 0.5;
  };

  HashedEncoderProvider() : HashedEncoderProvider(Options{}) {}
  explicit HashedEncoderProvider(Options options) : options_(options) { reset(); }

  std::string model_id() const override { return "toy-hashed-" + std::to_string(options_.dims); }

  DenseMatrix embed(const std::vector<std::string>& texts, EncodingMode mode) override {
    DenseMatrix out(texts.size(), options_.dims);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const auto e = encode(hash_tokens(texts[i]), mode);
      std::copy(e.begin(), e.end(), out.row(i).begin());
    }
    return out;
  }

  void reset() override {
    Rng rng(derive_seed(options_.seed, 0x70e));
    weights_.assign(options_.dims * options_.buckets, 0.0);
    for (auto& w : weights_) w = options_.init_scale * rng.normal();
    head_.assign(options_.dims, 0.0);
    for (auto& v : head_) v = 0.1 * rng.normal();
    head_bias_ = 0.0;
  }

  bool can_fine_tune() const override { return true; }

  TrainingReport fine_tune(const std::vector<LabelledText>& data, const FineTuneParams& params) override {
    return fine_tune_with_rollback(*this, data, params);
  }

  EpochMetrics evaluate(const std::vector<LabelledText>& data) override {
    EpochMetrics m;
    std::size_t correct = 0;
    double loss = 0.0;
    for (const auto& d : data) {
      const auto e = encode(hash_tokens(d.text), EncodingMode::avg);
      const double z = dot(e, head_) + head_bias_;
      correct += (z >= 0.0 ? 1 : 0) == d.label;
      loss += logistic_loss(z, d.label);
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    m.loss = loss / static_cast<double>(data.size());
    return m;
  }

  void train_epoch(const std::vector<LabelledText>& data, const FineTuneParams& params,
                   std::size_t epoch) override {
    const std::size_t n_params = weights_.size() + head_.size() + 1;
    if (epoch == 1) {
      m1_.assign(n_params, 0.0);
      m2_.assign(n_params, 0.0);
      step_ = 0;
    }
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(options_.seed, 0x7e, epoch));
    rng.shuffle(std::span<std::size_t>(order));

    const std::size_t batch = std::max<std::size_t>(1, params.batch_size);
    std::vector<double> grad(n_params);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const std::size_t end = std::min(order.size(), start + batch);
      for (std::size_t k = start; k < end; ++k) accumulate_gradient(data[order[k]], grad);
      for (auto& g : grad) g /= static_cast<double>(end - start);
      adam_step(grad, params);
    }
  }

  std::vector<double> save_state() const override {
    std::vector<double> s(weights_);
    s.insert(s.end(), head_.begin(), head_.end());
    s.push_back(head_bias_);
    return s;
  }

  void load_state(const std::vector<double>& s) override {
    const auto nw = weights_.size(), nh = head_.size();
    if (s.size() != nw + nh + 1) throw ValidationError("state size mismatch");
    std::copy(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(nw), weights_.begin());
    std::copy(s.begin() + static_cast<std::ptrdiff_t>(nw), s.end() - 1, head_.begin());
    head_bias_ = s.back();
  }

 private:
  static double logistic_loss(double z, BinaryLabel y) {
    // log(1 + exp(-s z)) with s = +-1, computed stably
    const double t = y == 1 ? -z : z;
    return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  }

  std::vector<std::size_t> hash_tokens(std::string_view text) const {
    std::vector<std::size_t> cols;
    for (const auto& t : tokenize(text)) {
      std::uint64_t h = 1469598103934665603ULL;
      for (unsigned char c : t) h = (h ^ c) * 1099511628211ULL;
      cols.push_back(static_cast<std::size_t>(h % options_.buckets));
    }
    return cols;
  }

  std::vector<double> encode(const std::vector<std::size_t>& cols, EncodingMode mode) const {
    const std::size_t dims = options_.dims;
    std::vector<double> e(dims, 0.0);
    if (cols.empty()) return e;
    const double inv = 1.0 / static_cast<double>(cols.size());
    for (auto c : cols)
      for (std::size_t j = 0; j < dims; ++j) {
        const double w = weights_[j * options_.buckets + c];
        e[j] += (mode == EncodingMode::cls ? w : std::tanh(w)) * inv;
      }
    if (mode == EncodingMode::cls)
      for (auto& v : e) v = std::tanh(v);
    return e;
  }

  void accumulate_gradient(const LabelledText& d, std::vector<double>& grad) const {
    const auto cols = hash_tokens(d.text);
    const auto e = encode(cols, EncodingMode::avg);
    const double z = dot(e, head_) + head_bias_;
    const double dz = 1.0 / (1.0 + std::exp(-z)) - (d.label == 1 ? 1.0 : 0.0);
    const std::size_t nw = weights_.size(), dims = options_.dims;
    for (std::size_t j = 0; j < dims; ++j) grad[nw + j] += dz * e[j];
    grad[nw + dims] += dz;
    if (cols.empty()) return;
    const double inv = 1.0 / static_cast<double>(cols.size());
    for (auto c : cols)
      for (std::size_t j = 0; j < dims; ++j) {
        const double t = std::tanh(weights_[j * options_.buckets + c]);
        grad[j * options_.buckets + c] += dz * head_[j] * (1.0 - t * t) * inv;
      }
  }

  void adam_step(const std::vector<double>& grad, const FineTuneParams& params) {
    constexpr double b1 = 0.9, b2 = 0.999;
    ++step_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    const std::size_t nw = weights_.size(), nh = head_.size();
    for (std::size_t i = 0; i < grad.size(); ++i) {
      m1_[i] = b1 * m1_[i] + (1 - b1) * grad[i];
      m2_[i] = b2 * m2_[i] + (1 - b2) * grad[i] * grad[i];
      const double update = params.learning_rate * (m1_[i] / c1) / (std::sqrt(m2_[i] / c2) + params.adam_epsilon);
      if (i < nw) weights_[i] -= update;
      else if (i < nw + nh) head_[i - nw] -= update;
      else head_bias_ -= update;
    }
  }

  Options options_;
  std::vector<double> weights_;  // dims x buckets
  std::vector<double> head_;
  double head_bias_ = 0.0;
  std::vector<double> m1_, m2_;
  std::size_t step_ = 0;
};

}  // namespace altext
