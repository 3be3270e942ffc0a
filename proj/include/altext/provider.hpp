#pragma once

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <string>
#include <vector>

#include "altext/alem.hpp"
#include "altext/corpus.hpp"
#include "altext/error.hpp"
#include "altext/matrix.hpp"

namespace altext {

struct LabelledText {
  std::string text;
  BinaryLabel label = 0;
};

/// Fine-tuning hyperparameters (Adam).
struct FineTuneParams {
  std::size_t epochs = 15;
  double learning_rate = 1e-5;
  std::size_t batch_size = 4;
  double adam_epsilon = 1e-8;
};

struct EpochMetrics {
  double accuracy = 0.0;
  double loss = 0.0;
};

/// Outcome of one fine-tuning call. best_epoch 0 means the pre-tuning state
/// was kept; epoch e >= 1 refers to epochs[e - 1].
struct TrainingReport {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  EpochMetrics initial;
  std::vector<EpochMetrics> epochs;
  bool diverged = false;
};

/// Source of document vectors, optionally able to adapt itself to labels.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string model_id() const = 0;
  /// Deterministic for a fixed internal model state.
  virtual DenseMatrix embed(const std::vector<std::string>& texts, EncodingMode mode) = 0;
  /// Restore the pretrained state.
  virtual void reset() = 0;

  virtual bool can_fine_tune() const { return false; }
  virtual TrainingReport fine_tune(const std::vector<LabelledText>&, const FineTuneParams&) {
    throw Error("provider '" + model_id() + "' cannot fine-tune");
  }
};

/// Epoch-granular training hooks for providers that tune in-process.
class EpochTunable {
 public:
  virtual ~EpochTunable() = default;
  /// Train accuracy and mean loss of the current state on `data`.
  virtual EpochMetrics evaluate(const std::vector<LabelledText>& data) = 0;
  virtual void train_epoch(const std::vector<LabelledText>& data, const FineTuneParams& params,
                           std::size_t epoch) = 0;
  virtual std::vector<double> save_state() const = 0;
  virtual void load_state(const std::vector<double>& state) = 0;
};

/// Whether `candidate` beats `incumbent`: higher train accuracy, then lower loss.
/// Equal metrics keep the incumbent, which is always the earlier epoch.
inline bool improves_on(const EpochMetrics& candidate, const EpochMetrics& incumbent) {
  if (candidate.accuracy != incumbent.accuracy) return candidate.accuracy > incumbent.accuracy;
  return candidate.loss < incumbent.loss;
}

/// Runs up to params.epochs epochs and leaves the model in the best state seen,
/// including the initial one. A non-finite loss restores the initial state.
inline TrainingReport fine_tune_with_rollback(EpochTunable& model, const std::vector<LabelledText>& data,
                                              const FineTuneParams& params) {
  if (data.size() < 2) throw ValidationError("fine-tuning needs at least 2 labelled texts");
  bool pos = false, neg = false;
  for (const auto& d : data) (d.label == 1 ? pos : neg) = true;
  if (!pos || !neg) throw ValidationError("fine-tuning needs both classes");

  TrainingReport report;
  const auto initial_state = model.save_state();
  report.initial = model.evaluate(data);
  auto best_state = initial_state;
  EpochMetrics best = report.initial;
  for (std::size_t e = 1; e <= params.epochs; ++e) {
    model.train_epoch(data, params, e);
    const auto m = model.evaluate(data);
    report.epochs.push_back(m);
    report.epochs_run = e;
    if (!std::isfinite(m.loss)) {
      model.load_state(initial_state);
      report.diverged = true;
      report.best_epoch = 0;
      return report;
    }
    if (improves_on(m, best)) {
      best = m;
      best_state = model.save_state();
      report.best_epoch = e;
    }
  }
  model.load_state(best_state);
  return report;
}

/// Serves a fixed matrix; fine-tuning is accepted and changes nothing.
class StaticProvider : public EmbeddingProvider {
 public:
  StaticProvider(std::string id, DenseMatrix values, std::vector<std::string> texts)
      : id_(std::move(id)), values_(std::move(values)), texts_(std::move(texts)) {}

  std::string model_id() const override { return id_; }

  DenseMatrix embed(const std::vector<std::string>& texts, EncodingMode) override {
    if (texts == texts_) return values_;
    if (index_.empty())
      for (std::size_t i = 0; i < texts_.size(); ++i) index_.emplace(texts_[i], i);
    DenseMatrix out(texts.size(), values_.cols());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const auto it = index_.find(texts[i]);
      if (it == index_.end()) throw Error("static provider has no vector for a requested text");
      const auto src = values_.row(it->second);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

  void reset() override {}
  bool can_fine_tune() const override { return true; }
  TrainingReport fine_tune(const std::vector<LabelledText>&, const FineTuneParams&) override {
    ++fine_tune_calls_;
    return {};
  }

  std::size_t fine_tune_calls() const noexcept { return fine_tune_calls_; }

 private:
  std::string id_;
  DenseMatrix values_;
  std::vector<std::string> texts_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t fine_tune_calls_ = 0;
};

}  // namespace altext
