#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "altext/alem.hpp"
#include "altext/corpus.hpp"
#include "altext/metrics.hpp"
#include "altext/provider.hpp"
#include "altext/strategies.hpp"
#include "altext/svm.hpp"

namespace altext {

struct AtalOptions {
  /// Fine-tune when round % cadence_rounds == 0 and round > 0.
  std::size_t cadence_rounds = 20;
  FineTuneParams tuning;
};

struct LoopOptions {
  Strategy strategy = Strategy::uncertainty;
  std::size_t batch_size = 10;
  std::size_t budget = 1000;
  std::size_t seed_per_class = 5;
  /// Re-run cross-validation when round % cv_cadence == 0.
  std::size_t cv_cadence = 10;
  SvmParams svm;
  SvmOptions solver;
  std::size_t committee_size = 5;
  double id_beta = 1.0;
  double egal_w = 0.25;
  std::optional<AtalOptions> atal;
  /// Representation label written into curves and summaries.
  std::string representation = "unknown";

  void validate() const {
    if (batch_size < 1) throw ValidationError("batch_size: must be at least 1");
    if (budget < 2 * seed_per_class) throw ValidationError("budget: must be at least 2 x seed_per_class");
    if (cv_cadence < 1) throw ValidationError("cv_cadence: must be at least 1");
    if (atal && atal->cadence_rounds < 1) throw ValidationError("atal.cadence_rounds: must be at least 1");
  }
};

/// Book-keeping for one train/evaluate/acquire iteration.
struct RoundRecord {
  std::size_t round = 0;
  std::size_t labels_used = 0;
  double accuracy_plus = 0.0;
  double C = 0.0;
  bool cross_validated = false;
  bool fine_tuned = false;
};

struct RunResult {
  LearningCurve curve;
  std::vector<RoundRecord> rounds;
  std::vector<TrainingReport> fine_tunes;
  std::optional<std::string> error;
};

namespace detail {
enum : std::uint64_t { kCvStream = 0xc0, kTrainStream = 0x7a, kSelectStream = 0x5e };
}

/// Per-representation state shared by the strategies: the CSR matrix and a
/// lazily built EGAL index.
class SelectionContext {
 public:
  explicit SelectionContext(const DenseMatrix& values) : X_(values) {}

  const SparseRows& features() const noexcept { return X_; }

  EgalIndex& egal() {
    if (!egal_) egal_ = std::make_unique<EgalIndex>(X_);
    return *egal_;
  }

  /// Dispatches to the configured strategy. `model` may be null only for
  /// model-free strategies.
  QueryBatch select(const LoopOptions& options, const SvmModel* model, double C,
                    std::span<const std::size_t> labelled, std::span<const BinaryLabel> labels,
                    std::span<const std::size_t> unlabelled, std::size_t batch_size, std::uint64_t seed) {
    switch (options.strategy) {
      case Strategy::random: return select_random(unlabelled, batch_size, seed);
      case Strategy::uncertainty: return select_uncertainty(require(model), X_, unlabelled, batch_size);
      case Strategy::information_density:
        return select_id(require(model), X_, unlabelled, batch_size, options.id_beta);
      case Strategy::qbc: {
        QbcOptions q{options.committee_size, C, options.solver};
        return select_qbc(X_, labelled, labels, unlabelled, batch_size, seed, q);
      }
      case Strategy::egal: {
        auto& index = egal();
        return select_egal(index, labelled, unlabelled, batch_size, EgalParams::recommended(index, options.egal_w));
      }
    }
    throw ValidationError("unknown strategy");
  }

 private:
  static const SvmModel& require(const SvmModel* m) {
    if (!m) throw ValidationError("strategy needs a trained classifier");
    return *m;
  }

  SparseRows X_;
  std::unique_ptr<EgalIndex> egal_;
};

namespace detail {

/// Pool-based loop: train on L (cross-validating on cadence), label U with
/// the classifier, record accuracy+ at |L|, then acquire the next batch
/// from the oracle. `before_train(round, pool)` may return a replacement
/// representation (ATAL re-embedding).
inline RunResult run_loop(const Corpus& corpus, const DenseMatrix& initial, const LoopOptions& options,
                          std::uint64_t seed,
                          const std::function<std::optional<DenseMatrix>(std::size_t, const LabelPool&, RunResult&)>&
                              before_train) {
  options.validate();
  if (!corpus.fully_labelled()) throw ValidationError("simulated runs need ground truth for every document");
  if (initial.rows() != corpus.size()) throw ValidationError("representation rows do not match corpus size");

  std::vector<BinaryLabel> truth(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) truth[i] = *corpus[i].true_label;

  RunResult result;
  result.curve.representation = options.representation;
  result.curve.strategy = to_string(options.strategy);
  result.curve.seed = seed;

  auto context = std::make_unique<SelectionContext>(initial);
  LabelPool pool = seed_pool(corpus, seed, options.seed_per_class);
  SvmParams params = options.svm;

  for (std::size_t round = 0;; ++round) {
    RoundRecord rec;
    rec.round = round;
    if (before_train) {
      try {
        if (auto replacement = before_train(round, pool, result)) {
          context = std::make_unique<SelectionContext>(*replacement);
          rec.fine_tuned = true;
        }
      } catch (const std::exception& e) {
        result.error = std::string("round ") + std::to_string(round) + ": " + e.what();
        return result;
      }
    }
    const auto& X = context->features();
    const auto& labelled = pool.labelled_rows();
    std::vector<BinaryLabel> labels;
    labels.reserve(labelled.size());
    for (auto r : labelled) labels.push_back(*pool.human_label(r));

    if (round % options.cv_cadence == 0) {
      params = cross_validate(X, labelled, labels, params, derive_seed(seed, kCvStream, round), options.solver);
      rec.cross_validated = true;
    }
    auto solver = options.solver;
    solver.seed = derive_seed(seed, kTrainStream, round);
    const auto model = train_svm_binary(X, labelled, labels, params.C, solver);

    const auto unlabelled = pool.unlabelled_rows();
    const auto margins = model.decision(X, unlabelled);
    std::vector<BinaryLabel> predicted(margins.size());
    pool.clear_machine();
    for (std::size_t i = 0; i < margins.size(); ++i) {
      predicted[i] = predict_from_margin(margins[i]);
      pool.assign_machine(unlabelled[i], predicted[i]);
    }
    rec.labels_used = pool.labelled_count();
    rec.accuracy_plus = accuracy_plus(pool, unlabelled, predicted, truth);
    rec.C = params.C;
    result.rounds.push_back(rec);
    result.curve.points.push_back({rec.labels_used, rec.accuracy_plus});

    if (pool.labelled_count() >= options.budget || unlabelled.empty()) break;

    const std::size_t want = std::min(options.batch_size, options.budget - pool.labelled_count());
    const auto batch = context->select(options, &model, params.C, labelled, labels, unlabelled, want,
                                       derive_seed(seed, kSelectStream, round));
    for (auto row : batch.rows) pool.assign_human(row, truth[row]);
  }
  return result;
}

}  // namespace detail

/// Simulated-oracle active learning over a fixed representation.
inline RunResult run_simulation(const Corpus& corpus, const DenseMatrix& representation,
                                const LoopOptions& options, std::uint64_t seed) {
  return detail::run_loop(corpus, representation, options, seed, {});
}

/// Adaptive tuning: like run_simulation, but every `cadence_rounds` rounds the
/// provider is fine-tuned on all labelled texts and the whole corpus is
/// re-embedded before the classifier is trained. The provider is reset first
/// so repeated runs are independent.
inline RunResult run_atal(const Corpus& corpus, EmbeddingProvider& provider, EncodingMode mode,
                          const LoopOptions& options, std::uint64_t seed) {
  if (!options.atal) throw ValidationError("atal: options missing");
  if (!provider.can_fine_tune())
    throw ValidationError("atal: provider '" + provider.model_id() + "' cannot fine-tune");
  const auto atal = *options.atal;
  provider.reset();
  const auto texts = corpus.texts();
  const DenseMatrix initial = provider.embed(texts, mode);

  auto hook = [&](std::size_t round, const LabelPool& pool, RunResult& result) -> std::optional<DenseMatrix> {
    if (round == 0 || round % atal.cadence_rounds != 0) return std::nullopt;
    std::vector<LabelledText> data;
    for (auto r : pool.labelled_rows()) data.push_back({corpus[r].text, *pool.human_label(r)});
    result.fine_tunes.push_back(provider.fine_tune(data, atal.tuning));
    auto refreshed = provider.embed(texts, mode);
    if (refreshed.rows() != corpus.size()) throw Error("provider returned wrong row count after fine-tuning");
    return refreshed;
  };
  return detail::run_loop(corpus, initial, options, seed, hook);
}

}  // namespace altext
