#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "altext/corpus.hpp"
#include "altext/error.hpp"
#include "altext/matrix.hpp"
#include "altext/rng.hpp"

namespace altext {

/// Binary linear classifier; prediction is 1 when the margin is >= 0.
struct SvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  double C = 1.0;
  /// Dual objective at termination and epochs used; diagnostics only.
  double dual_objective = 0.0;
  std::size_t epochs = 0;

  std::size_t dims() const noexcept { return weights.size(); }

  double decision(const SparseRow& x) const { return x.dot(weights) + bias; }

  double decision(std::span<const double> x) const {
    if (x.size() != weights.size()) {
      throw ValidationError("input has " + std::to_string(x.size()) + " columns, model expects " +
                            std::to_string(weights.size()));
    }
    return dot(x, weights) + bias;
  }

  std::vector<double> decision(const SparseRows& X, std::span<const std::size_t> rows) const {
    if (X.cols() != weights.size()) {
      throw ValidationError("input has " + std::to_string(X.cols()) + " columns, model expects " +
                            std::to_string(weights.size()));
    }
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = decision(X.row(rows[i]));
    return out;
  }
};

inline BinaryLabel predict_from_margin(double margin) noexcept { return margin >= 0.0 ? 1 : 0; }

struct SvmOptions {
  /// Stop once the largest projected-gradient violation in an epoch is below this.
  double tolerance = 1e-4;
  std::size_t max_epochs = 1000;
  std::uint64_t seed = 0;
  /// Called after every epoch with (epoch, dual objective).
  std::function<void(std::size_t, double)> on_epoch;
};

/// L2-regularised hinge-loss SVM, min 1/2|w|^2 + C sum max(0, 1 - y(w.x + b)),
/// solved by dual coordinate descent (Hsieh et al. 2008). The bias is an
/// augmented constant feature and therefore regularised with w.
/// `signs` holds y in {-1, +1} for each entry of `rows`.
inline SvmModel train_svm(const SparseRows& X, std::span<const std::size_t> rows,
                          std::span<const int> signs, double C, const SvmOptions& options = {}) {
  if (rows.size() != signs.size()) throw ValidationError("rows and labels differ in length");
  if (!(C > 0.0) || !std::isfinite(C)) throw ValidationError("C must be a positive finite number");
  bool has_pos = false, has_neg = false;
  for (int s : signs) {
    if (s == 1) has_pos = true;
    else if (s == -1) has_neg = true;
    else throw ValidationError("SVM labels must be -1 or +1");
  }
  if (!has_pos || !has_neg) throw ValidationError("SVM training needs both classes");

  const std::size_t n = rows.size();
  std::vector<double> w(X.cols(), 0.0);
  double b = 0.0;
  std::vector<double> alpha(n, 0.0), qii(n);
  for (std::size_t i = 0; i < n; ++i) qii[i] = X.row(rows[i]).squared_norm() + 1.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(options.seed, 0x5f));

  auto dual = [&] {
    double sum_alpha = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    return sum_alpha - 0.5 * (dot(w, w) + b * b);
  };

  SvmModel model;
  model.C = C;
  std::size_t epoch = 0;
  while (epoch < options.max_epochs) {
    rng.shuffle(std::span<std::size_t>(order));
    double max_violation = 0.0;
    for (auto i : order) {
      const auto x = X.row(rows[i]);
      const double y = signs[i];
      const double g = y * (x.dot(w) + b) - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
      else if (alpha[i] >= C) pg = std::max(g, 0.0);
      max_violation = std::max(max_violation, std::abs(pg));
      if (pg != 0.0) {
        const double old = alpha[i];
        alpha[i] = std::clamp(old - g / qii[i], 0.0, C);
        const double step = (alpha[i] - old) * y;
        if (step != 0.0) {
          x.axpy(step, w);
          b += step;
        }
      }
    }
    ++epoch;
    if (options.on_epoch) options.on_epoch(epoch, dual());
    if (max_violation < options.tolerance) break;
  }

  for (double v : w)
    if (!std::isfinite(v)) throw Error("SVM training produced non-finite weights");
  model.dual_objective = dual();
  model.weights = std::move(w);
  model.bias = b;
  model.epochs = epoch;
  return model;
}

/// Convenience overload taking {0,1} labels.
inline SvmModel train_svm_binary(const SparseRows& X, std::span<const std::size_t> rows,
                                 std::span<const BinaryLabel> labels, double C,
                                 const SvmOptions& options = {}) {
  std::vector<int> signs(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) signs[i] = labels[i] == 1 ? 1 : -1;
  return train_svm(X, rows, signs, C, options);
}

struct SvmParams {
  double C = 1.0;
  std::size_t cv_folds = 5;
  std::vector<double> C_grid{0.01, 0.1, 1.0, 10.0, 100.0};
};

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
/// Returns fold index per entry of `labels`.
inline std::vector<std::size_t> stratified_folds(std::span<const BinaryLabel> labels, std::size_t k,
                                                 Rng& rng) {
  std::vector<std::size_t> fold(labels.size());
  std::size_t next = 0;
  for (BinaryLabel cls : {1, 0}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    rng.shuffle(std::span<std::size_t>(members));
    for (auto i : members) fold[i] = next++ % k;
  }
  return fold;
}

/// Every fold non-empty and every training complement holding both classes.
inline bool folds_usable(std::span<const BinaryLabel> labels, std::span<const std::size_t> fold,
                         std::size_t k) {
  std::vector<std::size_t> size(k, 0), pos(k, 0);
  std::size_t total_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++size[fold[i]];
    pos[fold[i]] += labels[i] == 1;
    total_pos += labels[i] == 1;
  }
  const std::size_t total_neg = labels.size() - total_pos;
  for (std::size_t f = 0; f < k; ++f) {
    if (size[f] == 0) return false;
    const std::size_t neg = size[f] - pos[f];
    if (total_pos - pos[f] == 0 || total_neg - neg == 0) return false;
  }
  return true;
}

struct CvResult {
  SvmParams params;
  std::vector<double> accuracy;  // per C_grid entry, pooled over folds
  std::vector<std::size_t> fold;
};

/// Stratified k-fold grid search over C; ties go to the smaller C.
inline CvResult cross_validate_detailed(const SparseRows& X, std::span<const std::size_t> rows,
                                        std::span<const BinaryLabel> labels, const SvmParams& params,
                                        std::uint64_t seed, SvmOptions options = {}) {
  const std::size_t k = params.cv_folds;
  if (params.C_grid.empty()) throw ValidationError("C grid is empty");
  if (k < 2) throw ValidationError("cross-validation needs at least 2 folds");
  if (rows.size() < k) {
    throw ValidationError("cross-validation needs at least " + std::to_string(k) + " labelled examples");
  }
  Rng rng(derive_seed(seed, 0xc5));
  std::vector<std::size_t> fold;
  bool ok = false;
  for (int attempt = 0; attempt < 5 && !ok; ++attempt) {
    fold = stratified_folds(labels, k, rng);
    ok = folds_usable(labels, fold, k);
  }
  if (!ok) throw ValidationError("could not build stratified folds with both classes in every training split");

  std::vector<double> grid = params.C_grid;
  std::sort(grid.begin(), grid.end());

  CvResult result;
  result.fold = fold;
  result.params = params;
  double best = -1.0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    std::size_t correct = 0;
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> train_rows, test_rows;
      std::vector<BinaryLabel> train_labels, test_labels;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (fold[i] == f) {
          test_rows.push_back(rows[i]);
          test_labels.push_back(labels[i]);
        } else {
          train_rows.push_back(rows[i]);
          train_labels.push_back(labels[i]);
        }
      }
      options.seed = derive_seed(seed, c, f);
      const auto model = train_svm_binary(X, train_rows, train_labels, grid[c], options);
      for (std::size_t i = 0; i < test_rows.size(); ++i)
        correct += predict_from_margin(model.decision(X.row(test_rows[i]))) == test_labels[i];
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(rows.size());
    result.accuracy.push_back(acc);
    if (acc > best) {
      best = acc;
      result.params.C = grid[c];
    }
  }
  result.params.C_grid = grid;
  return result;
}

inline SvmParams cross_validate(const SparseRows& X, std::span<const std::size_t> rows,
                                std::span<const BinaryLabel> labels, const SvmParams& params,
                                std::uint64_t seed, const SvmOptions& options = {}) {
  return cross_validate_detailed(X, rows, labels, params, seed, options).params;
}

}  // namespace altext
