#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "altext/corpus.hpp"
#include "altext/error.hpp"

namespace altext {

/// (TP^H + TN^H + TP^M + TN^M) / N. Human labels are always correct; each
/// machine label on U is scored against `truth` (one entry per corpus row).
inline double accuracy_plus(const LabelPool& pool, std::span<const std::size_t> predicted_rows,
                            std::span<const BinaryLabel> predictions, std::span<const BinaryLabel> truth) {
  const std::size_t n = pool.corpus_size();
  if (truth.size() != n) throw ValidationError("ground truth does not cover the corpus");
  if (predicted_rows.size() != predictions.size()) throw ValidationError("prediction rows and labels differ in length");
  if (predicted_rows.size() != pool.unlabelled_count())
    throw ValidationError("predictions must cover exactly the unlabelled pool");
  std::vector<bool> covered(n, false);
  std::size_t correct = pool.labelled_count();
  for (std::size_t i = 0; i < predicted_rows.size(); ++i) {
    const auto row = predicted_rows[i];
    if (row >= n || pool.is_labelled(row) || covered[row])
      throw ValidationError("prediction for row " + std::to_string(row) + " is not for a distinct unlabelled row");
    covered[row] = true;
    correct += predictions[i] == truth[row];
  }
  return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
}

/// Same measure using the machine labels stored in `pool`.
inline double accuracy_plus(const LabelPool& pool, const Corpus& corpus) {
  std::vector<BinaryLabel> truth(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!corpus[i].true_label) throw ValidationError("accuracy+ needs ground truth for every document");
    truth[i] = *corpus[i].true_label;
  }
  std::vector<std::size_t> rows;
  std::vector<BinaryLabel> labels;
  for (auto r : pool.unlabelled_rows()) {
    auto m = pool.machine_label(r);
    if (!m) throw ValidationError("unlabelled row " + std::to_string(r) + " has no machine label");
    rows.push_back(r);
    labels.push_back(*m);
  }
  return accuracy_plus(pool, rows, labels, truth);
}

struct CurvePoint {
  std::size_t labels_used = 0;
  double accuracy_plus = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct LearningCurve {
  std::vector<CurvePoint> points;
  std::string representation;
  std::string strategy;
  std::uint64_t seed = 0;
};

/// Trapezoidal area under accuracy+ vs labels used, divided by the largest
/// possible area (x-span times 1.0).
inline double aulc(std::span<const CurvePoint> points) {
  if (points.size() < 2) throw ValidationError("AULC needs at least 2 curve points");
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].labels_used <= points[i - 1].labels_used)
      throw ValidationError("curve x-values must be strictly increasing");
    const double dx = static_cast<double>(points[i].labels_used - points[i - 1].labels_used);
    area += 0.5 * (points[i].accuracy_plus + points[i - 1].accuracy_plus) * dx;
  }
  const double span = static_cast<double>(points.back().labels_used - points.front().labels_used);
  return area / span;
}

inline double aulc(const LearningCurve& curve) { return aulc(curve.points); }

struct SummaryRow {
  std::string representation;
  std::string strategy;
  double aulc_mean = 0.0;
  double aulc_std = 0.0;
  std::size_t runs = 0;
};

/// Mean and sample standard deviation (n - 1; 0 for a single value).
inline std::pair<double, double> mean_and_sample_std(std::vector<double> values) {
  if (values.empty()) return {0.0, 0.0};
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

/// Groups runs by (representation, strategy). Values are reduced in sorted
/// order so the result does not depend on run order.
inline std::vector<SummaryRow> summarize(std::span<const LearningCurve> runs) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& run : runs) groups[{run.representation, run.strategy}].push_back(aulc(run));
  std::vector<SummaryRow> out;
  for (auto& [key, values] : groups) {
    const auto [mean, sd] = mean_and_sample_std(values);
    out.push_back({key.first, key.second, mean, sd, values.size()});
  }
  return out;
}

/// Fixed six-decimal rendering used for every serialised score.
inline std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace altext
