#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "altext/corpus.hpp"
#include "altext/error.hpp"
#include "altext/matrix.hpp"
#include "altext/rng.hpp"
#include "altext/svm.hpp"

namespace altext {

enum class Strategy { random, uncertainty, qbc, information_density, egal };

inline constexpr const char* kStrategyNames = "random, uncertainty, qbc, id, egal";

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::random: return "random";
    case Strategy::uncertainty: return "uncertainty";
    case Strategy::qbc: return "qbc";
    case Strategy::information_density: return "id";
    case Strategy::egal: return "egal";
  }
  return "?";
}

inline std::optional<Strategy> parse_strategy(const std::string& name) {
  for (auto s : {Strategy::random, Strategy::uncertainty, Strategy::qbc, Strategy::information_density,
                 Strategy::egal})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

/// Selected corpus rows, most informative first, with their scores.
struct QueryBatch {
  std::vector<std::size_t> rows;
  std::vector<double> scores;
  Strategy strategy = Strategy::random;
};

namespace detail {

/// Top-k of `candidates` under `before` (strict weak order); equal keys keep
/// ascending row order.
template <class Before>
QueryBatch top_k(std::span<const std::size_t> candidates, std::span<const double> scores,
                 std::size_t k, Strategy strategy, Before before) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  k = std::min(k, order.size());
  auto cmp = [&](std::size_t a, std::size_t b) {
    if (before(a, b)) return true;
    if (before(b, a)) return false;
    return candidates[a] < candidates[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), cmp);
  QueryBatch batch;
  batch.strategy = strategy;
  for (std::size_t i = 0; i < k; ++i) {
    batch.rows.push_back(candidates[order[i]]);
    batch.scores.push_back(scores[order[i]]);
  }
  return batch;
}

inline void require_pool(std::span<const std::size_t> unlabelled) {
  if (unlabelled.empty()) throw ValidationError("unlabelled pool is empty");
}

}  // namespace detail

/// Uniform sample without replacement.
inline QueryBatch select_random(std::span<const std::size_t> unlabelled, std::size_t batch_size,
                                std::uint64_t seed) {
  detail::require_pool(unlabelled);
  std::vector<std::size_t> rows(unlabelled.begin(), unlabelled.end());
  Rng rng(derive_seed(seed, 0x4a));
  const std::size_t k = std::min(batch_size, rows.size());
  for (std::size_t i = 0; i < k; ++i) std::swap(rows[i], rows[i + rng.below(rows.size() - i)]);
  rows.resize(k);
  return {rows, std::vector<double>(k, 0.0), Strategy::random};
}

/// Smallest |margin| first.
inline QueryBatch select_uncertainty(const SvmModel& model, const SparseRows& X,
                                     std::span<const std::size_t> unlabelled, std::size_t batch_size) {
  detail::require_pool(unlabelled);
  auto margins = model.decision(X, unlabelled);
  for (auto& m : margins) m = std::abs(m);
  return detail::top_k(unlabelled, margins, batch_size, Strategy::uncertainty,
                       [&](std::size_t a, std::size_t b) { return margins[a] < margins[b]; });
}

/// Binary vote entropy -sum_c (V_c/m) ln(V_c/m).
inline double vote_entropy(std::size_t positive_votes, std::size_t committee_size) {
  double h = 0.0;
  for (std::size_t v : {positive_votes, committee_size - positive_votes}) {
    if (v == 0) continue;
    const double p = static_cast<double>(v) / static_cast<double>(committee_size);
    h -= p * std::log(p);
  }
  return h;
}

struct QbcOptions {
  std::size_t committee_size = 5;
  double C = 1.0;
  SvmOptions svm;
};

/// Query-by-committee over bagged linear SVMs; highest vote entropy first,
/// ties by smaller mean |margin|, then corpus order.
inline QueryBatch select_qbc(const SparseRows& X, std::span<const std::size_t> labelled,
                             std::span<const BinaryLabel> labels, std::span<const std::size_t> unlabelled,
                             std::size_t batch_size, std::uint64_t seed, const QbcOptions& options = {}) {
  detail::require_pool(unlabelled);
  if (labelled.size() < 2) throw ValidationError("QBC needs at least 2 labelled documents");
  if (options.committee_size == 0) throw ValidationError("committee size must be positive");

  Rng rng(derive_seed(seed, 0x9bc));
  std::vector<std::size_t> votes(unlabelled.size(), 0);
  std::vector<double> mean_abs(unlabelled.size(), 0.0);
  for (std::size_t member = 0; member < options.committee_size; ++member) {
    std::vector<std::size_t> rows;
    std::vector<BinaryLabel> y;
    bool both = false;
    for (int attempt = 0; attempt < 10 && !both; ++attempt) {
      rows.clear();
      y.clear();
      for (std::size_t i = 0; i < labelled.size(); ++i) {
        const auto j = rng.below(labelled.size());
        rows.push_back(labelled[j]);
        y.push_back(labels[j]);
      }
      const auto pos = std::count(y.begin(), y.end(), 1);
      both = pos > 0 && pos < static_cast<std::ptrdiff_t>(y.size());
    }
    if (!both) throw ValidationError("bootstrap resampling never drew both classes");

    auto svm = options.svm;
    svm.seed = derive_seed(seed, 0x9bd, member);
    const auto model = train_svm_binary(X, rows, y, options.C, svm);
    for (std::size_t i = 0; i < unlabelled.size(); ++i) {
      const double m = model.decision(X.row(unlabelled[i]));
      votes[i] += predict_from_margin(m);
      mean_abs[i] += std::abs(m) / static_cast<double>(options.committee_size);
    }
  }
  std::vector<double> entropy(unlabelled.size());
  for (std::size_t i = 0; i < unlabelled.size(); ++i)
    entropy[i] = vote_entropy(votes[i], options.committee_size);
  return detail::top_k(unlabelled, entropy, batch_size, Strategy::qbc, [&](std::size_t a, std::size_t b) {
    if (entropy[a] != entropy[b]) return entropy[a] > entropy[b];
    return mean_abs[a] < mean_abs[b];
  });
}

inline double logistic(double margin) { return 1.0 / (1.0 + std::exp(-margin)); }

/// Entropy of the logistic-squashed margin, with 0 ln 0 := 0.
inline double margin_entropy(double margin) {
  const double p = logistic(margin);
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h;
}

/// Mean cosine similarity of each row in `rows` to all rows in `rows`.
/// Uses sum_j cos(x, x_j) = x/|x| . sum_j x_j/|x_j|.
inline std::vector<double> mean_cosine_density(const SparseRows& X, std::span<const std::size_t> rows) {
  std::vector<double> total(X.cols(), 0.0);
  std::vector<double> inv_norm(rows.size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto x = X.row(rows[i]);
    const double n2 = x.squared_norm();
    if (n2 > 0.0) {
      inv_norm[i] = 1.0 / std::sqrt(n2);
      x.axpy(inv_norm[i], total);
    }
  }
  std::vector<double> density(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    density[i] = X.row(rows[i]).dot(total) * inv_norm[i] / static_cast<double>(rows.size());
  return density;
}

/// Information density: margin entropy times mean pool similarity^beta.
inline QueryBatch select_id(const SvmModel& model, const SparseRows& X,
                            std::span<const std::size_t> unlabelled, std::size_t batch_size,
                            double beta_exponent = 1.0) {
  detail::require_pool(unlabelled);
  const auto margins = model.decision(X, unlabelled);
  const auto density = mean_cosine_density(X, unlabelled);
  std::vector<double> score(unlabelled.size());
  for (std::size_t i = 0; i < unlabelled.size(); ++i)
    score[i] = margin_entropy(margins[i]) * std::pow(density[i], beta_exponent);
  return detail::top_k(unlabelled, score, batch_size, Strategy::information_density,
                       [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
}

/// Corpus-wide similarity statistics for EGAL: alpha = mean - 0.5 sd over
/// all distinct pairs, and each row's density = sum of similarities >= alpha
/// to every other corpus row. Also caches each row's max similarity to the
/// labelled rows it has been shown so far.
class EgalIndex {
 public:
  explicit EgalIndex(const SparseRows& X) : X_(X), density_(X.rows(), 0.0), max_sim_(X.rows(), -2.0) {
    const std::size_t n = X.rows();
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double s = cosine(X.row(i), X.row(j));
        sum += s;
        sum2 += s * s;
      }
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    mean_ = pairs > 0 ? sum / pairs : 0.0;
    sd_ = pairs > 0 ? std::sqrt(std::max(0.0, sum2 / pairs - mean_ * mean_)) : 0.0;
    alpha_ = mean_ - 0.5 * sd_;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double s = cosine(X.row(i), X.row(j));
        if (s >= alpha_) {
          density_[i] += s;
          density_[j] += s;
        }
      }
  }

  double similarity_mean() const noexcept { return mean_; }
  double similarity_sd() const noexcept { return sd_; }
  double alpha() const noexcept { return alpha_; }
  const std::vector<double>& density() const noexcept { return density_; }

  /// max over `labelled` of cosine(row, l), for each row in `rows`. Work is
  /// incremental while `labelled` extends the previously seen sequence.
  std::vector<double> diversity(std::span<const std::size_t> labelled, std::span<const std::size_t> rows) {
    const bool extends = labelled.size() >= seen_.size() &&
                         std::equal(seen_.begin(), seen_.end(), labelled.begin());
    if (!extends) {
      seen_.clear();
      std::fill(max_sim_.begin(), max_sim_.end(), -2.0);
    }
    for (std::size_t k = seen_.size(); k < labelled.size(); ++k) {
      const auto xl = X_.row(labelled[k]);
      for (std::size_t r = 0; r < X_.rows(); ++r) max_sim_[r] = std::max(max_sim_[r], cosine(X_.row(r), xl));
      seen_.push_back(labelled[k]);
    }
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = max_sim_[rows[i]];
    return out;
  }

 private:
  const SparseRows& X_;
  double mean_ = 0.0, sd_ = 0.0, alpha_ = 0.0;
  std::vector<double> density_;
  std::vector<double> max_sim_;
  std::vector<std::size_t> seen_;
};

struct EgalParams {
  double w = 0.25;
  double alpha = 0.0;
  double beta = 0.0;

  static EgalParams recommended(const EgalIndex& index, double w = 0.25) {
    return {w, index.alpha(), index.alpha()};
  }
};

/// Nearest-rank w-quantile: the ceil(w n)-th smallest value.
inline double nearest_rank_quantile(std::vector<double> values, double w) {
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(w * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

struct EgalSelection {
  QueryBatch batch;
  double beta = 0.0;  // threshold actually used
  std::vector<std::size_t> candidates;
};

/// Exploration-guided selection: candidates are pool rows whose max
/// similarity to L is <= beta; the densest candidates are queried.
inline EgalSelection select_egal_detailed(EgalIndex& index, std::span<const std::size_t> labelled,
                                          std::span<const std::size_t> unlabelled, std::size_t batch_size,
                                          const EgalParams& params) {
  detail::require_pool(unlabelled);
  if (labelled.empty()) throw ValidationError("EGAL needs at least one labelled document");
  const auto d = index.diversity(labelled, unlabelled);
  const std::size_t want = std::min(batch_size, unlabelled.size());

  auto candidates_at = [&](double beta) {
    std::vector<std::size_t> cs;
    for (std::size_t i = 0; i < unlabelled.size(); ++i)
      if (d[i] <= beta) cs.push_back(i);
    return cs;
  };
  double beta = params.beta;
  auto cs = candidates_at(beta);
  if (cs.size() < want) {
    beta = std::max(beta, nearest_rank_quantile(d, params.w));
    cs = candidates_at(beta);
  }
  if (cs.size() < want) {
    auto sorted = d;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(want - 1), sorted.end());
    beta = std::max(beta, sorted[want - 1]);
    cs = candidates_at(beta);
  }

  std::vector<std::size_t> rows;
  std::vector<double> dens;
  for (auto i : cs) {
    rows.push_back(unlabelled[i]);
    dens.push_back(index.density()[unlabelled[i]]);
  }
  EgalSelection out;
  out.beta = beta;
  out.candidates = rows;
  out.batch = detail::top_k(rows, dens, batch_size, Strategy::egal,
                            [&](std::size_t a, std::size_t b) { return dens[a] > dens[b]; });
  return out;
}

inline QueryBatch select_egal(EgalIndex& index, std::span<const std::size_t> labelled,
                              std::span<const std::size_t> unlabelled, std::size_t batch_size,
                              const EgalParams& params) {
  return select_egal_detailed(index, labelled, unlabelled, batch_size, params).batch;
}

}  // namespace altext
