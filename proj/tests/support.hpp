#pragma once

// Fixtures and brute-force reference implementations shared by the unit and
// acceptance tests. The oracles deliberately work on dense data with naive
// loops so they share as little code as possible with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "altext/corpus.hpp"
#include "altext/matrix.hpp"
#include "altext/rng.hpp"
#include "altext/strategies.hpp"
#include "altext/svm.hpp"

namespace testkit {

using altext::BinaryLabel;
using altext::DenseMatrix;

/// Corpus with ids d0..d{n-1}, distinct texts, and the given true labels.
inline altext::Corpus labelled_corpus(const std::vector<BinaryLabel>& labels) {
  std::vector<altext::Document> docs;
  for (std::size_t i = 0; i < labels.size(); ++i)
    docs.push_back({"d" + std::to_string(i), "document number " + std::to_string(i), labels[i]});
  return altext::Corpus("fixture", std::move(docs));
}

struct Blobs {
  DenseMatrix X;
  std::vector<BinaryLabel> y;
};

/// Two isotropic Gaussians with means at +-shift on every axis; labels alternate.
inline Blobs gaussian_blobs(std::size_t n, std::size_t dims, double shift, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Blobs b{DenseMatrix(n, dims), std::vector<BinaryLabel>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    b.y[i] = static_cast<BinaryLabel>(i % 2);
    const double mu = b.y[i] == 1 ? shift : -shift;
    for (std::size_t j = 0; j < dims; ++j) b.X(i, j) = mu + normal(gen);
  }
  return b;
}

/// Random dense matrix with a fraction of exact zeros (exercises sparse paths).
inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double zero_fraction = 0.3) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal;
  DenseMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = u(gen) < zero_fraction ? 0.0 : normal(gen);
  return m;
}

inline std::vector<std::size_t> iota_rows(std::size_t n, std::size_t from = 0) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), from);
  return v;
}

// ---------------------------------------------------------------------------
// Linear algebra on dense rows

inline double dense_dot(const DenseMatrix& X, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t c = 0; c < X.cols(); ++c) s += X(a, c) * X(b, c);
  return s;
}

inline double dense_cosine(const DenseMatrix& X, std::size_t a, std::size_t b) {
  const double na = std::sqrt(dense_dot(X, a, a)), nb = std::sqrt(dense_dot(X, b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dense_dot(X, a, b) / (na * nb);
}

inline double dense_margin(const altext::SvmModel& m, const DenseMatrix& X, std::size_t r) {
  double s = m.bias;
  for (std::size_t c = 0; c < X.cols(); ++c) s += m.weights[c] * X(r, c);
  return s;
}

// ---------------------------------------------------------------------------
// SVM dual QP oracle
//
// max_a  sum a_i - 1/2 a^T Q a,  0 <= a_i <= C,  Q_ij = y_i y_j (x_i.x_j + 1)
// (the constant feature carries the bias). Solved by accelerated projected
// gradient ascent with a 1/L step, restarting on objective decrease, until
// the objective stalls.

struct QpSolution {
  std::vector<double> alpha;
  double objective = 0.0;
  std::size_t iterations = 0;
};

inline double qp_objective(const std::vector<std::vector<double>>& Q, const std::vector<double>& a) {
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    lin += a[i];
    for (std::size_t j = 0; j < a.size(); ++j) quad += a[i] * Q[i][j] * a[j];
  }
  return lin - 0.5 * quad;
}

inline QpSolution qp_oracle(const DenseMatrix& X, std::span<const std::size_t> rows, std::span<const int> signs,
                            double C, std::size_t max_iterations = 2'000'000) {
  const std::size_t n = rows.size();
  std::vector<std::vector<double>> Q(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) Q[i][j] = signs[i] * signs[j] * (dense_dot(X, rows[i], rows[j]) + 1.0);

  // Lipschitz constant = largest eigenvalue of Q, by power iteration.
  // A random start vector: a constant one can be orthogonal to the top
  // eigenvector when the labels alternate.
  std::mt19937_64 gen(12345);
  std::normal_distribution<double> normal;
  std::vector<double> v(n), Qv(n);
  for (auto& x : v) x = normal(gen);
  double lambda = 1.0;
  for (int it = 0; it < 2000; ++it) {
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Qv[i] = 0.0;
      for (std::size_t j = 0; j < n; ++j) Qv[i] += Q[i][j] * v[j];
      norm += Qv[i] * Qv[i];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    lambda = norm;
    for (std::size_t i = 0; i < n; ++i) v[i] = Qv[i] / norm;
  }
  const double step = 1.0 / (lambda * 1.01);

  std::vector<double> a(n, 0.0), prev(n, 0.0), yk(n, 0.0), grad(n);
  double t = 1.0, obj = 0.0, best_window = -1e300;
  QpSolution sol;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double g = 1.0;
      for (std::size_t j = 0; j < n; ++j) g -= Q[i][j] * yk[j];
      grad[i] = g;
    }
    prev = a;
    for (std::size_t i = 0; i < n; ++i) a[i] = std::clamp(yk[i] + step * grad[i], 0.0, C);
    const double new_obj = qp_objective(Q, a);
    if (new_obj < obj) {  // restart momentum
      t = 1.0;
      yk = a;
    } else {
      const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
      for (std::size_t i = 0; i < n; ++i) yk[i] = a[i] + (t - 1.0) / t_next * (a[i] - prev[i]);
      t = t_next;
    }
    obj = new_obj;
    sol.iterations = it;
    if (it % 5000 == 0) {
      if (obj - best_window < 1e-13) break;  // stalled
      best_window = obj;
    }
  }
  sol.alpha = a;
  sol.objective = qp_objective(Q, a);
  return sol;
}

// ---------------------------------------------------------------------------
// Strategy oracles

/// Full sort of U by (|margin|, row).
inline std::vector<std::size_t> uncertainty_oracle(const altext::SvmModel& m, const DenseMatrix& X,
                                                   std::vector<std::size_t> U, std::size_t k) {
  std::sort(U.begin(), U.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(dense_margin(m, X, a)), mb = std::abs(dense_margin(m, X, b));
    if (ma != mb) return ma < mb;
    return a < b;
  });
  U.resize(std::min(k, U.size()));
  return U;
}

inline double entropy_oracle(double margin) {
  const double p = 1.0 / (1.0 + std::exp(-margin));
  double h = 0.0;
  if (p > 0.0 && p < 1.0) h = -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
  return h;
}

/// H(margin) * (mean pairwise cosine over U)^beta for each member of U.
inline std::vector<double> id_scores_oracle(const altext::SvmModel& m, const DenseMatrix& X,
                                            const std::vector<std::size_t>& U, double beta) {
  std::vector<double> out;
  for (auto r : U) {
    double density = 0.0;
    for (auto s : U) density += dense_cosine(X, r, s);
    density /= static_cast<double>(U.size());
    out.push_back(entropy_oracle(dense_margin(m, X, r)) * std::pow(density, beta));
  }
  return out;
}

/// Top-k of U by score descending, ties by row, using a full sort.
inline std::vector<std::size_t> rank_desc(const std::vector<std::size_t>& U, const std::vector<double>& score,
                                          std::size_t k) {
  std::vector<std::size_t> idx = iota_rows(U.size());
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return U[a] < U[b];
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, idx.size()); ++i) out.push_back(U[idx[i]]);
  return out;
}

struct EgalOracle {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> density;  // per corpus row
  std::vector<std::size_t> candidates;
  std::vector<std::size_t> batch;
};

/// Scripted EGAL: two-pass mean and population sd of all distinct-pair
/// cosines; density sums similarities >= alpha to every other row; d = max
/// cosine to L; CS = {d <= beta}, raising beta first to the nearest-rank
/// w-quantile of d over U and then to the k-th smallest d.
inline EgalOracle egal_oracle(const DenseMatrix& X, const std::vector<std::size_t>& L,
                              const std::vector<std::size_t>& U, std::size_t k, double w) {
  const std::size_t n = X.rows();
  std::vector<double> sims;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sims.push_back(dense_cosine(X, i, j));
  double mean = 0.0;
  for (double s : sims) mean += s;
  mean /= static_cast<double>(sims.size());
  double var = 0.0;
  for (double s : sims) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / static_cast<double>(sims.size()));

  EgalOracle o;
  o.alpha = mean - 0.5 * sd;
  o.density.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double s = dense_cosine(X, i, j);
      if (s >= o.alpha) o.density[i] += s;
    }
  std::vector<double> d;
  for (auto u : U) {
    double best = -2.0;
    for (auto l : L) best = std::max(best, dense_cosine(X, u, l));
    d.push_back(best);
  }
  const std::size_t want = std::min(k, U.size());
  auto count_at = [&](double beta) {
    return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [&](double x) { return x <= beta; }));
  };
  double beta = o.alpha;
  if (count_at(beta) < want) {
    auto sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(w * static_cast<double>(d.size()))));
    beta = std::max(beta, sorted[std::min(rank, sorted.size()) - 1]);
    if (count_at(beta) < want) beta = std::max(beta, sorted[want - 1]);
  }
  o.beta = beta;
  std::vector<double> cs_density;
  for (std::size_t i = 0; i < U.size(); ++i)
    if (d[i] <= beta) {
      o.candidates.push_back(U[i]);
      cs_density.push_back(o.density[U[i]]);
    }
  o.batch = rank_desc(o.candidates, cs_density, k);
  return o;
}

/// QBC reference: replays the documented bootstrap draws (one shared stream,
/// |L| draws per member, redrawn until both classes appear), trains each member,
/// then ranks U by vote entropy, mean |margin|, row with a full sort.
inline std::vector<std::size_t> qbc_oracle(const DenseMatrix& Xd, const std::vector<std::size_t>& L,
                                           const std::vector<BinaryLabel>& y, const std::vector<std::size_t>& U,
                                           std::size_t k, std::uint64_t seed, const altext::QbcOptions& options) {
  const altext::SparseRows X(Xd);
  altext::Rng rng(altext::derive_seed(seed, 0x9bc));
  std::vector<int> votes(U.size(), 0);
  std::vector<double> abs_sum(U.size(), 0.0);
  for (std::size_t m = 0; m < options.committee_size; ++m) {
    std::vector<std::size_t> rows;
    std::vector<BinaryLabel> labels;
    for (int attempt = 0; attempt < 10; ++attempt) {
      rows.clear();
      labels.clear();
      for (std::size_t i = 0; i < L.size(); ++i) {
        const auto j = rng.below(L.size());
        rows.push_back(L[j]);
        labels.push_back(y[j]);
      }
      const auto pos = std::count(labels.begin(), labels.end(), 1);
      if (pos > 0 && pos < static_cast<long>(labels.size())) break;
    }
    auto svm = options.svm;
    svm.seed = altext::derive_seed(seed, 0x9bd, m);
    const auto model = altext::train_svm_binary(X, rows, labels, options.C, svm);
    for (std::size_t i = 0; i < U.size(); ++i) {
      const double mg = dense_margin(model, Xd, U[i]);
      votes[i] += mg >= 0.0;
      abs_sum[i] += std::abs(mg);
    }
  }
  const double cm = static_cast<double>(options.committee_size);
  std::vector<double> ent(U.size());
  for (std::size_t i = 0; i < U.size(); ++i) {
    const double p = votes[i] / cm;
    ent[i] = 0.0;
    if (p > 0.0) ent[i] -= p * std::log(p);
    if (p < 1.0) ent[i] -= (1.0 - p) * std::log(1.0 - p);
  }
  std::vector<std::size_t> idx = iota_rows(U.size());
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (ent[a] != ent[b]) return ent[a] > ent[b];
    if (abs_sum[a] != abs_sum[b]) return abs_sum[a] < abs_sum[b];
    return U[a] < U[b];
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, idx.size()); ++i) out.push_back(U[idx[i]]);
  return out;
}

/// Fold-by-fold CV over `grid` (ascending) for a given fold assignment;
/// returns the argmax C with ties to the smaller value.
inline double cv_oracle(const DenseMatrix& Xd, const std::vector<std::size_t>& rows, const std::vector<BinaryLabel>& y,
                        const std::vector<std::size_t>& fold, std::size_t k, const std::vector<double>& grid,
                        const altext::SvmOptions& options, std::vector<double>* accuracy = nullptr) {
  const altext::SparseRows X(Xd);
  double best_acc = -1.0, best_C = grid.front();
  for (double C : grid) {
    std::size_t correct = 0;
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> tr;
      std::vector<BinaryLabel> ty;
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (fold[i] != f) {
          tr.push_back(rows[i]);
          ty.push_back(y[i]);
        }
      const auto model = altext::train_svm_binary(X, tr, ty, C, options);
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (fold[i] == f) correct += (dense_margin(model, Xd, rows[i]) >= 0.0 ? 1 : 0) == y[i];
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(rows.size());
    if (accuracy) accuracy->push_back(acc);
    if (acc > best_acc) {
      best_acc = acc;
      best_C = C;
    }
  }
  return best_C;
}

}  // namespace testkit
