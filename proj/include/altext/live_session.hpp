#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "altext/alem.hpp"
#include "altext/corpus.hpp"
#include "altext/engine.hpp"
#include "altext/metrics.hpp"
#include "altext/strategies.hpp"
#include "altext/svm.hpp"

namespace altext {

enum class SessionPhase { seeding, active, export_only };

inline const char* to_string(SessionPhase p) {
  switch (p) {
    case SessionPhase::seeding: return "SEEDING";
    case SessionPhase::active: return "ACTIVE";
    case SessionPhase::export_only: return "EXPORT-ONLY";
  }
  return "?";
}

/// A posted label names a document that is not pending (HTTP 409).
class LabelConflict : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Posted labels are malformed or incomplete (HTTP 422).
class MalformedLabels : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct LiveRoundRecord {
  std::size_t round = 0;
  std::size_t labels_used = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::optional<double> C;  // unset when no classifier could be trained
  bool cross_validated = false;
  std::optional<double> mean_confidence;
};

/// Counts of max(p, 1 - p), p = logistic(margin), over machine-labelled rows;
/// bins [0.5, 0.6), ..., [0.9, 1.0].
struct ConfidenceHistogram {
  std::vector<double> edges{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<std::size_t> counts = std::vector<std::size_t>(5, 0);

  void add(double margin) {
    const double p = logistic(margin);
    const double c = std::max(p, 1.0 - p);
    const auto bin = std::min<std::size_t>(4, static_cast<std::size_t>((c - 0.5) / 0.1));
    ++counts[bin];
  }
};

struct ExportRow {
  std::string id;
  std::optional<BinaryLabel> label;
  std::string source;  // "human", "machine", or "unlabelled" before any classifier exists
  std::optional<double> margin;
};

/// Immutable view of a session published after every state change.
struct SessionSnapshot {
  std::string session_id;
  SessionPhase phase = SessionPhase::seeding;
  std::size_t budget = 0;
  LabelPool pool{0};
  std::vector<std::size_t> pending;
  std::vector<double> margins;  // one per corpus row when a classifier exists, else empty
  std::vector<LiveRoundRecord> history;
  ConfidenceHistogram histogram;
  std::shared_ptr<const Corpus> corpus;

  std::vector<ExportRow> export_rows() const {
    std::vector<ExportRow> rows;
    rows.reserve(corpus->size());
    for (std::size_t r = 0; r < corpus->size(); ++r) {
      ExportRow row{(*corpus)[r].id, std::nullopt, "unlabelled", std::nullopt};
      if (!margins.empty()) row.margin = margins[r];
      if (auto h = pool.human_label(r)) {
        row.label = *h;
        row.source = "human";
      } else if (auto m = pool.machine_label(r)) {
        row.label = *m;
        row.source = "machine";
      }
      rows.push_back(std::move(row));
    }
    return rows;
  }
};

/// Live-oracle realisation of the active-learning loop. Single writer:
/// post_labels serialises on an internal mutex; snapshot() is safe to call
/// concurrently at any time.
class LiveSession {
 public:
  LiveSession(std::string id, std::shared_ptr<const Corpus> corpus, std::shared_ptr<const EmbeddingMatrix> embedding,
              LoopOptions options, std::uint64_t seed)
      : corpus_(std::move(corpus)),
        embedding_(std::move(embedding)),
        options_(std::move(options)),
        seed_(seed),
        context_(embedding_->values),
        pool_(corpus_->size()),
        params_(options_.svm) {
    options_.validate();
    if (embedding_->rows() != corpus_->size()) throw ValidationError("embedding rows do not match corpus");
    if (corpus_->empty()) throw ValidationError("corpus is empty");
    auto snap = std::make_shared<SessionSnapshot>();
    snap->session_id = std::move(id);
    snap->budget = std::min(options_.budget, corpus_->size());
    snap->corpus = corpus_;
    snap->pool = pool_;
    snap->pending = sample_seed_rows(corpus_->size(), seed_, 2 * options_.seed_per_class);
    pending_ = snap->pending;
    publish(std::move(snap));
  }

  std::shared_ptr<const SessionSnapshot> snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
  }

  /// Applies labels for exactly the pending batch, retrains, and selects the
  /// next batch. Either everything applies or the session is unchanged.
  std::shared_ptr<const SessionSnapshot> post_labels(const std::vector<std::pair<std::string, BinaryLabel>>& labels) {
    std::lock_guard lock(write_mutex_);
    const auto current = snapshot();
    if (current->phase == SessionPhase::export_only) throw LabelConflict("session is export-only; no batch is pending");

    std::set<std::size_t> pending(pending_.begin(), pending_.end());
    std::set<std::size_t> seen;
    LabelPool pool = pool_;
    for (const auto& [id, label] : labels) {
      const auto row = corpus_->find(id);
      if (!row || !pending.contains(*row)) throw LabelConflict("document '" + id + "' is not in the pending batch");
      if (!seen.insert(*row).second) throw MalformedLabels("document '" + id + "' labelled twice");
      if (label != 0 && label != 1) throw MalformedLabels("label for '" + id + "' must be 0 or 1");
      pool.assign_human(*row, label);
    }
    if (seen.size() != pending.size()) {
      for (auto row : pending_)
        if (!seen.contains(row)) throw MalformedLabels("missing label for pending document '" + (*corpus_)[row].id + "'");
    }

    auto snap = std::make_shared<SessionSnapshot>(*current);
    LiveRoundRecord rec;
    rec.round = snap->history.size();
    rec.labels_used = pool.labelled_count();
    rec.positives = pool.human_count(1);
    rec.negatives = pool.human_count(0);

    const auto& labelled = pool.labelled_rows();
    std::vector<BinaryLabel> y;
    for (auto r : labelled) y.push_back(*pool.human_label(r));
    const auto unlabelled = pool.unlabelled_rows();
    const auto& X = context_.features();

    std::optional<SvmModel> model;
    SvmParams params = params_;
    std::size_t trained = trained_rounds_;
    snap->margins.clear();
    snap->histogram = {};
    pool.clear_machine();
    if (rec.positives > 0 && rec.negatives > 0) {
      if (trained % options_.cv_cadence == 0) {
        try {
          params = cross_validate(X, labelled, y, params, derive_seed(seed_, detail::kCvStream, trained), options_.solver);
          rec.cross_validated = true;
        } catch (const ValidationError&) {
          // too few labels per class for k folds; keep the current C
        }
      }
      auto solver = options_.solver;
      solver.seed = derive_seed(seed_, detail::kTrainStream, trained);
      model = train_svm_binary(X, labelled, y, params.C, solver);
      ++trained;
      rec.C = params.C;
      snap->margins.resize(corpus_->size());
      for (std::size_t r = 0; r < corpus_->size(); ++r) snap->margins[r] = model->decision(X.row(r));
      double conf = 0.0;
      for (auto r : unlabelled) {
        pool.assign_machine(r, predict_from_margin(snap->margins[r]));
        snap->histogram.add(snap->margins[r]);
        const double p = logistic(snap->margins[r]);
        conf += std::max(p, 1.0 - p);
      }
      if (!unlabelled.empty()) rec.mean_confidence = conf / static_cast<double>(unlabelled.size());
    }

    std::vector<std::size_t> next;
    SessionPhase phase = SessionPhase::active;
    if (pool.labelled_count() >= snap->budget || unlabelled.empty()) {
      phase = SessionPhase::export_only;
    } else {
      const std::size_t want = std::min(options_.batch_size, snap->budget - pool.labelled_count());
      const auto select_seed = derive_seed(seed_, detail::kSelectStream, rec.round);
      const bool needs_model = options_.strategy != Strategy::random && options_.strategy != Strategy::egal;
      if (needs_model && !model) {
        next = select_random(unlabelled, want, select_seed).rows;
      } else {
        next = context_
                   .select(options_, model ? &*model : nullptr, params.C, labelled, y, unlabelled, want, select_seed)
                   .rows;
      }
    }

    // commit
    snap->history.push_back(rec);
    snap->phase = phase;
    snap->pool = pool;
    snap->pending = next;
    pool_ = std::move(pool);
    pending_ = std::move(next);
    params_ = params;
    trained_rounds_ = trained;
    publish(snap);
    return snap;
  }

 private:
  void publish(std::shared_ptr<const SessionSnapshot> s) {
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(s);
  }

  std::shared_ptr<const Corpus> corpus_;
  std::shared_ptr<const EmbeddingMatrix> embedding_;
  LoopOptions options_;
  std::uint64_t seed_;
  SelectionContext context_;
  LabelPool pool_;
  std::vector<std::size_t> pending_;
  SvmParams params_;
  std::size_t trained_rounds_ = 0;

  std::mutex write_mutex_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const SessionSnapshot> snapshot_;
};

/// Next-batch entry point used by the session API.
inline std::shared_ptr<const SessionSnapshot> run_live_round(
    LiveSession& session, const std::vector<std::pair<std::string, BinaryLabel>>& labels) {
  return session.post_labels(labels);
}

inline nlohmann::json status_json(const SessionSnapshot& s) {
  nlohmann::json recent = nlohmann::json::array();
  const std::size_t from = s.history.size() > 10 ? s.history.size() - 10 : 0;
  for (std::size_t i = from; i < s.history.size(); ++i) {
    const auto& h = s.history[i];
    recent.push_back({{"round", h.round},
                      {"labels_used", h.labels_used},
                      {"positives", h.positives},
                      {"negatives", h.negatives},
                      {"C", h.C ? nlohmann::json(*h.C) : nlohmann::json()},
                      {"cross_validated", h.cross_validated},
                      {"mean_confidence", h.mean_confidence ? nlohmann::json(*h.mean_confidence) : nlohmann::json()}});
  }
  return {{"session_id", s.session_id},
          {"phase", to_string(s.phase)},
          {"labelled", s.pool.labelled_count()},
          {"unlabelled", s.pool.unlabelled_count()},
          {"budget", s.budget},
          {"pending", s.pending.size()},
          {"positives", s.pool.human_count(1)},
          {"negatives", s.pool.human_count(0)},
          {"confidence_histogram", {{"edges", s.histogram.edges}, {"counts", s.histogram.counts}}},
          {"recent_rounds", recent}};
}

inline std::string export_jsonl(const SessionSnapshot& s) {
  std::string out;
  for (const auto& row : s.export_rows()) {
    nlohmann::json j = {{"id", row.id},
                        {"label", row.label ? nlohmann::json(*row.label) : nlohmann::json()},
                        {"source", row.source},
                        {"margin", row.margin ? nlohmann::json(*row.margin) : nlohmann::json()}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace altext
