#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <thread>

#include "altext/live_session.hpp"
#include "support.hpp"

using namespace altext;

namespace {

struct LiveFixture {
  std::shared_ptr<const Corpus> corpus;
  std::shared_ptr<const EmbeddingMatrix> embedding;
};

LiveFixture live_fixture(std::size_t n, std::uint64_t seed = 1) {
  auto b = testkit::gaussian_blobs(n, 4, 1.0, seed);
  auto corpus = std::make_shared<const Corpus>(testkit::labelled_corpus(b.y));
  auto emb = std::make_shared<EmbeddingMatrix>();
  emb->values = b.X;
  emb->manifest = {"blobs", EncodingMode::none, corpus->ids()};
  return {corpus, emb};
}

/// Oracle answer for every pending document.
std::vector<std::pair<std::string, BinaryLabel>> answer(const SessionSnapshot& s) {
  std::vector<std::pair<std::string, BinaryLabel>> out;
  for (auto r : s.pending) out.emplace_back((*s.corpus)[r].id, *(*s.corpus)[r].true_label);
  return out;
}

}  // namespace

TEST(LiveSession, CreateStartsSeedingWithTenRandomDocuments) {
  auto f = live_fixture(60);
  LiveSession s("s1", f.corpus, f.embedding, LoopOptions{}, 3);
  const auto snap = s.snapshot();
  EXPECT_EQ(snap->phase, SessionPhase::seeding);
  EXPECT_EQ(snap->pending.size(), 10u);
  EXPECT_EQ(snap->pool.labelled_count(), 0u);
  EXPECT_EQ(snap->budget, 60u);  // capped at corpus size
  EXPECT_EQ(snap->pending, sample_seed_rows(60, 3, 10));
}

TEST(LiveSession, PostingTenLabelsAdvancesToActive) {
  auto f = live_fixture(60);
  LiveSession s("s1", f.corpus, f.embedding, LoopOptions{}, 3);
  const auto first = s.snapshot();
  const auto next = run_live_round(s, answer(*first));
  EXPECT_EQ(next->phase, SessionPhase::active);
  EXPECT_EQ(next->pool.labelled_count(), 10u);
  ASSERT_EQ(next->pending.size(), 10u);
  for (auto r : next->pending) EXPECT_FALSE(next->pool.is_labelled(r));
  ASSERT_EQ(next->history.size(), 1u);
  EXPECT_EQ(next->history[0].labels_used, 10u);
  const auto next2 = run_live_round(s, answer(*next));
  EXPECT_EQ(next2->pool.labelled_count(), 20u);
  EXPECT_EQ(next2->pending.size(), 10u);
}

TEST(LiveSession, RejectedPostsLeaveStateUnchanged) {
  auto f = live_fixture(60);
  LiveSession s("s1", f.corpus, f.embedding, LoopOptions{}, 3);
  const auto seeded = run_live_round(s, answer(*s.snapshot()));
  const auto before = s.snapshot();

  // label for an already-labelled id
  auto labels = answer(*before);
  labels[3].first = (*f.corpus)[before->pool.labelled_rows()[0]].id;
  EXPECT_THROW(s.post_labels(labels), LabelConflict);
  EXPECT_EQ(s.snapshot(), before);

  // unknown id
  labels = answer(*before);
  labels[0].first = "nope";
  EXPECT_THROW(s.post_labels(labels), LabelConflict);

  // missing one pending label
  labels = answer(*before);
  labels.pop_back();
  EXPECT_THROW(s.post_labels(labels), MalformedLabels);

  // duplicate entry
  labels = answer(*before);
  labels.push_back(labels.front());
  EXPECT_THROW(s.post_labels(labels), MalformedLabels);

  // bad label value
  labels = answer(*before);
  labels[1].second = 7;
  EXPECT_THROW(s.post_labels(labels), MalformedLabels);

  EXPECT_EQ(s.snapshot(), before);
  EXPECT_EQ(s.snapshot()->pool.labelled_count(), 10u);
  EXPECT_NO_THROW(s.post_labels(answer(*before)));
  (void)seeded;
}

TEST(LiveSession, BudgetReachedEntersExportOnly) {
  auto f = live_fixture(80);
  LoopOptions o;
  o.budget = 35;
  LiveSession s("s1", f.corpus, f.embedding, o, 9);
  std::vector<SessionPhase> phases{s.snapshot()->phase};
  while (s.snapshot()->phase != SessionPhase::export_only) {
    const auto snap = run_live_round(s, answer(*s.snapshot()));
    phases.push_back(snap->phase);
    ASSERT_LT(phases.size(), 20u);
  }
  const auto done = s.snapshot();
  EXPECT_EQ(done->pool.labelled_count(), 35u);
  EXPECT_TRUE(done->pending.empty());
  EXPECT_THROW(s.post_labels({}), LabelConflict);
  // SEEDING -> ACTIVE* -> EXPORT-ONLY with no back-edges
  EXPECT_EQ(phases.front(), SessionPhase::seeding);
  for (std::size_t i = 1; i < phases.size(); ++i) EXPECT_GE(static_cast<int>(phases[i]), static_cast<int>(phases[i - 1]));
  EXPECT_EQ(std::count(phases.begin(), phases.end(), SessionPhase::seeding), 1);

  // export: every corpus id exactly once with a source tag
  const auto rows = done->export_rows();
  ASSERT_EQ(rows.size(), f.corpus->size());
  std::set<std::string> ids;
  std::size_t human = 0, machine = 0;
  for (const auto& r : rows) {
    ids.insert(r.id);
    ASSERT_TRUE(r.label);
    ASSERT_TRUE(r.margin);
    human += r.source == "human";
    machine += r.source == "machine";
  }
  EXPECT_EQ(ids.size(), rows.size());
  EXPECT_EQ(human, 35u);
  EXPECT_EQ(machine, 45u);
  // human rows carry the posted (true) labels
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (rows[r].source == "human") {
      EXPECT_EQ(*rows[r].label, *(*f.corpus)[r].true_label);
    }
  EXPECT_EQ(export_jsonl(*done), export_jsonl(*done));
}

TEST(LiveSession, SingleClassSeedFallsBackToRandomBatch) {
  auto f = live_fixture(40);
  LiveSession s("s1", f.corpus, f.embedding, LoopOptions{}, 2);
  auto labels = answer(*s.snapshot());
  for (auto& l : labels) l.second = 1;  // annotator says everything is positive
  const auto snap = run_live_round(s, labels);
  EXPECT_EQ(snap->phase, SessionPhase::active);
  EXPECT_EQ(snap->pending.size(), 10u);
  EXPECT_TRUE(snap->margins.empty());
  EXPECT_FALSE(snap->history[0].C);
  for (const auto& r : snap->export_rows())
    if (r.source != "human") {
      EXPECT_EQ(r.source, "unlabelled");
    }
}

TEST(LiveSession, StatusJsonFields) {
  auto f = live_fixture(60);
  LiveSession s("abc", f.corpus, f.embedding, LoopOptions{}, 3);
  const auto snap = run_live_round(s, answer(*s.snapshot()));
  const auto j = status_json(*snap);
  EXPECT_EQ(j["session_id"], "abc");
  EXPECT_EQ(j["phase"], "ACTIVE");
  EXPECT_EQ(j["labelled"], 10);
  EXPECT_EQ(j["pending"], 10);
  std::size_t total = 0;
  for (auto c : j["confidence_histogram"]["counts"]) total += c.get<std::size_t>();
  EXPECT_EQ(total, 50u);
  EXPECT_EQ(j["recent_rounds"].size(), 1u);
  EXPECT_TRUE(j["recent_rounds"][0]["cross_validated"].get<bool>());
}

TEST(LiveSession, SnapshotsReadableDuringWrites) {
  auto f = live_fixture(300);
  LoopOptions o;
  o.budget = 200;
  LiveSession s("s1", f.corpus, f.embedding, o, 5);
  std::atomic<bool> done{false};
  std::atomic<std::size_t> reads{0};
  std::thread reader([&] {
    while (!done) {
      const auto snap = s.snapshot();
      EXPECT_EQ(snap->pool.labelled_count() + snap->pool.unlabelled_count(), 300u);
      EXPECT_EQ(snap->pending.empty(), snap->phase == SessionPhase::export_only);
      ++reads;
    }
  });
  while (s.snapshot()->phase != SessionPhase::export_only) run_live_round(s, answer(*s.snapshot()));
  done = true;
  reader.join();
  EXPECT_GT(reads.load(), 0u);
}

TEST(LiveSession, EveryStrategyRuns) {
  auto f = live_fixture(90);
  for (auto st : {Strategy::random, Strategy::uncertainty, Strategy::qbc, Strategy::information_density,
                  Strategy::egal}) {
    LoopOptions o;
    o.strategy = st;
    o.budget = 40;
    LiveSession s("s", f.corpus, f.embedding, o, 1);
    while (s.snapshot()->phase != SessionPhase::export_only) run_live_round(s, answer(*s.snapshot()));
    EXPECT_EQ(s.snapshot()->pool.labelled_count(), 40u) << to_string(st);
  }
}
