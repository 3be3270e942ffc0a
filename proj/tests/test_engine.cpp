#include <gtest/gtest.h>

#include <sstream>

#include "altext/default_stoplist.hpp"
#include "altext/engine.hpp"
#include "altext/experiment.hpp"
#include "altext/tfidf.hpp"
#include "altext/toy_provider.hpp"
#include "support.hpp"

using namespace altext;

namespace {

struct Fixture {
  Corpus corpus;
  DenseMatrix X;
};

Fixture blob_fixture(std::size_t n, std::size_t dims, double shift, std::uint64_t seed) {
  auto b = testkit::gaussian_blobs(n, dims, shift, seed);
  return {testkit::labelled_corpus(b.y), std::move(b.X)};
}

const Corpus& toy_corpus() {
  static const Corpus c = load_corpus(ALTEXT_DATA_DIR "/toy_reviews.jsonl");
  return c;
}

const DenseMatrix& toy_tfidf() {
  static const DenseMatrix m = [] {
    const auto pre = preprocess(toy_corpus(), default_stoplist());
    return tfidf(toy_corpus(), pre.vocabulary, pre.streams).values;
  }();
  return m;
}

std::vector<std::size_t> xs(const LearningCurve& c) {
  std::vector<std::size_t> out;
  for (const auto& p : c.points) out.push_back(p.labels_used);
  return out;
}

}  // namespace

TEST(LoopOptions, DefaultsAndValidation) {
  LoopOptions o;
  EXPECT_EQ(o.batch_size, 10u);
  EXPECT_EQ(o.budget, 1000u);
  EXPECT_EQ(o.seed_per_class, 5u);
  EXPECT_EQ(o.cv_cadence, 10u);
  EXPECT_EQ(o.committee_size, 5u);
  EXPECT_EQ(o.egal_w, 0.25);
  EXPECT_NO_THROW(o.validate());
  o.budget = 9;
  EXPECT_THROW(o.validate(), ValidationError);
  o.budget = 10;
  o.batch_size = 0;
  EXPECT_THROW(o.validate(), ValidationError);
  const AtalOptions a;
  EXPECT_EQ(a.cadence_rounds, 20u);
}

TEST(Simulation, ExhaustedTwentyDocPool) {
  auto f = blob_fixture(20, 3, 1.0, 1);
  LoopOptions o;
  o.budget = 20;
  const auto r = run_simulation(f.corpus, f.X, o, 0);
  ASSERT_FALSE(r.error);
  EXPECT_EQ(xs(r.curve), (std::vector<std::size_t>{10, 20}));
  EXPECT_EQ(r.curve.points.back().accuracy_plus, 1.0);
}

TEST(Simulation, DefaultsGiveHundredPointsFromTenToThousand) {
  const auto r = run_simulation(toy_corpus(), toy_tfidf(), LoopOptions{}, 3);
  ASSERT_FALSE(r.error);
  ASSERT_EQ(r.curve.points.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(r.curve.points[i].labels_used, 10 + 10 * i);
    EXPECT_EQ(r.rounds[i].round, i);
    EXPECT_GE(r.curve.points[i].accuracy_plus, 0.0);
    EXPECT_LE(r.curve.points[i].accuracy_plus, 1.0);
  }
  // cross-validation exactly at rounds 0, 10, 20, ...; C frozen in between
  for (const auto& rec : r.rounds) {
    EXPECT_EQ(rec.cross_validated, rec.round % 10 == 0) << rec.round;
    if (rec.round % 10 != 0) {
      EXPECT_EQ(rec.C, r.rounds[rec.round - rec.round % 10].C);
    }
    EXPECT_FALSE(rec.fine_tuned);
  }
}

TEST(Simulation, BudgetNotMultipleOfBatchTruncatesLastBatch) {
  auto f = blob_fixture(100, 3, 0.8, 2);
  LoopOptions o;
  o.budget = 35;
  const auto r = run_simulation(f.corpus, f.X, o, 4);
  EXPECT_EQ(xs(r.curve), (std::vector<std::size_t>{10, 20, 30, 35}));
}

TEST(Simulation, DeterministicGivenSeed) {
  auto f = blob_fixture(300, 5, 0.3, 3);
  for (auto s : {Strategy::random, Strategy::uncertainty, Strategy::qbc, Strategy::information_density,
                 Strategy::egal}) {
    LoopOptions o;
    o.strategy = s;
    o.budget = 80;
    const auto a = run_simulation(f.corpus, f.X, o, 11);
    const auto b = run_simulation(f.corpus, f.X, o, 11);
    ASSERT_FALSE(a.error) << *a.error;
    EXPECT_EQ(a.curve.points, b.curve.points) << to_string(s);
    EXPECT_EQ(a.curve.strategy, to_string(s));
  }
}

TEST(Simulation, LabelledCountGrowsByBatch) {
  auto f = blob_fixture(200, 4, 0.5, 8);
  LoopOptions o;
  o.batch_size = 7;
  o.budget = 80;
  const auto r = run_simulation(f.corpus, f.X, o, 1);
  for (std::size_t i = 0; i + 1 < r.curve.points.size(); ++i) EXPECT_EQ(r.curve.points[i].labels_used, 10 + 7 * i);
  EXPECT_EQ(r.curve.points.back().labels_used, 80u);
}

TEST(Simulation, RequiresGroundTruthAndAlignment) {
  auto f = blob_fixture(20, 2, 1.0, 1);
  EXPECT_THROW(run_simulation(f.corpus, DenseMatrix(19, 2), LoopOptions{}, 0), ValidationError);
  const Corpus unlabelled("u", {{"a", "x", {}}, {"b", "y", 1}});
  EXPECT_THROW(run_simulation(unlabelled, DenseMatrix(2, 2), LoopOptions{}, 0), ValidationError);
}

TEST(Atal, FourFineTunesAtDefaultCadenceAndBudget) {
  StaticProvider provider("fixed", toy_tfidf(), toy_corpus().texts());
  LoopOptions o;
  o.atal = AtalOptions{};
  const auto r = run_atal(toy_corpus(), provider, EncodingMode::avg, o, 5);
  ASSERT_FALSE(r.error);
  EXPECT_EQ(provider.fine_tune_calls(), 4u);
  EXPECT_EQ(r.fine_tunes.size(), 4u);
  std::vector<std::size_t> tuned_at;
  for (const auto& rec : r.rounds)
    if (rec.fine_tuned) tuned_at.push_back(rec.labels_used);
  EXPECT_EQ(tuned_at, (std::vector<std::size_t>{210, 410, 610, 810}));

  // a fine-tune that changes nothing leaves the curve identical to the plain run
  const auto plain = run_simulation(toy_corpus(), toy_tfidf(), o, 5);
  ASSERT_EQ(plain.curve.points.size(), r.curve.points.size());
  for (std::size_t i = 0; i < plain.curve.points.size(); ++i) {
    EXPECT_EQ(plain.curve.points[i].labels_used, r.curve.points[i].labels_used);
    EXPECT_NEAR(plain.curve.points[i].accuracy_plus, r.curve.points[i].accuracy_plus, 1e-9);
  }
}

TEST(Atal, ProviderFailureKeepsPartialCurve) {
  class Failing : public StaticProvider {
   public:
    using StaticProvider::StaticProvider;
    TrainingReport fine_tune(const std::vector<LabelledText>&, const FineTuneParams&) override {
      throw Error("GPU on fire");
    }
  };
  auto f = blob_fixture(120, 3, 0.5, 6);
  Failing provider("bad", f.X, f.corpus.texts());
  LoopOptions o;
  o.budget = 100;
  o.atal = AtalOptions{3, {}};
  const auto r = run_atal(f.corpus, provider, EncodingMode::avg, o, 0);
  ASSERT_TRUE(r.error);
  EXPECT_NE(r.error->find("GPU on fire"), std::string::npos);
  EXPECT_EQ(xs(r.curve), (std::vector<std::size_t>{10, 20, 30}));
}

TEST(Atal, RequiresTunableProviderAndOptions) {
  class Frozen : public EmbeddingProvider {
   public:
    std::string model_id() const override { return "frozen"; }
    DenseMatrix embed(const std::vector<std::string>& t, EncodingMode) override { return DenseMatrix(t.size(), 1); }
    void reset() override {}
  } frozen;
  auto f = blob_fixture(20, 2, 1.0, 1);
  LoopOptions o;
  EXPECT_THROW(run_atal(f.corpus, frozen, EncodingMode::avg, o, 0), ValidationError);
  o.atal = AtalOptions{};
  EXPECT_THROW(run_atal(f.corpus, frozen, EncodingMode::avg, o, 0), ValidationError);
}

TEST(Atal, ResetMakesRepeatedRunsIndependent) {
  HashedEncoderProvider provider;
  LoopOptions o;
  o.budget = 60;
  o.atal = AtalOptions{2, {}};
  o.atal->tuning.learning_rate = 0.01;
  o.atal->tuning.epochs = 3;
  const auto a = run_atal(toy_corpus(), provider, EncodingMode::avg, o, 2);
  const auto b = run_atal(toy_corpus(), provider, EncodingMode::avg, o, 2);
  ASSERT_FALSE(a.error);
  EXPECT_EQ(a.curve.points, b.curve.points);
}

TEST(Atal, ToyFineTuningDoesNotHurtInMostSeeds) {
  // Paired comparison at the first fine-tune (|L| = 210): both runs have the
  // same labelled set, one scored on the tuned representation.
  HashedEncoderProvider provider;
  LoopOptions o;
  o.budget = 210;
  o.atal = AtalOptions{};
  o.atal->tuning.learning_rate = 0.01;
  int not_worse = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto tuned = run_atal(toy_corpus(), provider, EncodingMode::avg, o, seed);
    provider.reset();
    const auto initial = provider.embed(toy_corpus().texts(), EncodingMode::avg);
    const auto plain = run_simulation(toy_corpus(), initial, o, seed);
    ASSERT_FALSE(tuned.error) << *tuned.error;
    ASSERT_EQ(tuned.curve.points.size(), 21u);
    ASSERT_TRUE(tuned.rounds.back().fine_tuned);
    for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(tuned.curve.points[i], plain.curve.points[i]);
    not_worse += tuned.curve.points.back().accuracy_plus >= plain.curve.points.back().accuracy_plus;
  }
  EXPECT_GE(not_worse, 7);
}

TEST(Experiment, SummaryOverSeedsAndOrderInvariance) {
  ExperimentConfig cfg;
  cfg.loop.budget = 50;
  cfg.loop.representation = "tfidf";
  cfg.seeds = {0};
  auto one = run_experiment(cfg, toy_corpus());
  ASSERT_EQ(one.summary.size(), 1u);
  EXPECT_EQ(one.summary[0].aulc_std, 0.0);
  EXPECT_EQ(ExperimentConfig{}.seeds.size(), 10u);

  cfg.seeds = {4, 1, 7};
  const auto a = run_experiment(cfg, toy_corpus());
  cfg.seeds = {7, 4, 1};
  cfg.threads = 2;
  const auto b = run_experiment(cfg, toy_corpus());
  ASSERT_TRUE(a.all_completed());
  EXPECT_EQ(a.summary[0].aulc_mean, b.summary[0].aulc_mean);
  EXPECT_EQ(a.summary[0].aulc_std, b.summary[0].aulc_std);
  EXPECT_EQ(a.summary[0].runs, 3u);
}

TEST(Experiment, CsvLayout) {
  ExperimentConfig cfg;
  cfg.loop.budget = 30;
  cfg.loop.representation = "tfidf";
  cfg.seeds = {2, 0};
  const auto r = run_experiment(cfg, toy_corpus());
  std::ostringstream curves, summary;
  write_curves_csv(curves, r);
  write_summary_csv(summary, r);
  std::istringstream lines(curves.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "seed,round,labels_used,accuracy_plus");
  std::getline(lines, line);
  EXPECT_EQ(line.rfind("2,0,10,0.", 0), 0u) << line;
  std::size_t rows = 1;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 6u);
  EXPECT_EQ(summary.str().substr(0, summary.str().find('\n')), "representation,strategy,aulc_mean,aulc_std,runs");
}
