// altext: run active-learning simulations, build document embeddings, or
// serve live labelling sessions over HTTP.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <httplib.h>

#include "altext/config.hpp"
#include "altext/experiment.hpp"
#include "altext/http_api.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out_dir, bool quiet) {
  const auto cfg = altext::load_config(config_path);
  const auto corpus = altext::load_corpus(cfg.corpus);
  if (!corpus.fully_labelled()) throw altext::ValidationError("corpus: simulation needs a true label on every document");
  const auto result = altext::run_experiment(cfg, corpus, [&](const altext::SeedRun& run) {
    if (quiet) return;
    if (run.result.error) {
      std::fprintf(stderr, "seed %llu: FAILED after %zu points: %s\n", static_cast<unsigned long long>(run.seed),
                   run.result.curve.points.size(), run.result.error->c_str());
    } else {
      std::fprintf(stderr, "seed %llu: %zu points, final accuracy+ %s\n", static_cast<unsigned long long>(run.seed),
                   run.result.curve.points.size(),
                   altext::format_score(run.result.curve.points.back().accuracy_plus).c_str());
    }
  });
  altext::write_experiment(out_dir, cfg, result);
  for (const auto& row : result.summary) {
    std::printf("%s %s AULC %s +- %s (%zu runs)\n", row.representation.c_str(), row.strategy.c_str(),
                altext::format_score(row.aulc_mean).c_str(), altext::format_score(row.aulc_std).c_str(), row.runs);
  }
  return result.all_completed() ? 0 : 1;
}

struct EmbedArgs {
  std::string corpus, rep = "tfidf", out, stopwords, lexicon, mode = "avg", url = "http://127.0.0.1:8765", model;
  std::size_t topics = 300, iterations = 1000, min_count = 10, min_doc_freq = 5;
  std::uint64_t seed = 0;
};

int embed_command(const EmbedArgs& a) {
  nlohmann::json rep{{"type", a.rep},       {"topics", a.topics},   {"iterations", a.iterations},
                     {"lda_seed", a.seed},  {"mode", a.mode},       {"min_count", a.min_count},
                     {"min_doc_freq", a.min_doc_freq}, {"url", a.url}, {"model", a.model}};
  if (!a.stopwords.empty()) rep["stopwords"] = a.stopwords;
  if (!a.lexicon.empty()) rep["lexicon"] = a.lexicon;
  const auto spec = altext::parse_representation(rep, {});
  const auto corpus = altext::load_corpus(a.corpus);
  const auto m = altext::build_representation(spec, corpus);
  altext::save_embeddings(a.out, m);
  std::printf("wrote %s: %zu x %zu (%s)\n", a.out.c_str(), m.values.rows(), m.values.cols(), m.manifest.model.c_str());
  return 0;
}

httplib::Server* g_server = nullptr;

int serve_command(const std::string& corpus_path, const std::string& embeddings, const std::string& host, int port,
                  const std::string& strategy) {
  auto corpus = std::make_shared<const altext::Corpus>(altext::load_corpus(corpus_path));
  auto matrix = std::make_shared<const altext::EmbeddingMatrix>(altext::load_embeddings(embeddings, *corpus));
  altext::LoopOptions defaults;
  const auto s = altext::parse_strategy(strategy);
  if (!s) throw altext::ValidationError("strategy: unknown value '" + strategy + "' (valid: " + altext::kStrategyNames + ")");
  defaults.strategy = *s;
  defaults.budget = std::min(defaults.budget, corpus->size());
  defaults.representation = matrix->manifest.model;
  altext::SessionRegistry registry(corpus, matrix, defaults);

  httplib::Server server;
  altext::install_routes(server, registry);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::fprintf(stderr, "serving %zu documents on http://%s:%d\n", corpus->size(), host.c_str(), port);
  if (!server.listen(host, port)) throw altext::Error("cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning for binary text classification"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "results";
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a simulated experiment from a JSON config");
  run->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "Output directory for curves.csv, summary.csv, manifest.json");
  run->add_flag("-q,--quiet", quiet, "Suppress per-seed progress");

  EmbedArgs ea;
  auto* embed = app.add_subcommand("embed", "Build document vectors and write an ALEM file");
  embed->add_option("--corpus", ea.corpus, "Corpus (JSON Lines)")->required()->check(CLI::ExistingFile);
  embed->add_option("--rep", ea.rep, "Representation: tfidf, lda, wordvec, sidecar, toy");
  embed->add_option("-o,--out", ea.out, "Output .alem path")->required();
  embed->add_option("--stopwords", ea.stopwords, "Stopword list (one per line)");
  embed->add_option("--lexicon", ea.lexicon, "Word-vector text file (wordvec)");
  embed->add_option("--topics", ea.topics, "LDA topics");
  embed->add_option("--iterations", ea.iterations, "LDA Gibbs sweeps");
  embed->add_option("--min-count", ea.min_count, "Minimum corpus term count");
  embed->add_option("--min-doc-freq", ea.min_doc_freq, "Minimum document frequency");
  embed->add_option("--seed", ea.seed, "LDA sampler seed");
  embed->add_option("--mode", ea.mode, "Encoding mode for providers: avg or cls");
  embed->add_option("--url", ea.url, "Sidecar base URL");
  embed->add_option("--model", ea.model, "Sidecar model id");

  std::string corpus_path, embeddings, host = "127.0.0.1", strategy = "uncertainty";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve live labelling sessions over HTTP");
  serve->add_option("--corpus", corpus_path, "Corpus (JSON Lines)")->required()->check(CLI::ExistingFile);
  serve->add_option("--embeddings", embeddings, "ALEM file aligned with the corpus")->required()->check(CLI::ExistingFile);
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--strategy", strategy, "Default query strategy for new sessions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(config_path, out_dir, quiet);
    if (*embed) return embed_command(ea);
    if (*serve) return serve_command(corpus_path, embeddings, host, port, strategy);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
