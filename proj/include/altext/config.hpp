#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "altext/alem.hpp"
#include "altext/default_stoplist.hpp"
#include "altext/engine.hpp"
#include "altext/error.hpp"
#include "altext/lda.hpp"
#include "altext/sidecar_client.hpp"
#include "altext/tfidf.hpp"
#include "altext/toy_provider.hpp"
#include "altext/word_vectors.hpp"

namespace altext {

enum class RepresentationKind { tfidf, lda, wordvec, alem, sidecar, toy };

inline constexpr const char* kRepresentationNames = "tfidf, lda, wordvec, alem, sidecar, toy";

inline std::optional<RepresentationKind> parse_representation_kind(const std::string& s) {
  if (s == "tfidf") return RepresentationKind::tfidf;
  if (s == "lda") return RepresentationKind::lda;
  if (s == "wordvec") return RepresentationKind::wordvec;
  if (s == "alem") return RepresentationKind::alem;
  if (s == "sidecar") return RepresentationKind::sidecar;
  if (s == "toy") return RepresentationKind::toy;
  return std::nullopt;
}

/// Where document vectors come from: a builtin builder, an ALEM file, or a provider.
struct RepresentationSpec {
  RepresentationKind kind = RepresentationKind::tfidf;
  std::optional<std::filesystem::path> stopwords;  // builtin default list when unset
  PreprocessOptions preprocess;
  LdaOptions lda;
  std::filesystem::path lexicon;
  std::filesystem::path path;  // alem
  std::string url;             // sidecar
  std::string model;           // sidecar
  EncodingMode mode = EncodingMode::avg;
  HashedEncoderProvider::Options toy;

  bool is_provider() const { return kind == RepresentationKind::sidecar || kind == RepresentationKind::toy; }

  std::string label() const {
    switch (kind) {
      case RepresentationKind::tfidf: return "tfidf";
      case RepresentationKind::lda: return "lda";
      case RepresentationKind::wordvec: return "wordvec:" + lexicon.stem().string();
      case RepresentationKind::alem: return "alem:" + path.stem().string();
      case RepresentationKind::sidecar: return model + ":" + to_string(mode);
      case RepresentationKind::toy: return "toy:" + to_string(mode);
    }
    return "?";
  }
};

struct ExperimentConfig {
  std::filesystem::path corpus;
  RepresentationSpec representation;
  LoopOptions loop;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::size_t threads = 1;
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <class T>
T field(const nlohmann::json& j, const std::string& name, const std::string& where, T fallback) {
  if (!j.contains(name) || j[name].is_null()) return fallback;
  try {
    return j[name].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(where + name + ": wrong type");
  }
}

inline std::size_t count_field(const nlohmann::json& j, const std::string& name, const std::string& where,
                               std::size_t fallback) {
  if (!j.contains(name) || j[name].is_null()) return fallback;
  if (!j[name].is_number_integer() || j[name].get<std::int64_t>() < 0)
    throw ValidationError(where + name + ": must be a non-negative integer");
  return j[name].get<std::size_t>();
}

inline double positive_field(const nlohmann::json& j, const std::string& name, const std::string& where,
                             double fallback) {
  const double v = field<double>(j, name, where, fallback);
  if (!(v > 0.0)) throw ValidationError(where + name + ": must be positive");
  return v;
}

}  // namespace detail

inline RepresentationSpec parse_representation(const nlohmann::json& j, const std::filesystem::path& base) {
  RepresentationSpec spec;
  const std::string where = "representation.";
  nlohmann::json obj = j;
  if (j.is_string()) obj = nlohmann::json{{"type", j.get<std::string>()}};
  if (!obj.is_object()) throw ValidationError("representation: must be a name or an object");
  const auto type = detail::field<std::string>(obj, "type", where, "");
  const auto kind = parse_representation_kind(type);
  if (!kind) {
    throw ValidationError("representation.type: unknown value '" + type + "' (valid: " + kRepresentationNames + ")");
  }
  spec.kind = *kind;
  if (obj.contains("stopwords")) spec.stopwords = detail::resolve(base, detail::field<std::string>(obj, "stopwords", where, ""));
  spec.preprocess.min_count = detail::count_field(obj, "min_count", where, spec.preprocess.min_count);
  spec.preprocess.min_doc_freq = detail::count_field(obj, "min_doc_freq", where, spec.preprocess.min_doc_freq);
  spec.lda.topics = detail::count_field(obj, "topics", where, spec.lda.topics);
  spec.lda.iterations = detail::count_field(obj, "iterations", where, spec.lda.iterations);
  spec.lda.seed = detail::field<std::uint64_t>(obj, "lda_seed", where, 0);
  if (obj.contains("alpha")) spec.lda.alpha = detail::positive_field(obj, "alpha", where, 1.0);
  spec.lda.eta = detail::positive_field(obj, "eta", where, spec.lda.eta);
  spec.mode = parse_encoding_mode(detail::field<std::string>(obj, "mode", where, "avg"));
  spec.toy.dims = detail::count_field(obj, "dims", where, spec.toy.dims);
  spec.toy.seed = detail::field<std::uint64_t>(obj, "model_seed", where, spec.toy.seed);

  switch (spec.kind) {
    case RepresentationKind::wordvec:
      if (!obj.contains("lexicon")) throw ValidationError("representation.lexicon: required for wordvec");
      spec.lexicon = detail::resolve(base, detail::field<std::string>(obj, "lexicon", where, ""));
      break;
    case RepresentationKind::alem:
      if (!obj.contains("path")) throw ValidationError("representation.path: required for alem");
      spec.path = detail::resolve(base, detail::field<std::string>(obj, "path", where, ""));
      break;
    case RepresentationKind::sidecar:
      spec.url = detail::field<std::string>(obj, "url", where, "http://127.0.0.1:8765");
      spec.model = detail::field<std::string>(obj, "model", where, "");
      if (spec.model.empty()) throw ValidationError("representation.model: required for sidecar");
      break;
    default: break;
  }
  return spec;
}

/// Parses the shared JSON run schema. Relative paths resolve against `base`.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  if (!j.is_object()) throw ValidationError("config: must be a JSON object");
  ExperimentConfig cfg;
  if (!j.contains("corpus") || !j["corpus"].is_string()) throw ValidationError("corpus: required path");
  cfg.corpus = detail::resolve(base, j["corpus"].get<std::string>());
  cfg.representation = parse_representation(j.value("representation", nlohmann::json("tfidf")), base);

  auto& loop = cfg.loop;
  const auto strategy = detail::field<std::string>(j, "strategy", "", "uncertainty");
  const auto s = parse_strategy(strategy);
  if (!s) throw ValidationError("strategy: unknown value '" + strategy + "' (valid: " + kStrategyNames + ")");
  loop.strategy = *s;
  loop.batch_size = detail::count_field(j, "batch_size", "", loop.batch_size);
  loop.budget = detail::count_field(j, "budget", "", loop.budget);
  loop.seed_per_class = detail::count_field(j, "seed_per_class", "", loop.seed_per_class);
  loop.cv_cadence = detail::count_field(j, "cv_cadence", "", loop.cv_cadence);
  loop.committee_size = detail::count_field(j, "committee_size", "", loop.committee_size);
  if (loop.committee_size < 1) throw ValidationError("committee_size: must be at least 1");
  loop.id_beta = detail::field<double>(j, "id_beta", "", loop.id_beta);
  loop.egal_w = detail::positive_field(j, "egal_w", "", loop.egal_w);
  if (loop.egal_w > 1.0) throw ValidationError("egal_w: must be in (0, 1]");

  if (j.contains("svm")) {
    const auto& svm = j["svm"];
    if (!svm.is_object()) throw ValidationError("svm: must be an object");
    if (svm.contains("C_grid")) {
      loop.svm.C_grid = detail::field<std::vector<double>>(svm, "C_grid", "svm.", {});
      if (loop.svm.C_grid.empty()) throw ValidationError("svm.C_grid: must not be empty");
      for (double c : loop.svm.C_grid)
        if (!(c > 0.0)) throw ValidationError("svm.C_grid: values must be positive");
    }
    loop.svm.cv_folds = detail::count_field(svm, "cv_folds", "svm.", loop.svm.cv_folds);
    if (loop.svm.cv_folds < 2) throw ValidationError("svm.cv_folds: must be at least 2");
    loop.solver.tolerance = detail::positive_field(svm, "tolerance", "svm.", loop.solver.tolerance);
    loop.solver.max_epochs = detail::count_field(svm, "max_epochs", "svm.", loop.solver.max_epochs);
  }
  loop.svm.C = loop.svm.C_grid.front();

  if (j.contains("atal") && !j["atal"].is_null()) {
    const auto& a = j["atal"];
    if (!a.is_object()) throw ValidationError("atal: must be an object");
    AtalOptions atal;
    atal.cadence_rounds = detail::count_field(a, "cadence_rounds", "atal.", atal.cadence_rounds);
    atal.tuning.epochs = detail::count_field(a, "epochs", "atal.", atal.tuning.epochs);
    atal.tuning.learning_rate = detail::positive_field(a, "learning_rate", "atal.", atal.tuning.learning_rate);
    atal.tuning.batch_size = detail::count_field(a, "train_batch", "atal.", atal.tuning.batch_size);
    atal.tuning.adam_epsilon = detail::positive_field(a, "adam_epsilon", "atal.", atal.tuning.adam_epsilon);
    loop.atal = atal;
    if (!cfg.representation.is_provider())
      throw ValidationError("atal: requires a fine-tunable provider representation (sidecar or toy)");
  }

  if (j.contains("seeds")) {
    cfg.seeds = detail::field<std::vector<std::uint64_t>>(j, "seeds", "", {});
    if (cfg.seeds.empty()) throw ValidationError("seeds: must not be empty");
  }
  cfg.threads = std::max<std::size_t>(1, detail::count_field(j, "threads", "", cfg.threads));
  loop.representation = cfg.representation.label();
  loop.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

inline std::unique_ptr<EmbeddingProvider> make_provider(const RepresentationSpec& spec) {
  switch (spec.kind) {
    case RepresentationKind::sidecar: return std::make_unique<SidecarProvider>(spec.url, spec.model);
    case RepresentationKind::toy: return std::make_unique<HashedEncoderProvider>(spec.toy);
    default: throw ValidationError("representation '" + spec.label() + "' is not a provider");
  }
}

/// Builds (or loads) a representation aligned with `corpus`.
inline EmbeddingMatrix build_representation(const RepresentationSpec& spec, const Corpus& corpus) {
  auto stoplist = [&] { return spec.stopwords ? load_stoplist(*spec.stopwords) : default_stoplist(); };
  switch (spec.kind) {
    case RepresentationKind::tfidf: {
      const auto pre = preprocess(corpus, stoplist(), spec.preprocess);
      return tfidf(corpus, pre.vocabulary, pre.streams);
    }
    case RepresentationKind::lda: {
      const auto pre = preprocess(corpus, stoplist(), spec.preprocess);
      return lda_fit(corpus, pre.vocabulary, pre.streams, spec.lda).embedding;
    }
    case RepresentationKind::wordvec:
      return avg_word_vectors(corpus, load_lexicon(spec.lexicon), spec.label());
    case RepresentationKind::alem: return load_embeddings(spec.path, corpus);
    case RepresentationKind::sidecar:
    case RepresentationKind::toy: {
      auto provider = make_provider(spec);
      EmbeddingMatrix m;
      m.values = provider->embed(corpus.texts(), spec.mode);
      m.manifest = {provider->model_id(), spec.mode, corpus.ids()};
      check_alignment(m, corpus);
      return m;
    }
  }
  throw ValidationError("unknown representation");
}

}  // namespace altext
