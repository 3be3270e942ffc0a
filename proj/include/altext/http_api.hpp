#pragma once

#include <atomic>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "altext/live_session.hpp"

namespace altext {

/// In-memory set of live sessions over one corpus and representation.
class SessionRegistry {
 public:
  SessionRegistry(std::shared_ptr<const Corpus> corpus, std::shared_ptr<const EmbeddingMatrix> embedding,
                  LoopOptions defaults = {})
      : corpus_(std::move(corpus)), embedding_(std::move(embedding)), defaults_(std::move(defaults)) {
    check_alignment(*embedding_, *corpus_);
    salt_ = std::random_device{}();
  }

  const LoopOptions& defaults() const noexcept { return defaults_; }

  std::shared_ptr<LiveSession> create(const LoopOptions& options, std::uint64_t seed) {
    const auto n = counter_.fetch_add(1);
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%04llx%08llx", static_cast<unsigned long long>(n & 0xffff),
                  static_cast<unsigned long long>(mix64(salt_ ^ n) & 0xffffffffULL));
    auto session = std::make_shared<LiveSession>(buf, corpus_, embedding_, options, seed);
    std::unique_lock lock(mutex_);
    sessions_.emplace(buf, session);
    return session;
  }

  std::shared_ptr<LiveSession> find(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return sessions_.size();
  }

 private:
  std::shared_ptr<const Corpus> corpus_;
  std::shared_ptr<const EmbeddingMatrix> embedding_;
  LoopOptions defaults_;
  std::uint64_t salt_ = 0;
  std::atomic<std::uint64_t> counter_{0};
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
};

namespace api {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

/// Session options from a POST /sessions body; absent fields use the registry defaults.
inline std::pair<LoopOptions, std::uint64_t> session_options(const nlohmann::json& body, const LoopOptions& defaults) {
  LoopOptions options = defaults;
  std::uint64_t seed = 0;
  if (body.is_null()) return {options, seed};
  if (!body.is_object()) throw ValidationError("body: must be a JSON object");
  if (body.contains("strategy")) {
    const auto name = body["strategy"].is_string() ? body["strategy"].get<std::string>() : "";
    const auto s = parse_strategy(name);
    if (!s) throw ValidationError("strategy: unknown value '" + name + "' (valid: " + kStrategyNames + ")");
    options.strategy = *s;
  }
  auto count = [&](const char* name, std::size_t& target) {
    if (!body.contains(name)) return;
    if (!body[name].is_number_integer() || body[name].get<std::int64_t>() < 1)
      throw ValidationError(std::string(name) + ": must be a positive integer");
    target = body[name].get<std::size_t>();
  };
  count("batch_size", options.batch_size);
  count("budget", options.budget);
  count("cv_cadence", options.cv_cadence);
  count("committee_size", options.committee_size);
  if (body.contains("seed")) {
    if (!body["seed"].is_number_unsigned()) throw ValidationError("seed: must be a non-negative integer");
    seed = body["seed"].get<std::uint64_t>();
  }
  options.validate();
  return {options, seed};
}

inline nlohmann::json batch_json(const SessionSnapshot& s) {
  nlohmann::json docs = nlohmann::json::array();
  for (auto row : s.pending) docs.push_back({{"id", (*s.corpus)[row].id}, {"text", (*s.corpus)[row].text}});
  return {{"session_id", s.session_id}, {"phase", to_string(s.phase)}, {"documents", docs}};
}

/// Parses {"labels": [{"id": string, "label": 0|1}, ...]}.
inline std::vector<std::pair<std::string, BinaryLabel>> parse_labels(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw MalformedLabels("body is not valid JSON");
  }
  if (!j.is_object() || !j.contains("labels") || !j["labels"].is_array())
    throw MalformedLabels("body must be {\"labels\": [{\"id\": ..., \"label\": 0|1}, ...]}");
  std::vector<std::pair<std::string, BinaryLabel>> out;
  for (const auto& item : j["labels"]) {
    if (!item.is_object() || !item.contains("id") || !item["id"].is_string())
      throw MalformedLabels("each label needs a string 'id'");
    const auto id = item["id"].get<std::string>();
    if (!item.contains("label") || !item["label"].is_number_integer())
      throw MalformedLabels("label for '" + id + "' must be 0 or 1");
    const auto v = item["label"].get<std::int64_t>();
    if (v != 0 && v != 1) throw MalformedLabels("label for '" + id + "' must be 0 or 1");
    out.emplace_back(id, static_cast<BinaryLabel>(v));
  }
  return out;
}

}  // namespace api

/// Registers the session endpoints:
///   POST /sessions, GET /sessions/{id}/batch, POST /sessions/{id}/labels,
///   GET /sessions/{id}/status, GET /sessions/{id}/export
inline void install_routes(httplib::Server& server, SessionRegistry& registry) {
  using httplib::Request;
  using httplib::Response;

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/.*)", [](const Request&, Response& res) { res.status = 204; });

  server.Post("/sessions", [&registry](const Request& req, Response& res) {
    try {
      nlohmann::json body;
      if (!req.body.empty()) body = nlohmann::json::parse(req.body);
      const auto [options, seed] = api::session_options(body, registry.defaults());
      const auto snap = registry.create(options, seed)->snapshot();
      api::send_json(res, 201,
                     {{"session_id", snap->session_id}, {"phase", to_string(snap->phase)}, {"pending", snap->pending.size()}});
    } catch (const nlohmann::json::exception&) {
      api::send_error(res, 422, "body is not valid JSON");
    } catch (const ValidationError& e) {
      api::send_error(res, 422, e.what());
    }
  });

  auto with_session = [&registry](auto handler) {
    return [&registry, handler](const Request& req, Response& res) {
      const auto session = registry.find(req.matches[1]);
      if (!session) return api::send_error(res, 404, "unknown session '" + std::string(req.matches[1]) + "'");
      handler(*session, req, res);
    };
  };

  server.Get(R"(/sessions/([^/]+)/batch)", with_session([](LiveSession& s, const Request&, Response& res) {
               api::send_json(res, 200, api::batch_json(*s.snapshot()));
             }));

  server.Post(R"(/sessions/([^/]+)/labels)", with_session([](LiveSession& s, const Request& req, Response& res) {
                try {
                  const auto snap = run_live_round(s, api::parse_labels(req.body));
                  auto body = api::batch_json(*snap);
                  body["labelled"] = snap->pool.labelled_count();
                  api::send_json(res, 200, body);
                } catch (const LabelConflict& e) {
                  api::send_error(res, 409, e.what());
                } catch (const MalformedLabels& e) {
                  api::send_error(res, 422, e.what());
                } catch (const std::exception& e) {
                  api::send_error(res, 500, e.what());
                }
              }));

  server.Get(R"(/sessions/([^/]+)/status)", with_session([](LiveSession& s, const Request&, Response& res) {
               api::send_json(res, 200, status_json(*s.snapshot()));
             }));

  server.Get(R"(/sessions/([^/]+)/export)", with_session([](LiveSession& s, const Request&, Response& res) {
               res.status = 200;
               res.set_content(export_jsonl(*s.snapshot()), "application/x-ndjson");
             }));
}

}  // namespace altext
