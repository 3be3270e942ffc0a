#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "altext/alem.hpp"
#include "altext/provider.hpp"

namespace altext {

namespace base64 {

inline constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string encode(const std::vector<unsigned char>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = bytes[i] << 16 | bytes[i + 1] << 8 | bytes[i + 2];
    for (int s = 18; s >= 0; s -= 6) out.push_back(kAlphabet[(v >> s) & 63]);
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16 | bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

inline std::vector<unsigned char> decode(std::string_view text) {
  std::vector<unsigned char> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=') break;
    if (c == '\n' || c == '\r') continue;
    const auto pos = kAlphabet.find(c);
    if (pos == std::string_view::npos) throw ParseError("invalid base64 character");
    acc = acc << 6 | static_cast<std::uint32_t>(pos);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((acc >> bits) & 0xff));
    }
  }
  return out;
}

}  // namespace base64

/// Client for the embedding sidecar's HTTP protocol:
///   POST /embed     {texts, model, mode} -> {dims, vectors: base64 f32-LE row-major}
///   POST /finetune  {texts, labels, hyperparams} -> training report
///   POST /reset, GET /info -> {model, dims, can_fine_tune}
class SidecarProvider : public EmbeddingProvider {
 public:
  SidecarProvider(const std::string& base_url, std::string model, std::size_t chunk_size = 64)
      : client_(base_url), model_(std::move(model)), chunk_size_(chunk_size ? chunk_size : 64) {
    client_.set_read_timeout(600, 0);
    client_.set_write_timeout(600, 0);
  }

  std::string model_id() const override { return model_; }

  DenseMatrix embed(const std::vector<std::string>& texts, EncodingMode mode) override {
    std::vector<double> values;
    std::size_t dims = 0;
    for (std::size_t start = 0; start < texts.size(); start += chunk_size_) {
      const std::size_t end = std::min(texts.size(), start + chunk_size_);
      nlohmann::json req = {{"texts", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                                               texts.begin() + static_cast<std::ptrdiff_t>(end))},
                            {"model", model_},
                            {"mode", to_string(mode)}};
      const auto resp = post("/embed", req);
      const auto chunk_dims = resp.at("dims").get<std::size_t>();
      if (dims != 0 && chunk_dims != dims) throw Error("sidecar changed dimensionality between requests");
      dims = chunk_dims;
      const auto bytes = base64::decode(resp.at("vectors").get<std::string>());
      const auto m = alem::decode_f32(bytes.data(), bytes.size(), end - start, dims);
      values.insert(values.end(), m.values().begin(), m.values().end());
    }
    return DenseMatrix(texts.size(), dims, std::move(values));
  }

  void reset() override { post("/reset", nlohmann::json::object()); }

  bool can_fine_tune() const override {
    if (!info_) info_ = get("/info");
    return info_->value("can_fine_tune", false);
  }

  TrainingReport fine_tune(const std::vector<LabelledText>& data, const FineTuneParams& params) override {
    nlohmann::json texts = nlohmann::json::array(), labels = nlohmann::json::array();
    for (const auto& d : data) {
      texts.push_back(d.text);
      labels.push_back(d.label);
    }
    nlohmann::json req = {{"texts", texts},
                          {"labels", labels},
                          {"model", model_},
                          {"hyperparams",
                           {{"learning_rate", params.learning_rate},
                            {"epochs", params.epochs},
                            {"batch_size", params.batch_size},
                            {"adam_epsilon", params.adam_epsilon}}}};
    return parse_report(post("/finetune", req));
  }

  static TrainingReport parse_report(const nlohmann::json& j) {
    auto metrics = [](const nlohmann::json& m) {
      return EpochMetrics{m.at("accuracy").get<double>(), m.at("loss").get<double>()};
    };
    TrainingReport r;
    r.epochs_run = j.at("epochs_run").get<std::size_t>();
    r.best_epoch = j.at("best_epoch").get<std::size_t>();
    if (j.contains("initial")) r.initial = metrics(j["initial"]);
    for (const auto& e : j.value("epochs", nlohmann::json::array())) r.epochs.push_back(metrics(e));
    r.diverged = j.value("diverged", false);
    return r;
  }

 private:
  nlohmann::json post(const std::string& path, const nlohmann::json& body) {
    auto res = client_.Post(path, body.dump(), "application/json");
    return check(path, res);
  }

  nlohmann::json get(const std::string& path) const {
    auto res = client_.Get(path);
    return check(path, res);
  }

  static nlohmann::json check(const std::string& path, const httplib::Result& res) {
    if (!res) throw Error("sidecar " + path + ": " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw Error("sidecar " + path + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("sidecar " + path + ": " + e.what());
    }
  }

  mutable httplib::Client client_;
  std::string model_;
  std::size_t chunk_size_;
  mutable std::optional<nlohmann::json> info_;
};

}  // namespace altext
