#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace ekcpd {

/// Failure modes of a /v1/embeddings exchange.
class FetchError : public std::runtime_error {
 public:
  enum class Kind { Auth, Exhausted, Protocol };

  FetchError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct EmbeddingsClientConfig {
  std::string endpoint;  // scheme://host[:port][/prefix]; "/v1/embeddings" is appended
  std::string model;
  std::string api_key;
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 4;
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{1000};  // waits base, 2*base, 4*base
  std::chrono::seconds timeout{60};
};

/// Client for OpenAI-compatible embedding endpoints:
///   POST <endpoint>/v1/embeddings  {"model": ..., "input": [...]}
///   -> {"data": [{"index": i, "embedding": [...]}, ...]}
class EmbeddingsClient {
 public:
  explicit EmbeddingsClient(EmbeddingsClientConfig config) : config_(std::move(config)) {
    if (config_.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    if (config_.max_in_flight == 0) config_.max_in_flight = 1;
    split_endpoint();
  }

  /// Embeds `texts` in input order. Batches run concurrently (bounded by
  /// max_in_flight); order is restored from the response indices.
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) const {
    std::vector<std::vector<double>> out(texts.size());
    const std::size_t batches = (texts.size() + config_.batch_size - 1) / config_.batch_size;
    std::size_t next = 0;
    while (next < batches) {
      const std::size_t wave = std::min(config_.max_in_flight, batches - next);
      std::vector<std::future<std::vector<std::vector<double>>>> pending;
      for (std::size_t w = 0; w < wave; ++w) {
        const std::size_t b = next + w;
        const std::size_t lo = b * config_.batch_size;
        const std::size_t hi = std::min(texts.size(), lo + config_.batch_size);
        std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(lo),
                                       texts.begin() + static_cast<std::ptrdiff_t>(hi));
        pending.push_back(std::async(std::launch::async, [this, chunk = std::move(chunk)] {
          return fetch_batch(chunk);
        }));
      }
      for (std::size_t w = 0; w < wave; ++w) {
        auto rows = pending[w].get();
        const std::size_t lo = (next + w) * config_.batch_size;
        for (std::size_t i = 0; i < rows.size(); ++i) out[lo + i] = std::move(rows[i]);
      }
      next += wave;
    }
    return out;
  }

  std::vector<std::vector<double>> fetch_batch(const std::vector<std::string>& batch) const {
    const nlohmann::json body{{"model", config_.model}, {"input", batch}};
    const std::string payload = body.dump();
    std::string last_failure = "no attempt made";
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(config_.backoff_base * (1 << (attempt - 1)));
      httplib::Client client(base_url_);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      const httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};
      auto res = client.Post(path_, headers, payload, "application/json");
      if (!res) {
        last_failure = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      const int status = res->status;
      if (status == 401 || status == 403) {
        throw FetchError(FetchError::Kind::Auth, "authorization rejected (HTTP " + std::to_string(status) + ")");
      }
      if (status == 429 || status >= 500) {
        last_failure = "HTTP " + std::to_string(status);
        continue;
      }
      if (status != 200) {
        throw FetchError(FetchError::Kind::Protocol, "unexpected HTTP " + std::to_string(status));
      }
      return parse_response(res->body, batch.size());
    }
    throw FetchError(FetchError::Kind::Exhausted,
                     "giving up after " + std::to_string(config_.max_retries + 1) + " attempts: " + last_failure);
  }

  static std::vector<std::vector<double>> parse_response(const std::string& body, std::size_t expected) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw FetchError(FetchError::Kind::Protocol, std::string("malformed response: ") + e.what());
    }
    if (!j.is_object() || !j.contains("data") || !j["data"].is_array() || j["data"].size() != expected) {
      throw FetchError(FetchError::Kind::Protocol,
                       "response must carry a \"data\" array with " + std::to_string(expected) + " entries");
    }
    std::vector<std::vector<double>> rows(expected);
    std::vector<bool> seen(expected, false);
    try {
      for (const auto& item : j["data"]) {
        const auto index = item.at("index").get<std::size_t>();
        if (index >= expected || seen[index]) {
          throw FetchError(FetchError::Kind::Protocol, "bad or duplicate index " + std::to_string(index));
        }
        seen[index] = true;
        rows[index] = item.at("embedding").get<std::vector<double>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw FetchError(FetchError::Kind::Protocol, std::string("malformed data entry: ") + e.what());
    }
    return rows;
  }

 private:
  void split_endpoint() {
    std::string url = config_.endpoint;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto slash = url.find('/', host_start);
    base_url_ = slash == std::string::npos ? url : url.substr(0, slash);
    const std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
    path_ = prefix + "/v1/embeddings";
  }

  EmbeddingsClientConfig config_;
  std::string base_url_;
  std::string path_;
};

}  // namespace ekcpd
