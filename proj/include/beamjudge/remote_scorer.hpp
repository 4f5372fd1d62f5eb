#pragma once

#include <chrono>
#include <cmath>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "beamjudge/error.hpp"
#include "beamjudge/scoring.hpp"

namespace beamjudge {

struct RemoteScorerOptions {
  int retries = 3;  // retries after the first failed connection attempt
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{120000};
};

namespace detail {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // optional path prefix, no trailing slash
};

inline Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw InvalidInput("scorer endpoint must be a URL: " + url);
  const auto path = url.find('/', scheme + 3);
  Endpoint ep{url.substr(0, path), path == std::string::npos ? "" : url.substr(path)};
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  if (ep.origin.size() <= scheme + 3) throw InvalidInput("scorer endpoint has no host: " + url);
  return ep;
}

inline httplib::Client make_client(const Endpoint& ep, const RemoteScorerOptions& options) {
  httplib::Client client(ep.origin);
  client.set_connection_timeout(options.connect_timeout);
  client.set_read_timeout(options.read_timeout);
  return client;
}

// Performs `request` with bounded retries and exponential backoff on
// connection failures. HTTP-level answers are returned as-is.
template <class Request>
httplib::Result with_retries(const std::string& what, const RemoteScorerOptions& options, Request&& request) {
  auto backoff = options.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    httplib::Result res = request();
    if (res) return res;
    if (attempt >= options.retries) {
      throw TransportError(what + " failed after " + std::to_string(attempt + 1) +
                           " attempts: " + httplib::to_string(res.error()));
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

inline std::string quote_payload(const std::string& body) {
  constexpr std::size_t kMax = 512;
  if (body.size() <= kMax) return body;
  return body.substr(0, kMax) + "...";
}

}  // namespace detail

inline std::string score_request_body(std::span<const ScoreRequest> requests) {
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const auto& r : requests) {
    nlohmann::ordered_json p;
    p["utterance"] = r.utterance;
    p["sql"] = r.sql;
    if (r.schema) p["schema"] = *r.schema;
    pairs.push_back(std::move(p));
  }
  nlohmann::ordered_json body;
  body["pairs"] = std::move(pairs);
  return body.dump();
}

// Validates a /v1/score response body against a batch of `expected` pairs.
inline std::vector<ScoreResponse> parse_score_response(const std::string& body, std::size_t expected) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("malformed response: " + detail::quote_payload(body));
  }
  if (!doc.is_object() || !doc.contains("scores") || !doc["scores"].is_array())
    throw ProtocolError("malformed response: " + detail::quote_payload(body));
  const auto& scores = doc["scores"];
  if (scores.size() != expected) {
    throw ProtocolError("response has " + std::to_string(scores.size()) + " scores for " +
                        std::to_string(expected) + " pairs: " + detail::quote_payload(body));
  }
  std::vector<ScoreResponse> out;
  out.reserve(expected);
  for (const auto& s : scores) {
    if (!s.is_number()) throw ProtocolError("malformed response: " + detail::quote_payload(body));
    const double v = s.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) throw ProtocolError("score out of range: " + s.dump());
    out.push_back({v});
  }
  return out;
}

// POST /v1/score. Connection failures are retried; anything the service says
// that the protocol does not allow is a ProtocolError.
inline std::vector<ScoreResponse> remote_score_batch(std::span<const ScoreRequest> requests,
                                                     const std::string& endpoint,
                                                     const RemoteScorerOptions& options = {}) {
  if (requests.empty()) throw InvalidInput("score batch must contain at least one pair");
  const auto ep = detail::split_endpoint(endpoint);
  auto client = detail::make_client(ep, options);
  const std::string body = score_request_body(requests);
  auto res = detail::with_retries("POST " + endpoint + "/v1/score", options, [&] {
    return client.Post(ep.prefix + "/v1/score", body, "application/json");
  });
  if (res->status != 200) {
    throw ProtocolError("scorer returned HTTP " + std::to_string(res->status) + ": " +
                        detail::quote_payload(res->body));
  }
  return parse_score_response(res->body, requests.size());
}

// GET /v1/health must answer {"status":"ok"}.
inline void health_check(const std::string& endpoint, const RemoteScorerOptions& options = {}) {
  const auto ep = detail::split_endpoint(endpoint);
  auto client = detail::make_client(ep, options);
  auto res = detail::with_retries("GET " + endpoint + "/v1/health", options,
                                  [&] { return client.Get(ep.prefix + "/v1/health"); });
  if (res->status != 200)
    throw ProtocolError("health check returned HTTP " + std::to_string(res->status));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("malformed health response: " + detail::quote_payload(res->body));
  }
  if (!doc.is_object() || doc.value("status", "") != "ok")
    throw ProtocolError("scorer not healthy: " + detail::quote_payload(res->body));
}

class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(std::string endpoint, RemoteScorerOptions options = {})
      : endpoint_(std::move(endpoint)), options_(options) {
    (void)detail::split_endpoint(endpoint_);
  }

  std::vector<ScoreResponse> score_batch(std::span<const ScoreRequest> batch) override {
    return remote_score_batch(batch, endpoint_, options_);
  }
  std::string name() const override { return "remote:" + endpoint_; }

  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string endpoint_;
  RemoteScorerOptions options_;
};

}  // namespace beamjudge
