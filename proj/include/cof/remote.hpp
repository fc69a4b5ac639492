#pragma once

// HTTP client for a model server speaking the JSON protocol:
//
//   POST <endpoint>
//   {"mode": "ground" | "generate", "prompt": str, "image_id": str,
//    "mask": {"rows", "cols", "bits"}?, "lambda": number?, "layers": [b, e]?}
//   -> 200 {"text": str, "attention_mass_on_target": [number]?}
//   -> 422 {"error": "capability_missing", "detail": str}   (no retry)
//
// A missing lambda means 1. Connection failures, timeouts, 408/429 and 5xx
// replies are retried with exponential backoff.

#include <chrono>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cof/pipeline.hpp"

namespace cof {

inline constexpr int kCapabilityMissingStatus = 422;

struct Endpoint {
  std::string host;
  int port = 80;
  std::string path = "/";

  std::string url() const;
};

// Accepts http://host[:port][/path]. Throws ConfigError otherwise.
Endpoint parse_endpoint(std::string_view url);

enum class RemoteMode { ground, generate };

struct RemoteRequest {
  RemoteMode mode = RemoteMode::generate;
  std::string prompt;
  std::string image_id;
  std::optional<TokenMask> mask;
  std::optional<double> lambda;
  std::optional<LayerScope> layers;  // sent only when restricted
};

struct RemoteResponse {
  std::string text;
  std::vector<double> attention_mass_on_target;
};

nlohmann::json encode_request(const RemoteRequest& req);
// Throws ConfigError on a malformed request document.
RemoteRequest decode_request(const nlohmann::json& j);
nlohmann::json encode_response(const RemoteResponse& resp);
// Throws TransportError when "text" is missing or mistyped.
RemoteResponse decode_response(const nlohmann::json& j);

struct RemoteOptions {
  std::chrono::milliseconds timeout{10000};
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  // Injectable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
  // Receives one line per retry; defaults to stderr.
  std::function<void(const std::string&)> log;
};

// Applies COF_ENDPOINT / COF_TIMEOUT_MS from the environment when set.
void apply_env_overrides(std::string& endpoint, RemoteOptions& options);

// One request with the retry policy. `retries` (when given) is incremented per retry.
RemoteResponse remote_backend_call(const Endpoint& endpoint, const RemoteRequest& request,
                                   const RemoteOptions& options, std::size_t* retries = nullptr);

class RemoteBackend final : public Backend {
 public:
  RemoteBackend(std::string endpoint_url, RemoteOptions options = {});

  std::string name() const override { return "remote"; }
  std::string config_hash() const override;
  // Optimistic: the server reports missing features per request.
  Capabilities capabilities() const override { return {true, true, true}; }

  std::string ground(const ImageRef& image, const std::string& prompt) override;
  BackendOutput generate(const ImageRef& image, const std::string& prompt) override;
  BackendOutput generate_with_mask(const ImageRef& image, const std::string& prompt, const TokenMask& mask,
                                   double lambda, const LayerScope& layers) override;

  RemoteResponse call(const RemoteRequest& request);
  std::size_t retries() const;
  const Endpoint& endpoint() const { return endpoint_; }

 private:
  Endpoint endpoint_;
  RemoteOptions options_;
  mutable std::mutex mu_;
  std::size_t retries_ = 0;
};

}  // namespace cof
