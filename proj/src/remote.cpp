#include "cof/remote.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"

#include "cof/errors.hpp"
#include "cof/serialization.hpp"

namespace cof {

using nlohmann::json;

namespace {

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

std::string mode_name(RemoteMode m) { return m == RemoteMode::ground ? "ground" : "generate"; }

}  // namespace

std::string Endpoint::url() const { return "http://" + host + ":" + std::to_string(port) + path; }

Endpoint parse_endpoint(std::string_view url) {
  static const std::regex re(R"(^http://([^/:]+)(?::(\d{1,5}))?(/.*)?$)");
  std::cmatch m;
  if (!std::regex_match(url.data(), url.data() + url.size(), m, re)) {
    throw ConfigError("endpoint must look like http://host[:port][/path], got '" + std::string(url) + "'");
  }
  Endpoint e;
  e.host = m[1].str();
  if (m[2].matched) {
    e.port = std::stoi(m[2].str());
    if (e.port < 1 || e.port > 65535) throw ConfigError("endpoint port out of range");
  }
  e.path = m[3].matched ? m[3].str() : "/";
  return e;
}

json encode_request(const RemoteRequest& req) {
  json j{{"mode", mode_name(req.mode)}, {"prompt", req.prompt}, {"image_id", req.image_id}};
  if (req.mask) j["mask"] = *req.mask;
  if (req.lambda) j["lambda"] = *req.lambda;
  if (req.layers && req.layers->range) j["layers"] = {req.layers->range->first, req.layers->range->second};
  return j;
}

RemoteRequest decode_request(const json& j) {
  try {
    RemoteRequest req;
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "ground") {
      req.mode = RemoteMode::ground;
    } else if (mode == "generate") {
      req.mode = RemoteMode::generate;
    } else {
      throw ConfigError("unknown mode '" + mode + "'");
    }
    req.prompt = j.at("prompt").get<std::string>();
    req.image_id = j.at("image_id").get<std::string>();
    if (j.contains("mask") && !j.at("mask").is_null()) req.mask = j.at("mask").get<TokenMask>();
    if (j.contains("lambda") && !j.at("lambda").is_null()) req.lambda = j.at("lambda").get<double>();
    if (j.contains("layers") && !j.at("layers").is_null()) {
      req.layers = LayerScope::layers(j.at("layers").at(0).get<int>(), j.at("layers").at(1).get<int>());
    }
    return req;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed request: ") + e.what());
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("malformed request mask: ") + e.what());
  }
}

json encode_response(const RemoteResponse& resp) {
  json j{{"text", resp.text}};
  if (!resp.attention_mass_on_target.empty()) j["attention_mass_on_target"] = resp.attention_mass_on_target;
  return j;
}

RemoteResponse decode_response(const json& j) {
  if (!j.is_object() || !j.contains("text") || !j.at("text").is_string()) {
    throw TransportError("malformed response: expected an object with a string \"text\" field");
  }
  RemoteResponse r;
  r.text = j.at("text").get<std::string>();
  if (j.contains("attention_mass_on_target")) {
    try {
      r.attention_mass_on_target = j.at("attention_mass_on_target").get<std::vector<double>>();
    } catch (const json::exception&) {
      throw TransportError("malformed response: attention_mass_on_target must be an array of numbers");
    }
  }
  return r;
}

void apply_env_overrides(std::string& endpoint, RemoteOptions& options) {
  if (const char* e = std::getenv("COF_ENDPOINT"); e && *e) endpoint = e;
  if (const char* t = std::getenv("COF_TIMEOUT_MS"); t && *t) {
    long ms = 0;
    const auto* end = t + std::char_traits<char>::length(t);
    const auto res = std::from_chars(t, end, ms);
    if (res.ec != std::errc{} || res.ptr != end || ms <= 0) throw ConfigError("COF_TIMEOUT_MS must be a positive integer");
    options.timeout = std::chrono::milliseconds(ms);
  }
}

RemoteResponse remote_backend_call(const Endpoint& endpoint, const RemoteRequest& request,
                                   const RemoteOptions& options, std::size_t* retries) {
  const std::string body = encode_request(request).dump(-1, ' ', false, json::error_handler_t::replace);
  const auto sleep = options.sleep ? options.sleep
                                   : std::function<void(std::chrono::milliseconds)>(
                                         [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); });
  const auto log = options.log ? options.log : std::function<void(const std::string&)>([](const std::string& s) {
    std::fprintf(stderr, "%s\n", s.c_str());
  });
  const int attempts = std::max(1, options.max_attempts);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);

  std::string last_error;
  auto backoff = options.initial_backoff;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(endpoint.host, endpoint.port);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const auto res = client.Post(endpoint.path, body, "application/json");
    if (!res) {
      last_error = "request to " + endpoint.url() + " failed: " + httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      const json parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded()) throw TransportError("malformed response JSON from " + endpoint.url());
      return decode_response(parsed);
    } else if (res->status == kCapabilityMissingStatus) {
      const json parsed = json::parse(res->body, nullptr, false);
      std::string detail = res->body;
      if (!parsed.is_discarded() && parsed.is_object()) detail = parsed.value("detail", detail);
      throw CapabilityMissing("server rejected the request: " + detail);
    } else if (!retryable_status(res->status)) {
      throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint.url() + ": " + res->body);
    } else {
      last_error = "HTTP " + std::to_string(res->status) + " from " + endpoint.url();
    }

    if (attempt == attempts) break;
    if (retries) ++*retries;
    log("[cof] retry " + std::to_string(attempt) + "/" + std::to_string(attempts - 1) + " in " +
        std::to_string(backoff.count()) + " ms: " + last_error);
    sleep(backoff);
    backoff *= 2;
  }
  throw TransportError(last_error + " (after " + std::to_string(attempts) + " attempts)");
}

RemoteBackend::RemoteBackend(std::string endpoint_url, RemoteOptions options)
    : endpoint_(parse_endpoint(endpoint_url)), options_(std::move(options)) {
  if (options_.timeout.count() <= 0) throw ConfigError("remote timeout must be positive");
}

std::string RemoteBackend::config_hash() const { return endpoint_.url(); }

RemoteResponse RemoteBackend::call(const RemoteRequest& request) {
  std::size_t retries = 0;
  try {
    auto resp = remote_backend_call(endpoint_, request, options_, &retries);
    std::lock_guard lock(mu_);
    retries_ += retries;
    return resp;
  } catch (...) {
    std::lock_guard lock(mu_);
    retries_ += retries;
    throw;
  }
}

std::size_t RemoteBackend::retries() const {
  std::lock_guard lock(mu_);
  return retries_;
}

std::string RemoteBackend::ground(const ImageRef& image, const std::string& prompt) {
  return call({RemoteMode::ground, prompt, image.id, std::nullopt, std::nullopt, std::nullopt}).text;
}

BackendOutput RemoteBackend::generate(const ImageRef& image, const std::string& prompt) {
  auto r = call({RemoteMode::generate, prompt, image.id, std::nullopt, std::nullopt, std::nullopt});
  return {std::move(r.text), std::move(r.attention_mass_on_target)};
}

BackendOutput RemoteBackend::generate_with_mask(const ImageRef& image, const std::string& prompt,
                                                const TokenMask& mask, double lambda, const LayerScope& layers) {
  auto r = call({RemoteMode::generate, prompt, image.id, mask, lambda,
                 layers.is_all() ? std::nullopt : std::optional<LayerScope>(layers)});
  return {std::move(r.text), std::move(r.attention_mass_on_target)};
}

}  // namespace cof
