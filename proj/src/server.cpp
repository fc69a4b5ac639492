#include "cof/server.hpp"

#include "httplib.h"

#include "cof/errors.hpp"
#include "cof/remote.hpp"

namespace cof {

using nlohmann::json;

ToyServer::ToyServer(std::shared_ptr<const ModelWeights> weights, std::map<std::string, SyntheticImage> images,
                     ServerOptions options)
    : backend_(std::move(weights), options.noise, options.max_tokens),
      images_(std::move(images)),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
  install_handlers();
}

ToyServer::~ToyServer() { stop(); }

std::string ToyServer::endpoint() const {
  return "http://" + options_.host + ":" + std::to_string(port_) + options_.path;
}

void ToyServer::install_handlers() {
  server_->Post(options_.path, [this](const httplib::Request& req, httplib::Response& res) {
    const int n = ++requests_;
    auto reply = [&res](int status, const json& body) {
      res.status = status;
      res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
    };
    if (n <= options_.fail_first) {
      reply(options_.fail_status, {{"error", "injected_failure"}});
      return;
    }
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      reply(400, {{"error", "bad_request"}, {"detail", "body is not JSON"}});
      return;
    }
    RemoteRequest request;
    try {
      request = decode_request(body);
    } catch (const Error& e) {
      reply(400, {{"error", "bad_request"}, {"detail", e.what()}});
      return;
    }
    const auto it = images_.find(request.image_id);
    if (it == images_.end()) {
      reply(404, {{"error", "unknown_image"}, {"detail", request.image_id}});
      return;
    }
    const bool masked = request.mask.has_value() || request.lambda.has_value();
    if (masked && options_.reject_mask) {
      reply(kCapabilityMissingStatus, {{"error", "capability_missing"}, {"detail", "generate_with_mask"}});
      return;
    }
    const ImageRef image = ImageRef::of(it->second, it->first);
    try {
      RemoteResponse out;
      std::lock_guard lock(backend_mu_);
      if (request.mode == RemoteMode::ground) {
        out.text = backend_.ground(image, request.prompt);
      } else if (masked) {
        const TokenMask mask = request.mask ? *request.mask : TokenMask::full(image.grid);
        auto r = backend_.generate_with_mask(image, request.prompt, mask, request.lambda.value_or(1.0),
                                             request.layers.value_or(LayerScope::all()));
        out = {std::move(r.text), std::move(r.target_mass_per_layer)};
      } else {
        auto r = backend_.generate(image, request.prompt);
        out = {std::move(r.text), std::move(r.target_mass_per_layer)};
      }
      reply(200, encode_response(out));
    } catch (const Error& e) {
      reply(400, {{"error", "bad_request"}, {"detail", e.what()}});
    }
  });
}

void ToyServer::bind() {
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
  } else {
    port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
  }
  if (port_ <= 0) throw TransportError("cannot bind " + options_.host + ":" + std::to_string(options_.port));
}

void ToyServer::start() {
  bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void ToyServer::wait() {
  if (thread_.joinable()) thread_.join();
}

void ToyServer::shutdown() {
  if (server_) server_->stop();
}

void ToyServer::stop() {
  shutdown();
  if (thread_.joinable()) thread_.join();
}

}  // namespace cof
