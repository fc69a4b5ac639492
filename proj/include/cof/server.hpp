#pragma once

// In-process HTTP server wrapping the toy backend behind the remote protocol
// (see remote.hpp). Used by the remote backend tests and by cof_server.

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "cof/pipeline.hpp"
#include "cof/toy_model.hpp"

namespace httplib {
class Server;
}

namespace cof {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 binds any free port
  std::string path = "/infer";
  // Fault injection: the first `fail_first` requests get `fail_status`.
  int fail_first = 0;
  int fail_status = 503;
  // Answer every masked request with capability_missing.
  bool reject_mask = false;
  GroundingNoise noise;
  int max_tokens = 4;
};

class ToyServer {
 public:
  ToyServer(std::shared_ptr<const ModelWeights> weights, std::map<std::string, SyntheticImage> images,
            ServerOptions options = {});
  ~ToyServer();

  ToyServer(const ToyServer&) = delete;
  ToyServer& operator=(const ToyServer&) = delete;

  // Binds and starts serving on a background thread. Throws TransportError
  // when the port cannot be bound.
  void start();
  // Shuts the listener down and joins its thread.
  void stop();
  // Asks the listener to exit without joining; safe from a signal handler.
  void shutdown();
  // Blocks until another thread (or a signal handler) calls stop().
  void wait();

  int port() const { return port_; }
  std::string endpoint() const;
  int requests_seen() const { return requests_.load(); }

 private:
  void bind();
  void install_handlers();

  ToyBackend backend_;
  std::mutex backend_mu_;
  std::map<std::string, SyntheticImage> images_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<int> requests_{0};
  int port_ = 0;
};

}  // namespace cof
