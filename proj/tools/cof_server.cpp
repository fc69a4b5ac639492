// Serves the toy model over the remote JSON protocol. Images are the tasks of
// a generated suite, addressed by task id.

#include <csignal>
#include <iostream>
#include <map>

#include "CLI11.hpp"

#include "cli.hpp"
#include "cof/errors.hpp"
#include "cof/harness.hpp"
#include "cof/server.hpp"

namespace {

cof::ToyServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->shutdown();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Toy model server for the remote backend", "cof_server");
  cof::ServerOptions options;
  cof::SuiteOptions suite;
  std::uint64_t model_seed = 42;
  std::string grid = "4x4";
  std::string grounding = "exact";
  app.add_option("--host", options.host, "bind address");
  app.add_option("--port", options.port, "port (0 picks a free one)");
  app.add_option("--path", options.path, "request path");
  app.add_option("--seed", suite.seed, "suite seed; must match the client's --seed");
  app.add_option("--n-tasks", suite.n_tasks, "number of registered images");
  app.add_option("--distractors", suite.distractor_count, "distractor objects per image");
  app.add_option("--probe-fraction", suite.probe_fraction, "share of existence probes");
  app.add_option("--grid", grid, "patch grid, RxC");
  app.add_option("--model-seed", model_seed, "toy model seed");
  app.add_option("--grounding", grounding, "exact | perturbed | refusal");
  app.add_option("--fail-first", options.fail_first, "answer the first N requests with --fail-status");
  app.add_option("--fail-status", options.fail_status, "HTTP status for injected failures");
  app.add_flag("--reject-mask", options.reject_mask, "report capability_missing for masked requests");
  CLI11_PARSE(app, argc, argv);

  try {
    suite.grid = cof::cli::parse_grid(grid);
    const auto mode = cof::grounding_noise_mode_from_string(grounding);
    if (!mode) throw cof::ConfigError("unknown grounding mode '" + grounding + "'");
    options.noise.mode = *mode;
    options.noise.seed = suite.seed;

    std::map<std::string, cof::SyntheticImage> images;
    for (auto& task : cof::generate_suite(suite)) images.emplace(task.task_id, std::move(task.image));
    auto weights = std::make_shared<const cof::ModelWeights>(cof::ModelWeights::task_model(model_seed));
    cof::ToyServer server(weights, std::move(images), options);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.start();
    std::cout << "listening on " << server.endpoint() << std::endl;
    server.wait();
    g_server = nullptr;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
