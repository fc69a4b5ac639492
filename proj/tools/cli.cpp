#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cof/errors.hpp"
#include "cof/harness.hpp"
#include "cof/pipeline.hpp"
#include "cof/remote.hpp"
#include "cof/serialization.hpp"

namespace cof::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kLayeringHelp =
    "Settings are layered: built-in defaults (the llava-v1.5-7b preset, alpha=1.3 lambda=2.0)\n"
    "are overridden by --config FILE (JSON), then by COF_ENDPOINT / COF_TIMEOUT_MS, then by flags.\n"
    "Exit codes: 0 success, 1 some task failed or the backend was unreachable, 2 invalid flags.";

// Perturbed grounding: up to an eighth of the image of jitter per corner.
constexpr double kPerturbedJitter = 0.125;

// Flag values as typed. Each subcommand binds its options to the same fields.
struct RawFlags {
  std::string backend;
  std::string endpoint;
  long timeout_ms = 0;
  std::uint64_t seed = 0;
  std::uint64_t model_seed = 0;
  double alpha = 0.0;
  double lambda = 0.0;
  std::string preset;
  std::string grid;
  std::vector<std::string> variants;
  std::string layers;
  std::string config;
  std::string out;
  bool force = false;
  int n_tasks = 0;
  int distractors = 0;
  double probe_fraction = 0.0;
  std::string alpha_grid;
  std::string lambda_grid;
  std::string grounding;
  int workers = 0;
  std::string task_file;
  bool stage2_grounding_prompt = false;
};

BackendKind parse_backend(const std::string& s) {
  if (s == "toy") return BackendKind::toy;
  if (s == "remote") return BackendKind::remote;
  throw ConfigError("backend must be 'toy' or 'remote', got '" + s + "'");
}

RunVariant parse_variant(const std::string& s) {
  const auto v = run_variant_from_string(s);
  if (!v) throw ConfigError("unknown variant '" + s + "' (baseline, reweight_global, cof)");
  return *v;
}

Preset parse_preset(const std::string& s) {
  const auto p = preset_from_string(s);
  if (!p) throw ConfigError("unknown preset '" + s + "' (llava-v1.5-7b, llava-v1.5-13b, instructblip-13b)");
  return *p;
}

GroundingNoiseMode parse_grounding(const std::string& s) {
  const auto m = grounding_noise_mode_from_string(s);
  if (!m) throw ConfigError("grounding must be exact, perturbed or refusal, got '" + s + "'");
  return *m;
}

void apply_config_file(CliConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("config file '" + path + "' is not a JSON object");
  try {
    if (j.contains("preset")) cfg.cof = CoFConfig::preset(parse_preset(j.at("preset").get<std::string>()));
    for (const auto& [key, v] : j.items()) {
      if (key == "preset") {
        continue;
      } else if (key == "alpha") {
        cfg.cof.alpha = v.get<double>();
      } else if (key == "lambda") {
        cfg.cof.lambda = v.get<double>();
      } else if (key == "layers") {
        cfg.cof.layer_scope = v.is_string() ? parse_layer_scope(v.get<std::string>())
                                            : LayerScope::layers(v.at(0).get<int>(), v.at(1).get<int>());
      } else if (key == "grid") {
        cfg.grid = parse_grid(v.get<std::string>());
      } else if (key == "seed") {
        cfg.seed = v.get<std::uint64_t>();
      } else if (key == "model_seed") {
        cfg.model_seed = v.get<std::uint64_t>();
      } else if (key == "backend") {
        cfg.backend = parse_backend(v.get<std::string>());
      } else if (key == "endpoint") {
        cfg.endpoint = v.get<std::string>();
      } else if (key == "timeout_ms") {
        cfg.timeout_ms = v.get<long>();
      } else if (key == "variants") {
        cfg.variants.clear();
        for (const auto& s : v) cfg.variants.push_back(parse_variant(s.get<std::string>()));
      } else if (key == "n_tasks") {
        cfg.n_tasks = v.get<int>();
      } else if (key == "distractors") {
        cfg.distractors = v.get<int>();
      } else if (key == "probe_fraction") {
        cfg.probe_fraction = v.get<double>();
      } else if (key == "alpha_grid") {
        cfg.alpha_grid = v.get<std::vector<double>>();
      } else if (key == "lambda_grid") {
        cfg.lambda_grid = v.get<std::vector<double>>();
      } else if (key == "grounding") {
        cfg.grounding = parse_grounding(v.get<std::string>());
      } else if (key == "workers") {
        cfg.workers = v.get<int>();
      } else if (key == "task_file") {
        cfg.task_file = v.get<std::string>();
      } else if (key == "stage2_grounding_prompt") {
        cfg.stage2_grounding_prompt = v.get<bool>();
      } else {
        throw ConfigError("config file: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

void apply_env(CliConfig& cfg) {
  RemoteOptions opts;
  opts.timeout = std::chrono::milliseconds(cfg.timeout_ms);
  apply_env_overrides(cfg.endpoint, opts);
  cfg.timeout_ms = static_cast<long>(opts.timeout.count());
}

void validate(const CliConfig& cfg) {
  cfg.cof.validate();
  cfg.grid.validate();
  if (cfg.n_tasks < 1) throw ConfigError("--n-tasks must be >= 1");
  if (cfg.distractors < 0) throw ConfigError("--distractors must be >= 0");
  if (!(cfg.probe_fraction >= 0.0 && cfg.probe_fraction <= 1.0)) throw ConfigError("--probe-fraction must be in [0, 1]");
  if (cfg.workers < 1) throw ConfigError("--workers must be >= 1");
  if (cfg.timeout_ms <= 0) throw ConfigError("--timeout must be positive");
  if (cfg.variants.empty()) throw ConfigError("at least one --variant is required");
  if (cfg.backend == BackendKind::remote) {
    if (cfg.endpoint.empty()) throw ConfigError("--backend remote needs --endpoint (or COF_ENDPOINT)");
    parse_endpoint(cfg.endpoint);
    if (cfg.command == Command::inspect) throw ConfigError("inspect needs the toy backend to capture attention");
  }
  if (cfg.command == Command::sweep) {
    if (cfg.alpha_grid.empty() || cfg.lambda_grid.empty()) throw ConfigError("sweep grids must be nonempty");
    for (double a : cfg.alpha_grid) {
      for (double l : cfg.lambda_grid) {
        CoFConfig c = cfg.cof;
        c.alpha = a;
        c.lambda = l;
        c.validate();
      }
    }
  }
  if (cfg.command == Command::inspect && cfg.out.empty()) throw ConfigError("inspect needs --out DIR");
}

std::vector<SyntheticTask> load_tasks(const CliConfig& cfg, int n_tasks) {
  if (cfg.task_file.empty()) {
    SuiteOptions so;
    so.seed = cfg.seed;
    so.n_tasks = n_tasks;
    so.grid = cfg.grid;
    so.distractor_count = cfg.distractors;
    so.probe_fraction = cfg.probe_fraction;
    return generate_suite(so);
  }
  std::ifstream in(cfg.task_file);
  if (!in) throw ConfigError("cannot open task file '" + cfg.task_file + "'");
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("task file '" + cfg.task_file + "' is not valid JSON");
  std::vector<SyntheticTask> tasks;
  try {
    if (j.is_array()) {
      tasks = j.get<std::vector<SyntheticTask>>();
    } else {
      tasks.push_back(j.get<SyntheticTask>());
    }
  } catch (const json::exception& e) {
    throw ConfigError("task file '" + cfg.task_file + "': " + e.what());
  }
  if (tasks.empty()) throw ConfigError("task file '" + cfg.task_file + "' holds no tasks");
  for (const auto& t : tasks) t.image.validate();
  if (static_cast<int>(tasks.size()) > n_tasks) tasks.resize(n_tasks);
  return tasks;
}

std::unique_ptr<Backend> make_backend(const CliConfig& cfg) {
  if (cfg.backend == BackendKind::remote) {
    RemoteOptions opts;
    opts.timeout = std::chrono::milliseconds(cfg.timeout_ms);
    return std::make_unique<RemoteBackend>(cfg.endpoint, opts);
  }
  GroundingNoise noise;
  noise.mode = cfg.grounding;
  noise.seed = cfg.seed;
  if (cfg.grounding == GroundingNoiseMode::perturbed) noise.jitter = kPerturbedJitter;
  return std::make_unique<ToyBackend>(std::make_shared<const ModelWeights>(ModelWeights::task_model(cfg.model_seed)),
                                      noise);
}

void refuse_overwrite(const CliConfig& cfg, const fs::path& path) {
  if (!cfg.force && fs::exists(path)) {
    throw ConfigError("'" + path.string() + "' exists; pass --force to overwrite");
  }
}

EvalOptions eval_options(const CliConfig& cfg, RecordSink* sink) {
  EvalOptions o;
  o.workers = cfg.workers;
  o.sink = sink;
  o.suite_seed = cfg.seed;
  o.pipeline.stage2_includes_grounding_prompt = cfg.stage2_grounding_prompt;
  return o;
}

std::string box_or_dash(const std::optional<NormBox>& b) { return b ? to_string(*b) : std::string("-"); }

void print_box_trace(std::ostream& err, const EvalRecord& r, const PatchGrid& grid) {
  err << "task " << r.task_id << " [" << to_string(r.variant) << "]";
  if (r.failed) {
    err << " failed: " << r.error << "\n";
    return;
  }
  if (r.variant == RunVariant::cof) {
    err << "\n  grounding: " << r.grounding_status;
    if (r.coord_convention) err << " (" << to_string(*r.coord_convention) << ")";
    err << "\n  raw box:      " << box_or_dash(r.raw_box) << "\n  expanded box: " << box_or_dash(r.expanded_box)
        << "\n  clamped box:  " << box_or_dash(r.clamped_box) << "\n  mask: " << r.mask_cardinality << "/"
        << grid.size() << " patches" << (r.fallback ? " (full-image fallback)" : "") << "\n ";
  }
  err << " answer: " << r.answer << "  gold: " << r.gold_answer << (r.correct ? "  correct" : "  wrong")
      << "  mass: " << r.mean_attention_mass() << "\n";
}

class CountingSink final : public RecordSink {
 public:
  explicit CountingSink(RecordSink* next) : next_(next) {}
  void write(const EvalRecord& record) override {
    if (record.failed) ++failed_;
    if (next_) next_->write(record);
  }
  std::size_t failed() const { return failed_; }

 private:
  RecordSink* next_;
  std::size_t failed_ = 0;  // sink writes are serialized by the harness
};

int cmd_run(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto tasks = load_tasks(cfg, 1);
  auto backend = make_backend(cfg);
  const auto result = evaluate(tasks, *backend, cfg.variants, cfg.cof, eval_options(cfg, nullptr));
  for (const auto& r : result.records) {
    out << to_jsonl_line(r) << "\n";
    print_box_trace(err, r, tasks.front().image.grid);
  }
  out.flush();
  return result.summary.failures == 0 ? kExitOk : kExitTaskFailed;
}

int cmd_eval(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.out.empty()) refuse_overwrite(cfg, cfg.out);
  const auto tasks = load_tasks(cfg, cfg.n_tasks);
  auto backend = make_backend(cfg);
  std::ofstream file;
  std::unique_ptr<JsonlWriter> writer;
  if (!cfg.out.empty()) {
    file.open(cfg.out, std::ios::trunc);
    if (!file) throw ConfigError("cannot write '" + cfg.out + "'");
    writer = std::make_unique<JsonlWriter>(file);
  }
  const auto result = evaluate(tasks, *backend, cfg.variants, cfg.cof, eval_options(cfg, writer.get()));
  print_summary(out, result.summary);
  out << "failures: " << result.summary.failures << "\n";
  if (!cfg.out.empty()) out << "records: " << result.records.size() << " -> " << cfg.out << "\n";
  out.flush();
  for (const auto& r : result.records) {
    if (r.failed) err << "task " << r.task_id << " [" << to_string(r.variant) << "] failed: " << r.error << "\n";
  }
  return result.summary.failures == 0 ? kExitOk : kExitTaskFailed;
}

int cmd_sweep(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.out.empty()) refuse_overwrite(cfg, cfg.out);
  const auto tasks = load_tasks(cfg, cfg.n_tasks);
  auto backend = make_backend(cfg);
  CountingSink counter(nullptr);
  const auto rows =
      sweep(tasks, *backend, cfg.alpha_grid, cfg.lambda_grid, cfg.variants, cfg.cof, eval_options(cfg, &counter));
  if (cfg.out.empty()) {
    write_sweep_csv(out, rows);
  } else {
    std::ofstream file(cfg.out, std::ios::trunc);
    if (!file) throw ConfigError("cannot write '" + cfg.out + "'");
    write_sweep_csv(file, rows);
    out << "rows: " << rows.size() << " -> " << cfg.out << "\n";
  }
  out.flush();
  if (counter.failed() > 0) err << counter.failed() << " task runs failed\n";
  return counter.failed() == 0 ? kExitOk : kExitTaskFailed;
}

int cmd_inspect(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto tasks = load_tasks(cfg, 1);
  const SyntheticTask& task = tasks.front();
  const auto weights = std::make_shared<const ModelWeights>(ModelWeights::task_model(cfg.model_seed));
  GroundingNoise noise;
  noise.mode = cfg.grounding;
  noise.seed = cfg.seed;
  if (cfg.grounding == GroundingNoiseMode::perturbed) noise.jitter = kPerturbedJitter;
  ToyBackend backend(weights, noise);
  const ImageRef image = task.image_ref();
  const RunVariant variant = cfg.variants.front();

  const TokenSequence seq = build_sequence(task.image, task.question, *weights);
  TokenMask mask = TokenMask::empty(task.image.grid);
  std::optional<AttentionReweight> rw;
  if (variant != RunVariant::baseline) {
    if (variant == RunVariant::cof) {
      PipelineOptions po;
      po.stage2_includes_grounding_prompt = cfg.stage2_grounding_prompt;
      const CofPlan plan = plan_cof(backend, image, task.question, cfg.cof, po);
      mask = plan.mask;
      err << "grounding: " << to_string(plan.grounding.status) << "  clamped box: " << to_string(plan.clamped_box)
          << (plan.fallback ? "  (full-image fallback)" : "") << "\n";
    } else {
      mask = TokenMask::full(task.image.grid);
    }
    AttentionReweight r;
    r.params.lambda = cfg.cof.lambda;
    r.params.column_mask = mask_to_columns(mask, seq.layout());
    r.layers = cfg.cof.layer_scope;
    rw = std::move(r);
  }

  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  const int n_layers = weights->dims.n_layers;
  const int n_heads = weights->dims.n_heads;
  std::vector<fs::path> files;
  for (int l = 0; l < n_layers; ++l) {
    for (int h = 0; h < n_heads; ++h) {
      files.push_back(dir / ("attn_layer" + std::to_string(l) + "_head" + std::to_string(h) + ".csv"));
    }
  }
  files.push_back(dir / "mask.txt");
  for (const auto& f : files) refuse_overwrite(cfg, f);

  DecodeSession session(*weights, rw);
  AttentionTrace trace;
  session.prefill(seq, &trace);
  const auto labels = seq.labels();
  for (int l = 0; l < n_layers; ++l) {
    for (int h = 0; h < n_heads; ++h) {
      std::ofstream f(files[static_cast<std::size_t>(l * n_heads + h)]);
      write_attention_csv(f, trace.probs[l][h], labels, labels);
    }
  }
  std::ofstream(files.back()) << mask.render_grid();

  out << "task " << task.task_id << " [" << to_string(variant) << "] \"" << task.question << "\"\n"
      << "lambda " << cfg.cof.lambda << "  alpha " << cfg.cof.alpha << "  layers " << cfg.cof.layer_scope.to_string()
      << "\n"
      << mask.render_grid() << "wrote " << files.size() << " files to " << dir.string() << "\n";
  return kExitOk;
}

struct Subcommand {
  Command command;
  CLI::App* app;
};

CLI::App* add_subcommand(CLI::App& app, const std::string& name, const std::string& desc, RawFlags& raw) {
  CLI::App* sub = app.add_subcommand(name, desc);
  sub->footer(kLayeringHelp);
  sub->add_option("--config", raw.config, "JSON config file");
  sub->add_option("--preset", raw.preset, "llava-v1.5-7b | llava-v1.5-13b | instructblip-13b");
  sub->add_option("--alpha", raw.alpha, "box expansion factor (> 0)");
  sub->add_option("--lambda", raw.lambda, "attention boost on the grounded region (>= 1)");
  sub->add_option("--layers", raw.layers, "decoder layers to reweight: all | BEGIN:END");
  sub->add_option("--variant", raw.variants, "baseline | reweight_global | cof (repeatable)");
  sub->add_option("--backend", raw.backend, "toy | remote");
  sub->add_option("--endpoint", raw.endpoint, "remote server URL, http://host:port/path");
  sub->add_option("--timeout", raw.timeout_ms, "remote timeout in milliseconds");
  sub->add_option("--seed", raw.seed, "suite seed");
  sub->add_option("--model-seed", raw.model_seed, "toy model seed");
  sub->add_option("--grid", raw.grid, "patch grid, RxC");
  sub->add_option("--distractors", raw.distractors, "distractor objects per image");
  sub->add_option("--probe-fraction", raw.probe_fraction, "share of existence probes in the suite");
  sub->add_option("--grounding", raw.grounding, "toy grounding stub: exact | perturbed | refusal");
  sub->add_option("--task-file", raw.task_file, "JSON task (or array of tasks) instead of a generated suite");
  sub->add_flag("--stage2-grounding-prompt", raw.stage2_grounding_prompt,
                "send the grounding instruction in the answer pass too");
  if (name != "run") sub->add_option("--out", raw.out, name == "inspect" ? "output directory" : "output file");
  if (name != "run") sub->add_flag("--force", raw.force, "overwrite existing output");
  if (name == "eval" || name == "sweep") {
    sub->add_option("--n-tasks", raw.n_tasks, "suite size");
    sub->add_option("--workers", raw.workers, "parallel workers");
  }
  if (name == "sweep") {
    sub->add_option("--alpha-grid", raw.alpha_grid, "comma-separated alphas (default: --alpha)");
    sub->add_option("--lambda-grid", raw.lambda_grid, "comma-separated lambdas (default: 1,2,4.5,22)");
  }
  return sub;
}

CliConfig resolve(Command command, const CLI::App& sub, const RawFlags& raw) {
  auto given = [&sub](const char* flag) {
    const CLI::Option* o = sub.get_option_no_throw(flag);
    return o != nullptr && o->count() > 0;
  };
  CliConfig cfg;
  cfg.command = command;
  if (given("--config")) apply_config_file(cfg, raw.config);
  apply_env(cfg);

  if (given("--preset")) {
    const CoFConfig p = CoFConfig::preset(parse_preset(raw.preset));
    cfg.cof.alpha = p.alpha;
    cfg.cof.lambda = p.lambda;
  }
  if (given("--alpha")) cfg.cof.alpha = raw.alpha;
  if (given("--lambda")) cfg.cof.lambda = raw.lambda;
  if (given("--layers")) cfg.cof.layer_scope = parse_layer_scope(raw.layers);
  if (given("--variant")) {
    cfg.variants.clear();
    for (const auto& v : raw.variants) cfg.variants.push_back(parse_variant(v));
  }
  if (given("--backend")) cfg.backend = parse_backend(raw.backend);
  if (given("--endpoint")) cfg.endpoint = raw.endpoint;
  if (given("--timeout")) cfg.timeout_ms = raw.timeout_ms;
  if (given("--seed")) cfg.seed = raw.seed;
  if (given("--model-seed")) cfg.model_seed = raw.model_seed;
  if (given("--grid")) cfg.grid = parse_grid(raw.grid);
  if (given("--distractors")) cfg.distractors = raw.distractors;
  if (given("--probe-fraction")) cfg.probe_fraction = raw.probe_fraction;
  if (given("--grounding")) cfg.grounding = parse_grounding(raw.grounding);
  if (given("--task-file")) cfg.task_file = raw.task_file;
  if (given("--stage2-grounding-prompt")) cfg.stage2_grounding_prompt = true;
  if (given("--out")) cfg.out = raw.out;
  if (given("--force")) cfg.force = true;
  if (given("--n-tasks")) cfg.n_tasks = raw.n_tasks;
  if (given("--workers")) cfg.workers = raw.workers;
  if (given("--alpha-grid")) cfg.alpha_grid = parse_number_list(raw.alpha_grid);
  if (given("--lambda-grid")) cfg.lambda_grid = parse_number_list(raw.lambda_grid);

  if (cfg.variants.empty()) {
    cfg.variants = command == Command::eval
                       ? std::vector<RunVariant>{RunVariant::baseline, RunVariant::reweight_global, RunVariant::cof}
                       : std::vector<RunVariant>{RunVariant::cof};
  }
  if (cfg.alpha_grid.empty()) cfg.alpha_grid = {cfg.cof.alpha};
  if (cfg.lambda_grid.empty()) cfg.lambda_grid = {1.0, 2.0, 4.5, 22.0};
  return cfg;
}

}  // namespace

PatchGrid parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  PatchGrid g{0, 0};
  if (x != std::string::npos) {
    const char* b = text.data();
    const char* e = b + text.size();
    const auto r1 = std::from_chars(b, b + x, g.rows);
    const auto r2 = std::from_chars(b + x + 1, e, g.cols);
    if (r1.ec == std::errc{} && r1.ptr == b + x && r2.ec == std::errc{} && r2.ptr == e && g.is_valid()) return g;
  }
  throw ConfigError("grid must look like RxC with positive sizes, got '" + text + "'");
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc{} || res.ptr != item.data() + item.size() || !std::isfinite(v)) {
      throw ConfigError("'" + text + "' is not a comma-separated list of numbers");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Grounded attention reweighting for a toy vision-language decoder", "cof");
  app.footer(kLayeringHelp);
  app.require_subcommand(1);
  RawFlags raw;
  const std::vector<Subcommand> subs = {
      {Command::run, add_subcommand(app, "run", "run one task and print its records as JSON", raw)},
      {Command::eval, add_subcommand(app, "eval", "evaluate a suite; summary table plus JSONL records", raw)},
      {Command::sweep, add_subcommand(app, "sweep", "alpha x lambda grid; CSV table", raw)},
      {Command::inspect, add_subcommand(app, "inspect", "dump per-head attention CSVs and the mask", raw)},
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Subcommand* chosen = nullptr;
  for (const auto& s : subs) {
    if (s.app->parsed()) chosen = &s;
  }
  CliConfig cfg;
  try {
    cfg = resolve(chosen->command, *chosen->app, raw);
    validate(cfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    switch (cfg.command) {
      case Command::run:
        return cmd_run(cfg, out, err);
      case Command::eval:
        return cmd_eval(cfg, out, err);
      case Command::sweep:
        return cmd_sweep(cfg, out, err);
      case Command::inspect:
        return cmd_inspect(cfg, out, err);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidParameter& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitTaskFailed;
  }
  return kExitTaskFailed;
}

}  // namespace cof::cli
