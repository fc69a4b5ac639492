#include "cof/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "cof/errors.hpp"
#include "cof/rng.hpp"
#include "cof/serialization.hpp"

namespace cof {

namespace {

constexpr double kSalienceLo = 0.85;
constexpr double kSalienceHi = 1.15;

const char* const kAttributeQuestions[] = {
    "What color is the object?",
    "What is the color of the object in the image?",
    "What color is this object?",
};

std::string task_id_for(std::uint64_t seed, int index) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%llu-%05d", static_cast<unsigned long long>(seed), index);
  return buf;
}

void put_object(Matrix& features, std::size_t patch, int color, double salience) {
  auto row = features.row(patch);
  row[color] = 1.0;
  row[kFeatureSalience] = salience;
  row[kFeatureObjectness] = 1.0;
}

}  // namespace

std::string_view to_string(TaskKind k) {
  return k == TaskKind::attribute_query ? "attribute_query" : "existence_probe";
}

std::optional<TaskKind> task_kind_from_string(std::string_view s) {
  if (s == "attribute_query") return TaskKind::attribute_query;
  if (s == "existence_probe") return TaskKind::existence_probe;
  return std::nullopt;
}

std::vector<SyntheticTask> generate_suite(const SuiteOptions& options) {
  if (options.n_tasks < 1) throw ConfigError("suite: n_tasks must be >= 1");
  if (!options.grid.is_valid()) throw ConfigError("suite: grid must be at least 1x1");
  if (options.distractor_count < 0) throw ConfigError("suite: distractor count must be >= 0");
  if (options.distractor_count >= kNumColors) {
    throw ConfigError("suite: at most " + std::to_string(kNumColors - 1) + " distractors (one color each)");
  }
  if (static_cast<std::size_t>(options.distractor_count) + 1 > options.grid.size()) {
    throw ConfigError("suite: grid " + std::to_string(options.grid.rows) + "x" + std::to_string(options.grid.cols) +
                      " cannot hold a target and " + std::to_string(options.distractor_count) + " distractors");
  }
  if (!(options.probe_fraction >= 0.0 && options.probe_fraction <= 1.0)) {
    throw ConfigError("suite: probe fraction must lie in [0, 1]");
  }

  Rng rng(options.seed);
  const std::size_t n_cells = options.grid.size();
  std::vector<SyntheticTask> suite;
  suite.reserve(options.n_tasks);
  for (int i = 0; i < options.n_tasks; ++i) {
    SyntheticTask task;
    task.task_id = task_id_for(options.seed, i);
    SyntheticImage& img = task.image;
    img.grid = options.grid;
    img.patch_pixels = options.patch_pixels;
    img.patch_features = Matrix(n_cells, kFeatureDim);

    // partial Fisher-Yates over cells: target first, then distractors
    std::vector<std::size_t> cells(n_cells);
    std::iota(cells.begin(), cells.end(), std::size_t{0});
    for (int k = 0; k <= options.distractor_count; ++k) {
      const auto pick = k + rng.below(n_cells - k);
      std::swap(cells[k], cells[pick]);
    }
    std::vector<int> palette(kNumColors);
    std::iota(palette.begin(), palette.end(), 0);
    for (int k = 0; k <= options.distractor_count; ++k) {
      const auto pick = k + rng.below(kNumColors - k);
      std::swap(palette[k], palette[pick]);
    }

    const auto cell_index = [&](std::size_t c) {
      return PatchIndex{static_cast<int>(c / options.grid.cols), static_cast<int>(c % options.grid.cols)};
    };
    img.target_patch = cell_index(cells[0]);
    const int target_color = palette[0];
    put_object(img.patch_features, cells[0], target_color, rng.uniform(kSalienceLo, kSalienceHi));
    for (int k = 1; k <= options.distractor_count; ++k) {
      img.distractor_patches.push_back(cell_index(cells[k]));
      put_object(img.patch_features, cells[k], palette[k], rng.uniform(kSalienceLo, kSalienceHi));
    }

    const bool probe = rng.uniform() < options.probe_fraction;
    if (!probe) {
      task.kind = TaskKind::attribute_query;
      task.question = kAttributeQuestions[rng.below(std::size(kAttributeQuestions))];
      task.gold_answer = std::string(kColorNames[target_color]);
    } else {
      task.kind = TaskKind::existence_probe;
      const bool present = rng.uniform() < 0.5;
      // palette[distractor_count + 1 ..] holds colors absent from the image
      const int absent_slots = kNumColors - 1 - options.distractor_count;
      const int asked = present ? target_color
                                : palette[options.distractor_count + 1 + rng.below(absent_slots)];
      task.question = "Is there a " + std::string(kColorNames[asked]) + " object in the image?";
      task.gold_answer = present ? "yes" : "no";
    }
    img.validate();
    suite.push_back(std::move(task));
  }
  return suite;
}

const VariantSummary* EvalSummary::find(RunVariant v) const {
  for (const auto& r : rows) {
    if (r.variant == v) return &r;
  }
  return nullptr;
}

EvalSummary summarize(const std::vector<EvalRecord>& records) {
  EvalSummary s;
  std::vector<double> mass_sum;
  std::vector<std::size_t> mass_n;
  for (const auto& rec : records) {
    auto it = std::find_if(s.rows.begin(), s.rows.end(), [&](const auto& r) { return r.variant == rec.variant; });
    if (it == s.rows.end()) {
      s.rows.push_back({});
      s.rows.back().variant = rec.variant;
      mass_sum.push_back(0.0);
      mass_n.push_back(0);
      it = s.rows.end() - 1;
    }
    const auto idx = static_cast<std::size_t>(it - s.rows.begin());
    ++it->n_tasks;
    if (rec.failed) {
      ++it->n_failed;
      ++s.failures;
      continue;
    }
    if (rec.correct) ++it->n_correct;
    if (rec.fallback) ++it->n_fallback;
    if (!rec.attention_mass_on_target.empty()) {
      mass_sum[idx] += rec.mean_attention_mass();
      ++mass_n[idx];
    }
  }
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    auto& r = s.rows[i];
    const double n = static_cast<double>(r.n_tasks);
    r.accuracy = static_cast<double>(r.n_correct) / n;
    r.fallback_rate = static_cast<double>(r.n_fallback) / n;
    r.mean_mass = mass_n[i] ? mass_sum[i] / static_cast<double>(mass_n[i]) : 0.0;
  }
  return s;
}

void print_summary(std::ostream& os, const EvalSummary& summary) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %-8s %-6s %6s %9s %10s %9s %7s\n", "variant", "Reweight", "Ground", "tasks",
                "accuracy", "mean_mass", "fallback", "failed");
  os << buf;
  for (const auto& r : summary.rows) {
    const bool reweight = r.variant != RunVariant::baseline;
    const bool ground = r.variant == RunVariant::cof;
    std::snprintf(buf, sizeof(buf), "%-16s %-8s %-6s %6zu %9.4f %10.6f %9.4f %7zu\n",
                  std::string(to_string(r.variant)).c_str(), reweight ? "x" : "", ground ? "x" : "", r.n_tasks,
                  r.accuracy, r.mean_mass, r.fallback_rate, r.n_failed);
    os << buf;
  }
}

void JsonlWriter::write(const EvalRecord& record) {
  const std::string line = to_jsonl_line(record);
  std::lock_guard lock(mu_);
  *os_ << line << '\n';
  os_->flush();
}

// Invalid UTF-8 (e.g. in a relayed server error) is replaced, not thrown.
std::string to_jsonl_line(const EvalRecord& record) {
  return nlohmann::json(record).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

EvalRecord parse_jsonl_line(std::string_view line) {
  try {
    return nlohmann::json::parse(line).get<EvalRecord>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed record: ") + e.what());
  }
}

std::vector<EvalRecord> read_jsonl(std::istream& is) {
  std::vector<EvalRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_jsonl_line(line));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void finalize_record(EvalRecord& record, const SyntheticTask& task, std::uint64_t suite_seed) {
  record.task_id = task.task_id;
  record.seed = suite_seed;
  record.gold_answer = task.gold_answer;
  record.correct = !record.failed && record.answer == task.gold_answer;
}

EvalResult evaluate(const std::vector<SyntheticTask>& suite, Backend& backend, const std::vector<RunVariant>& variants,
                    const CoFConfig& config, const EvalOptions& options) {
  if (suite.empty()) throw InvalidParameter("evaluate: empty suite");
  if (variants.empty()) throw InvalidParameter("evaluate: no variants requested");
  config.validate();

  const std::size_t n_jobs = suite.size() * variants.size();
  std::vector<EvalRecord> records(n_jobs);
  std::vector<char> done(n_jobs, 0);
  std::size_t next_to_emit = 0;
  std::mutex emit_mu;
  std::atomic<std::size_t> next_job{0};

  const auto worker = [&] {
    for (;;) {
      const std::size_t job = next_job.fetch_add(1);
      if (job >= n_jobs) return;
      const SyntheticTask& task = suite[job / variants.size()];
      const RunVariant variant = variants[job % variants.size()];
      EvalRecord rec;
      try {
        rec = run_variant(backend, task.image_ref(), task.question, variant, config, options.pipeline);
      } catch (const std::exception& e) {
        rec = EvalRecord{};
        rec.variant = variant;
        rec.alpha = config.alpha;
        rec.lambda = config.lambda;
        rec.layer_scope = config.layer_scope.to_string();
        rec.failed = true;
        rec.error = e.what();
      }
      finalize_record(rec, task, options.suite_seed);

      std::lock_guard lock(emit_mu);
      records[job] = std::move(rec);
      done[job] = 1;
      while (next_to_emit < n_jobs && done[next_to_emit]) {
        if (options.sink) options.sink->write(records[next_to_emit]);
        ++next_to_emit;
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(options.workers, static_cast<int>(n_jobs)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }

  EvalResult result;
  result.records = std::move(records);
  result.summary = summarize(result.records);
  return result;
}

std::vector<SweepRow> sweep(const std::vector<SyntheticTask>& suite, Backend& backend,
                            const std::vector<double>& alpha_grid, const std::vector<double>& lambda_grid,
                            const std::vector<RunVariant>& variants, const CoFConfig& base,
                            const EvalOptions& options) {
  if (alpha_grid.empty() || lambda_grid.empty()) throw InvalidParameter("sweep: alpha and lambda grids must be nonempty");
  std::vector<SweepRow> rows;
  for (double alpha : alpha_grid) {
    for (double lambda : lambda_grid) {
      CoFConfig cfg = base;
      cfg.alpha = alpha;
      cfg.lambda = lambda;
      const EvalResult res = evaluate(suite, backend, variants, cfg, options);
      for (RunVariant v : variants) {
        const VariantSummary* s = res.summary.find(v);
        rows.push_back({alpha, lambda, v, s->accuracy, s->mean_mass, s->fallback_rate});
      }
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kSweepCsvHeader << '\n';
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%s,%.17g,%.17g,%.17g\n", r.alpha, r.lambda,
                  std::string(to_string(r.variant)).c_str(), r.accuracy, r.mean_mass, r.fallback_rate);
    os << buf;
  }
}

std::vector<SweepRow> read_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kSweepCsvHeader) throw ConfigError("sweep csv: missing or wrong header");
  std::vector<SweepRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw ConfigError("sweep csv: expected 6 columns in '" + line + "'");
    const auto variant = run_variant_from_string(cells[2]);
    if (!variant) throw ConfigError("sweep csv: unknown variant '" + cells[2] + "'");
    rows.push_back({std::stod(cells[0]), std::stod(cells[1]), *variant, std::stod(cells[3]), std::stod(cells[4]),
                    std::stod(cells[5])});
  }
  return rows;
}

}  // namespace cof
