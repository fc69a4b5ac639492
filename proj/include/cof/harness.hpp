#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cof/attention.hpp"
#include "cof/pipeline.hpp"
#include "cof/record.hpp"
#include "cof/toy_model.hpp"

namespace cof {

enum class TaskKind { attribute_query, existence_probe };

std::string_view to_string(TaskKind k);
std::optional<TaskKind> task_kind_from_string(std::string_view s);

struct SyntheticTask {
  std::string task_id;
  SyntheticImage image;
  std::string question;
  std::string gold_answer;
  TaskKind kind = TaskKind::attribute_query;

  ImageRef image_ref() const { return ImageRef::of(image, task_id); }

  bool operator==(const SyntheticTask&) const = default;
};

struct SuiteOptions {
  std::uint64_t seed = 7;
  int n_tasks = 200;
  PatchGrid grid{4, 4};
  int distractor_count = 3;
  // Share of existence probes; the rest are attribute queries.
  double probe_fraction = 0.0;
  int patch_pixels = 14;
};

// Each task holds one target object and `distractor_count` objects of other
// colors with comparable salience; every other patch is empty background.
// Attribute queries ask for the target's color. Existence probes ask whether
// a color is present: the target's (gold "yes") or one absent from the image
// (gold "no"). Deterministic in the seed. Throws ConfigError when the grid
// cannot hold the target plus distractors.
std::vector<SyntheticTask> generate_suite(const SuiteOptions& options);

struct VariantSummary {
  RunVariant variant = RunVariant::baseline;
  std::size_t n_tasks = 0;
  std::size_t n_correct = 0;
  std::size_t n_failed = 0;
  std::size_t n_fallback = 0;
  double accuracy = 0.0;
  double mean_mass = 0.0;
  double fallback_rate = 0.0;

  bool operator==(const VariantSummary&) const = default;
};

struct EvalSummary {
  std::vector<VariantSummary> rows;
  std::size_t failures = 0;

  const VariantSummary* find(RunVariant v) const;
  bool operator==(const EvalSummary&) const = default;
};

// Per-variant metrics in first-seen variant order. Failed records count as
// incorrect; mean mass averages the non-failed records.
EvalSummary summarize(const std::vector<EvalRecord>& records);

// Table with the Reweight / Ground columns of the ablation layout.
void print_summary(std::ostream& os, const EvalSummary& summary);

class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void write(const EvalRecord& record) = 0;
};

// Appends one JSON object per line; writes are serialized and flushed.
class JsonlWriter final : public RecordSink {
 public:
  explicit JsonlWriter(std::ostream& os) : os_(&os) {}
  void write(const EvalRecord& record) override;

 private:
  std::ostream* os_;
  std::mutex mu_;
};

std::string to_jsonl_line(const EvalRecord& record);
EvalRecord parse_jsonl_line(std::string_view line);
// Skips blank lines. Throws ConfigError (with the line number) on a bad line.
std::vector<EvalRecord> read_jsonl(std::istream& is);

struct EvalOptions {
  int workers = 1;
  PipelineOptions pipeline;
  RecordSink* sink = nullptr;  // receives records in task-id order
  std::uint64_t suite_seed = 0;  // copied into every record
};

struct EvalResult {
  std::vector<EvalRecord> records;  // task order, then variant order
  EvalSummary summary;
};

// Runs every (task, variant) pair on a bounded worker pool. A backend error
// marks that record failed and evaluation continues.
EvalResult evaluate(const std::vector<SyntheticTask>& suite, Backend& backend, const std::vector<RunVariant>& variants,
                    const CoFConfig& config, const EvalOptions& options = {});

// Fills task-specific record fields and scores the answer (exact match).
void finalize_record(EvalRecord& record, const SyntheticTask& task, std::uint64_t suite_seed);

inline constexpr std::string_view kSweepCsvHeader = "alpha,lambda,variant,accuracy,mean_mass,fallback_rate";

struct SweepRow {
  double alpha = 1.0;
  double lambda = 1.0;
  RunVariant variant = RunVariant::cof;
  double accuracy = 0.0;
  double mean_mass = 0.0;
  double fallback_rate = 0.0;

  bool operator==(const SweepRow&) const = default;
};

// Cross product alpha x lambda x variant, alpha-major. Throws InvalidParameter
// on an empty grid.
std::vector<SweepRow> sweep(const std::vector<SyntheticTask>& suite, Backend& backend,
                            const std::vector<double>& alpha_grid, const std::vector<double>& lambda_grid,
                            const std::vector<RunVariant>& variants, const CoFConfig& base,
                            const EvalOptions& options = {});

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& is);

}  // namespace cof
