#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cof/geometry.hpp"
#include "cof/grounding.hpp"

namespace cof {

// Ablation arms: no reweighting, reweighting of every visual token, and the
// full grounded reweighting.
enum class RunVariant { baseline, reweight_global, cof };

std::string_view to_string(RunVariant v);
std::optional<RunVariant> run_variant_from_string(std::string_view s);

inline constexpr int kRecordSchema = 1;

// One task evaluated under one variant. Persisted one per line as JSON.
struct EvalRecord {
  int schema = kRecordSchema;
  std::string task_id;
  RunVariant variant = RunVariant::baseline;
  double alpha = 1.0;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  std::string layer_scope = "all";

  // Box after each stage (cof only).
  std::optional<NormBox> raw_box;
  std::optional<NormBox> expanded_box;
  std::optional<NormBox> clamped_box;
  std::optional<CoordConvention> coord_convention;
  std::string grounding_status;
  bool fallback = false;
  std::size_t mask_cardinality = 0;

  std::string answer;
  std::string gold_answer;
  bool correct = false;
  std::vector<double> attention_mass_on_target;  // per layer, head-averaged
  double wall_time_ms = 0.0;

  bool failed = false;
  std::string error;

  double mean_attention_mass() const;

  bool operator==(const EvalRecord&) const = default;
};

// Everything the model produced, ignoring the variant tag, the box trace and
// timing. Used to compare two arms that must have decoded identically.
bool same_outcome(const EvalRecord& a, const EvalRecord& b);

}  // namespace cof
