#include "cof/record.hpp"

#include <numeric>

namespace cof {

std::string_view to_string(RunVariant v) {
  switch (v) {
    case RunVariant::baseline:
      return "baseline";
    case RunVariant::reweight_global:
      return "reweight_global";
    case RunVariant::cof:
      return "cof";
  }
  return "unknown";
}

std::optional<RunVariant> run_variant_from_string(std::string_view s) {
  for (auto v : {RunVariant::baseline, RunVariant::reweight_global, RunVariant::cof}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

double EvalRecord::mean_attention_mass() const {
  if (attention_mass_on_target.empty()) return 0.0;
  return std::accumulate(attention_mass_on_target.begin(), attention_mass_on_target.end(), 0.0) /
         static_cast<double>(attention_mass_on_target.size());
}

bool same_outcome(const EvalRecord& a, const EvalRecord& b) {
  return a.task_id == b.task_id && a.alpha == b.alpha && a.lambda == b.lambda && a.seed == b.seed &&
         a.layer_scope == b.layer_scope && a.mask_cardinality == b.mask_cardinality && a.answer == b.answer &&
         a.gold_answer == b.gold_answer && a.correct == b.correct &&
         a.attention_mass_on_target == b.attention_mass_on_target && a.failed == b.failed && a.error == b.error;
}

}  // namespace cof
