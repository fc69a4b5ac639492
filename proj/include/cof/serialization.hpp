#pragma once

// JSON mappings for the persisted and wire types.
//   NormBox    -> [x1, y1, x2, y2]
//   TokenMask  -> {"rows": R, "cols": C, "bits": "0101..."}
//   EvalRecord -> flat object with "schema": 1

#include "json.hpp"

#include "cof/attention.hpp"
#include "cof/geometry.hpp"
#include "cof/harness.hpp"
#include "cof/record.hpp"
#include "cof/toy_model.hpp"

namespace cof {

void to_json(nlohmann::json& j, const NormBox& box);
void from_json(const nlohmann::json& j, NormBox& box);

void to_json(nlohmann::json& j, const PatchGrid& grid);
void from_json(const nlohmann::json& j, PatchGrid& grid);

void to_json(nlohmann::json& j, const TokenMask& mask);
void from_json(const nlohmann::json& j, TokenMask& mask);

void to_json(nlohmann::json& j, const SyntheticImage& image);
void from_json(const nlohmann::json& j, SyntheticImage& image);

void to_json(nlohmann::json& j, const SyntheticTask& task);
void from_json(const nlohmann::json& j, SyntheticTask& task);

void to_json(nlohmann::json& j, const EvalRecord& record);
void from_json(const nlohmann::json& j, EvalRecord& record);

// {"alpha", "lambda", "layers": "all" | [begin, end]}
void to_json(nlohmann::json& j, const CoFConfig& config);
void from_json(const nlohmann::json& j, CoFConfig& config);

LayerScope parse_layer_scope(std::string_view text);

}  // namespace cof
