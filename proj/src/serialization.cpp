#include "cof/serialization.hpp"

#include <charconv>

#include "cof/errors.hpp"

namespace cof {

using nlohmann::json;

namespace {

json optional_box(const std::optional<NormBox>& b) { return b ? json(*b) : json(nullptr); }

std::optional<NormBox> read_optional_box(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<NormBox>();
}

template <typename Enum, typename Parse>
Enum enum_from(const json& j, Parse parse, const char* what) {
  const auto s = j.get<std::string>();
  const auto v = parse(s);
  if (!v) throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
  return *v;
}

}  // namespace

void to_json(json& j, const NormBox& box) { j = json::array({box.x1, box.y1, box.x2, box.y2}); }

void from_json(const json& j, NormBox& box) {
  if (!j.is_array() || j.size() != 4) throw ConfigError("box must be an array of four numbers");
  box = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void to_json(json& j, const PatchGrid& grid) { j = json{{"rows", grid.rows}, {"cols", grid.cols}}; }

void from_json(const json& j, PatchGrid& grid) {
  grid.rows = j.at("rows").get<int>();
  grid.cols = j.at("cols").get<int>();
}

void to_json(json& j, const TokenMask& mask) {
  j = json{{"rows", mask.grid().rows}, {"cols", mask.grid().cols}, {"bits", mask.bit_string()}};
}

void from_json(const json& j, TokenMask& mask) {
  mask = TokenMask::from_bit_string(j.get<PatchGrid>(), j.at("bits").get<std::string>());
}

void to_json(json& j, const SyntheticImage& image) {
  json features = json::array();
  for (std::size_t r = 0; r < image.patch_features.rows(); ++r) {
    const auto row = image.patch_features.row(r);
    features.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json distractors = json::array();
  for (const auto& d : image.distractor_patches) distractors.push_back({d.row, d.col});
  j = json{{"grid", image.grid},
           {"patch_pixels", image.patch_pixels},
           {"target_patch", {image.target_patch.row, image.target_patch.col}},
           {"distractor_patches", distractors},
           {"patch_features", features}};
}

void from_json(const json& j, SyntheticImage& image) {
  image.grid = j.at("grid").get<PatchGrid>();
  image.patch_pixels = j.value("patch_pixels", 14);
  const auto& t = j.at("target_patch");
  image.target_patch = {t.at(0).get<int>(), t.at(1).get<int>()};
  image.distractor_patches.clear();
  for (const auto& d : j.at("distractor_patches")) image.distractor_patches.push_back({d.at(0), d.at(1)});
  image.patch_features = Matrix();
  for (const auto& row : j.at("patch_features")) image.patch_features.append_row(row.get<std::vector<double>>());
  image.validate();
}

void to_json(json& j, const SyntheticTask& task) {
  j = json{{"task_id", task.task_id},
           {"kind", to_string(task.kind)},
           {"question", task.question},
           {"gold_answer", task.gold_answer},
           {"image", task.image}};
}

void from_json(const json& j, SyntheticTask& task) {
  task.task_id = j.at("task_id").get<std::string>();
  task.kind = enum_from<TaskKind>(j.at("kind"), task_kind_from_string, "task kind");
  task.question = j.at("question").get<std::string>();
  task.gold_answer = j.at("gold_answer").get<std::string>();
  task.image = j.at("image").get<SyntheticImage>();
}

void to_json(json& j, const EvalRecord& r) {
  j = json{{"schema", r.schema},
           {"task_id", r.task_id},
           {"variant", to_string(r.variant)},
           {"config", {{"alpha", r.alpha}, {"lambda", r.lambda}, {"seed", r.seed}, {"layers", r.layer_scope}}},
           {"boxes",
            {{"raw", optional_box(r.raw_box)},
             {"expanded", optional_box(r.expanded_box)},
             {"clamped", optional_box(r.clamped_box)}}},
           {"coord_convention", r.coord_convention ? json(to_string(*r.coord_convention)) : json(nullptr)},
           {"grounding_status", r.grounding_status},
           {"fallback", r.fallback},
           {"mask_cardinality", r.mask_cardinality},
           {"answer", r.answer},
           {"gold_answer", r.gold_answer},
           {"correct", r.correct},
           {"attention_mass_on_target", r.attention_mass_on_target},
           {"mean_attention_mass", r.mean_attention_mass()},
           {"wall_time_ms", r.wall_time_ms},
           {"failed", r.failed},
           {"error", r.error}};
}

void from_json(const json& j, EvalRecord& r) {
  r.schema = j.at("schema").get<int>();
  if (r.schema != kRecordSchema) throw ConfigError("unsupported record schema " + std::to_string(r.schema));
  r.task_id = j.at("task_id").get<std::string>();
  r.variant = enum_from<RunVariant>(j.at("variant"), run_variant_from_string, "variant");
  const auto& cfg = j.at("config");
  r.alpha = cfg.at("alpha").get<double>();
  r.lambda = cfg.at("lambda").get<double>();
  r.seed = cfg.at("seed").get<std::uint64_t>();
  r.layer_scope = cfg.at("layers").get<std::string>();
  const auto& boxes = j.at("boxes");
  r.raw_box = read_optional_box(boxes.at("raw"));
  r.expanded_box = read_optional_box(boxes.at("expanded"));
  r.clamped_box = read_optional_box(boxes.at("clamped"));
  const auto& conv = j.at("coord_convention");
  r.coord_convention = conv.is_null() ? std::nullopt
                                      : std::optional(enum_from<CoordConvention>(conv, coord_convention_from_string,
                                                                                 "coordinate convention"));
  r.grounding_status = j.at("grounding_status").get<std::string>();
  r.fallback = j.at("fallback").get<bool>();
  r.mask_cardinality = j.at("mask_cardinality").get<std::size_t>();
  r.answer = j.at("answer").get<std::string>();
  r.gold_answer = j.at("gold_answer").get<std::string>();
  r.correct = j.at("correct").get<bool>();
  r.attention_mass_on_target = j.at("attention_mass_on_target").get<std::vector<double>>();
  r.wall_time_ms = j.at("wall_time_ms").get<double>();
  r.failed = j.at("failed").get<bool>();
  r.error = j.at("error").get<std::string>();
}

void to_json(json& j, const CoFConfig& c) {
  j = json{{"alpha", c.alpha}, {"lambda", c.lambda}};
  if (c.layer_scope.range) {
    j["layers"] = {c.layer_scope.range->first, c.layer_scope.range->second};
  } else {
    j["layers"] = "all";
  }
}

void from_json(const json& j, CoFConfig& c) {
  c.alpha = j.value("alpha", c.alpha);
  c.lambda = j.value("lambda", c.lambda);
  if (j.contains("layers")) {
    const auto& l = j.at("layers");
    if (l.is_string()) {
      c.layer_scope = parse_layer_scope(l.get<std::string>());
    } else {
      c.layer_scope = LayerScope::layers(l.at(0).get<int>(), l.at(1).get<int>());
    }
  }
}

LayerScope parse_layer_scope(std::string_view text) {
  if (text == "all") return LayerScope::all();
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ConfigError("layer range must be 'all' or 'begin:end'");
  int begin = 0;
  int end = 0;
  const auto a = text.substr(0, colon);
  const auto b = text.substr(colon + 1);
  const auto ra = std::from_chars(a.data(), a.data() + a.size(), begin);
  const auto rb = std::from_chars(b.data(), b.data() + b.size(), end);
  if (ra.ec != std::errc{} || ra.ptr != a.data() + a.size() || rb.ec != std::errc{} ||
      rb.ptr != b.data() + b.size()) {
    throw ConfigError("layer range must be 'all' or 'begin:end' with integers");
  }
  return LayerScope::layers(begin, end);
}

}  // namespace cof
