#include "cof/grounding.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "json.hpp"

#include "cof/errors.hpp"

namespace cof {

namespace {

using nlohmann::json;

constexpr std::string_view kShortPlaceholder = "{q}";

// Bound on candidate spans so adversarial inputs stay linear-ish.
constexpr std::size_t kMaxCandidateLength = 4096;
constexpr int kMaxSearchDepth = 8;

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// End (exclusive) of the balanced bracket group opening at `start`, honouring
// JSON string literals. npos when unbalanced.
std::size_t balanced_end(std::string_view text, std::size_t start) {
  std::vector<char> stack;
  bool in_string = false;
  bool escaped = false;
  const std::size_t limit = std::min(text.size(), start + kMaxCandidateLength);
  for (std::size_t i = start; i < limit; ++i) {
    const char ch = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (ch == '\\') {
        escaped = true;
      } else if (ch == '"') {
        in_string = false;
      }
      continue;
    }
    switch (ch) {
      case '"':
        in_string = true;
        break;
      case '{':
        stack.push_back('}');
        break;
      case '[':
        stack.push_back(']');
        break;
      case '}':
      case ']':
        if (stack.empty() || stack.back() != ch) return std::string_view::npos;
        stack.pop_back();
        if (stack.empty()) return i + 1;
        break;
      default:
        break;
    }
  }
  return std::string_view::npos;
}

std::optional<std::array<double, 4>> four_numbers(const json& j) {
  if (!j.is_array() || j.size() != 4) return std::nullopt;
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number()) return std::nullopt;
    out[i] = j[i].get<double>();
  }
  return out;
}

// Depth-first search for the first box-shaped value.
std::optional<std::array<double, 4>> find_box(const json& j, int depth) {
  if (depth > kMaxSearchDepth) return std::nullopt;
  if (auto direct = four_numbers(j)) return direct;
  if (j.is_object()) {
    for (const char* key : {"bbox", "bounding_box"}) {
      const auto it = j.find(key);
      if (it != j.end()) {
        if (auto box = four_numbers(*it)) return box;
      }
    }
    for (const auto& [key, value] : j.items()) {
      if (value.is_structured()) {
        if (auto box = find_box(value, depth + 1)) return box;
      }
    }
  } else if (j.is_array()) {
    for (const auto& value : j) {
      if (value.is_structured()) {
        if (auto box = find_box(value, depth + 1)) return box;
      }
    }
  }
  return std::nullopt;
}

std::optional<std::array<double, 4>> first_candidate(std::string_view raw) {
  for (std::size_t pos = 0; pos < raw.size(); ++pos) {
    if (raw[pos] != '{' && raw[pos] != '[') continue;
    const std::size_t end = balanced_end(raw, pos);
    if (end == std::string_view::npos) continue;
    const json parsed = json::parse(raw.substr(pos, end - pos), nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) continue;
    if (auto box = find_box(parsed, 0)) return box;
  }
  return std::nullopt;
}

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

CoordConvention infer_convention(const std::array<double, 4>& v, int image_w, int image_h) {
  bool all_unit = true;
  bool all_integral = true;
  bool all_thousand = true;
  for (double x : v) {
    all_unit = all_unit && x <= 1.0;
    all_integral = all_integral && is_integral(x);
    all_thousand = all_thousand && x <= 1000.0;
  }
  if (all_unit) return CoordConvention::normalized_unit;
  const bool fits_image = v[0] <= image_w && v[2] <= image_w && v[1] <= image_h && v[3] <= image_h;
  if (all_integral && fits_image) return CoordConvention::pixel;
  if (all_integral && all_thousand) return CoordConvention::normalized_thousand;
  return CoordConvention::pixel;
}

}  // namespace

PromptBundle build_grounding_prompt(std::string_view question, std::string_view tmpl) {
  if (trim(question).empty()) throw InvalidParameter("grounding prompt: question must be nonempty");

  std::string combined;
  std::string instruction;
  bool found = false;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const std::string_view rest = tmpl.substr(i);
    std::size_t len = 0;
    if (rest.starts_with(kQuestionPlaceholder)) {
      len = kQuestionPlaceholder.size();
    } else if (rest.starts_with(kShortPlaceholder)) {
      len = kShortPlaceholder.size();
    }
    if (len > 0) {
      combined.append(question);
      found = true;
      i += len;
    } else {
      combined.push_back(tmpl[i]);
      instruction.push_back(tmpl[i]);
      ++i;
    }
  }
  if (!found) {
    throw TemplateError("grounding template has no question placeholder (expected \"{question}\" or \"{q}\")");
  }
  return {std::string(question), std::string(trim(instruction)), std::move(combined)};
}

std::string_view to_string(CoordConvention c) {
  switch (c) {
    case CoordConvention::normalized_unit:
      return "normalized_unit";
    case CoordConvention::normalized_thousand:
      return "normalized_thousand";
    case CoordConvention::pixel:
      return "pixel";
  }
  return "unknown";
}

std::optional<CoordConvention> coord_convention_from_string(std::string_view s) {
  for (auto c : {CoordConvention::normalized_unit, CoordConvention::normalized_thousand, CoordConvention::pixel}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

std::string_view to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::ok:
      return "ok";
    case ParseStatus::no_box_found:
      return "no_box_found";
    case ParseStatus::malformed_box:
      return "malformed_box";
  }
  return "unknown";
}

GroundingResponse parse_bbox_response(std::string_view raw, int image_w, int image_h,
                                      std::optional<CoordConvention> force) {
  if (image_w < 1 || image_h < 1) throw InvalidParameter("parse_bbox_response: image size must be >= 1x1");

  GroundingResponse resp;
  resp.raw_text = std::string(raw);

  const auto candidate = first_candidate(raw);
  if (!candidate) {
    resp.status = ParseStatus::no_box_found;
    resp.diagnostic = "no JSON object or array with four numbers found";
    return resp;
  }

  auto v = *candidate;
  for (double x : v) {
    if (!std::isfinite(x)) {
      resp.status = ParseStatus::malformed_box;
      resp.diagnostic = "box has non-finite coordinates";
      return resp;
    }
  }

  const CoordConvention conv = force.value_or(infer_convention(v, image_w, image_h));
  resp.coord_convention = conv;
  switch (conv) {
    case CoordConvention::normalized_unit:
      break;
    case CoordConvention::normalized_thousand:
      for (double& x : v) x /= 1000.0;
      break;
    case CoordConvention::pixel:
      v[0] /= image_w;
      v[2] /= image_w;
      v[1] /= image_h;
      v[3] /= image_h;
      break;
  }

  for (double x : v) {
    if (x < 0.0) {
      resp.status = ParseStatus::malformed_box;
      resp.diagnostic = "box has negative coordinates after normalization";
      return resp;
    }
  }
  for (double& x : v) x = std::min(x, 1.0);

  NormBox box{std::min(v[0], v[2]), std::min(v[1], v[3]), std::max(v[0], v[2]), std::max(v[1], v[3])};
  resp.parsed_box = box;
  resp.status = ParseStatus::ok;
  return resp;
}

std::string format_bbox_json(const NormBox& box) {
  return "{\"bbox\": [" + json(box.x1).dump() + ", " + json(box.y1).dump() + ", " + json(box.x2).dump() + ", " +
         json(box.y2).dump() + "]}";
}

}  // namespace cof
