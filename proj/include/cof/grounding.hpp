#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "cof/geometry.hpp"

namespace cof {

// Question placeholder recognised in grounding templates.
inline constexpr std::string_view kQuestionPlaceholder = "{question}";

// Stage-1 template: question first, then the grounding instruction.
inline constexpr std::string_view kDefaultGroundingTemplate =
    "{question} According to the information in the image and the question, detail the bounding box of the "
    "region in the image that contains the answer in JSON format.";

// The instruction part of the default template.
inline constexpr std::string_view kDefaultGroundingInstruction =
    "According to the information in the image and the question, detail the bounding box of the region in the "
    "image that contains the answer in JSON format.";

struct PromptBundle {
  std::string question;
  std::string grounding_prompt;  // the template with the placeholder removed
  std::string combined;
};

// Substitutes the question for every "{question}" (a bare "{q}" is accepted as
// shorthand) in the template. No other brace sequence is interpreted.
// Throws InvalidParameter on an empty question and TemplateError when the
// template has no placeholder.
PromptBundle build_grounding_prompt(std::string_view question,
                                    std::string_view tmpl = kDefaultGroundingTemplate);

enum class CoordConvention { normalized_unit, normalized_thousand, pixel };

std::string_view to_string(CoordConvention c);
std::optional<CoordConvention> coord_convention_from_string(std::string_view s);

enum class ParseStatus { ok, no_box_found, malformed_box };

std::string_view to_string(ParseStatus s);

struct GroundingResponse {
  std::string raw_text;
  std::optional<NormBox> parsed_box;
  std::optional<CoordConvention> coord_convention;
  ParseStatus status = ParseStatus::no_box_found;
  std::string diagnostic;

  bool ok() const { return status == ParseStatus::ok; }
};

// Finds the first JSON object or array in `raw` that carries four numbers
// (under "bbox" / "bounding_box", or as a bare 4-array), infers the coordinate
// convention and converts it to a NormBox with ordered corners.
//
// Convention inference, in order:
//   all values <= 1                                  -> normalized_unit
//   integer values inside the image (x <= w, y <= h) -> pixel
//   integer values <= 1000                           -> normalized_thousand
//   anything else                                    -> pixel
// Normalized values above 1 are clipped to 1; negative or non-finite values
// give malformed_box. `force` skips inference.
//
// Never throws for any input text; image_w / image_h < 1 throw InvalidParameter.
GroundingResponse parse_bbox_response(std::string_view raw, int image_w, int image_h,
                                      std::optional<CoordConvention> force = std::nullopt);

// '{"bbox": [x1, y1, x2, y2]}' with round-trip exact number formatting.
std::string format_bbox_json(const NormBox& box);

}  // namespace cof
