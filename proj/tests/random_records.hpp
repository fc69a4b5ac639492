#pragma once

#include <cmath>
#include <string>

#include "cof/record.hpp"
#include "cof/rng.hpp"

namespace testing_util {

inline std::string random_text(cof::Rng& rng, std::size_t max_len) {
  static const char* const pieces[] = {"a", "b", "X", "0", "9", " ", "_", "-", "\"", "\\", "/", "{", "}",
                                       "[", "]", ",", ":", "\n", "\t", "\xc3\xa9", "\xe2\x82\xac"};
  std::string s;
  const std::size_t n = rng.below(max_len + 1);
  for (std::size_t i = 0; i < n; ++i) s += pieces[rng.below(std::size(pieces))];
  return s;
}

inline cof::NormBox random_box(cof::Rng& rng) {
  const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform(), d = rng.uniform();
  return {std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
}

// Arbitrary field values, including awkward strings and doubles.
inline cof::EvalRecord random_record(cof::Rng& rng) {
  cof::EvalRecord r;
  r.task_id = std::to_string(rng.below(100)) + "-" + random_text(rng, 8);
  r.variant = static_cast<cof::RunVariant>(rng.below(3));
  r.alpha = rng.uniform(0.5, 3.0);
  r.lambda = 1.0 + rng.uniform() * 30.0;
  r.seed = rng.next_u64();
  r.layer_scope = rng.below(2) ? "all" : std::to_string(rng.below(3)) + ":" + std::to_string(3 + rng.below(3));
  if (rng.below(2)) {
    r.raw_box = random_box(rng);
    r.expanded_box = cof::NormBox{-rng.uniform(), -rng.uniform(), 1 + rng.uniform(), 1 + rng.uniform()};
    r.clamped_box = random_box(rng);
    r.coord_convention = static_cast<cof::CoordConvention>(rng.below(3));
  }
  r.grounding_status = rng.below(2) ? "ok" : "no_box_found";
  r.fallback = rng.below(2) == 1;
  r.mask_cardinality = rng.below(1025);
  r.answer = random_text(rng, 12);
  r.gold_answer = random_text(rng, 6);
  r.correct = rng.below(2) == 1;
  const std::size_t layers = rng.below(5);
  for (std::size_t i = 0; i < layers; ++i) r.attention_mass_on_target.push_back(rng.uniform() * std::pow(10.0, -double(rng.below(12))));
  r.wall_time_ms = rng.uniform() * 1000.0;
  r.failed = rng.below(5) == 0;
  if (r.failed) r.error = random_text(rng, 30);
  return r;
}

}  // namespace testing_util
