#include "cof/pipeline.hpp"

#include <chrono>
#include <cstdio>

#include "cof/errors.hpp"

namespace cof {

namespace {

template <typename Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const CapabilityMissing& e) {
    throw CapabilityMissing(std::string(stage) + ": " + e.what());
  } catch (const TransportError& e) {
    throw TransportError(std::string(stage) + ": " + e.what());
  }
}

void require(const Capabilities& caps, RunVariant variant) {
  const bool ok = variant == RunVariant::baseline          ? caps.generate
                  : variant == RunVariant::reweight_global ? caps.generate_with_mask
                                                           : caps.all();
  if (!ok) throw CapabilityMissing("backend lacks the capabilities required by variant " +
                                   std::string(to_string(variant)));
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

void fill_config(EvalRecord& rec, RunVariant variant, const CoFConfig& config) {
  rec.variant = variant;
  rec.alpha = config.alpha;
  rec.lambda = config.lambda;
  rec.layer_scope = config.layer_scope.to_string();
}

}  // namespace

ImageRef ImageRef::of(const SyntheticImage& image, std::string id) {
  return {std::move(id), image.grid, image.pixel_width(), image.pixel_height(), &image};
}

ToyBackend::ToyBackend(std::shared_ptr<const ModelWeights> weights, GroundingNoise noise, int max_tokens)
    : weights_(std::move(weights)), noise_(noise), max_tokens_(max_tokens) {
  if (!weights_) throw InvalidParameter("toy backend: null weights");
  if (max_tokens_ < 1) throw InvalidParameter("toy backend: max_tokens must be >= 1");
}

std::string ToyBackend::config_hash() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(weights_->fingerprint()));
  return buf;
}

std::string ToyBackend::ground(const ImageRef& image, const std::string& /*prompt*/) {
  if (!image.pixels) throw InvalidParameter("toy backend: image '" + image.id + "' has no pixel data");
  return toy_ground_text(*image.pixels, noise_);
}

BackendOutput ToyBackend::run(const ImageRef& image, const std::string& prompt,
                              const std::optional<AttentionReweight>& rw) {
  if (!image.pixels) throw InvalidParameter("toy backend: image '" + image.id + "' has no pixel data");
  const TokenSequence seq = build_sequence(*image.pixels, prompt, *weights_);
  const Generation gen = ::cof::generate(seq, *weights_, rw, max_tokens_);
  const std::size_t target = image.pixels->target_index();
  return {gen.text, attention_mass_per_layer(gen.first_trace, std::span<const std::size_t>(&target, 1))};
}

BackendOutput ToyBackend::generate(const ImageRef& image, const std::string& prompt) {
  return run(image, prompt, std::nullopt);
}

BackendOutput ToyBackend::generate_with_mask(const ImageRef& image, const std::string& prompt, const TokenMask& mask,
                                             double lambda, const LayerScope& layers) {
  if (!(mask.grid() == image.grid)) throw ShapeError("toy backend: mask grid does not match the image grid");
  AttentionReweight rw{{lambda, mask.bits()}, layers};
  return run(image, prompt, rw);
}

CofPlan plan_cof(Backend& backend, const ImageRef& image, const std::string& question, const CoFConfig& config,
                 const PipelineOptions& options) {
  config.validate();
  CofPlan plan;
  plan.prompt = build_grounding_prompt(question, options.grounding_template);
  const std::string raw =
      in_stage("stage 1 (grounding)", [&] { return backend.ground(image, plan.prompt.combined); });
  plan.grounding = parse_bbox_response(raw, image.width_px, image.height_px);

  NormBox source = NormBox::full_image();
  if (plan.grounding.ok()) {
    plan.raw_box = plan.grounding.parsed_box;
    source = *plan.raw_box;
  } else {
    plan.fallback = true;
  }
  plan.expanded_box = expand_box(source, config.alpha);
  plan.clamped_box = clamp_box(plan.expanded_box);
  plan.mask = box_to_mask(plan.clamped_box, image.grid);
  return plan;
}

EvalRecord run_cof(Backend& backend, const ImageRef& image, const std::string& question, const CoFConfig& config,
                   const PipelineOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  require(backend.capabilities(), RunVariant::cof);
  const CofPlan plan = plan_cof(backend, image, question, config, options);

  const std::string answer_prompt =
      options.stage2_includes_grounding_prompt ? plan.prompt.combined : plan.prompt.question;
  const BackendOutput out = in_stage("stage 2 (answer)", [&] {
    return backend.generate_with_mask(image, answer_prompt, plan.mask, config.lambda, config.layer_scope);
  });

  EvalRecord rec;
  fill_config(rec, RunVariant::cof, config);
  rec.raw_box = plan.raw_box;
  rec.expanded_box = plan.expanded_box;
  rec.clamped_box = plan.clamped_box;
  rec.coord_convention = plan.grounding.coord_convention;
  rec.grounding_status = std::string(to_string(plan.grounding.status));
  rec.fallback = plan.fallback;
  rec.mask_cardinality = plan.mask.cardinality();
  rec.answer = out.text;
  rec.attention_mass_on_target = out.target_mass_per_layer;
  rec.wall_time_ms = elapsed_ms(start);
  return rec;
}

EvalRecord run_variant(Backend& backend, const ImageRef& image, const std::string& question, RunVariant variant,
                       const CoFConfig& config, const PipelineOptions& options) {
  if (variant == RunVariant::cof) return run_cof(backend, image, question, config, options);

  config.validate();
  require(backend.capabilities(), variant);
  const auto start = std::chrono::steady_clock::now();
  EvalRecord rec;
  fill_config(rec, variant, config);
  BackendOutput out;
  if (variant == RunVariant::baseline) {
    out = in_stage("answer", [&] { return backend.generate(image, question); });
  } else {
    const TokenMask all = TokenMask::full(image.grid);
    rec.mask_cardinality = all.cardinality();
    out = in_stage("answer", [&] {
      return backend.generate_with_mask(image, question, all, config.lambda, config.layer_scope);
    });
  }
  rec.answer = out.text;
  rec.attention_mass_on_target = out.target_mass_per_layer;
  rec.wall_time_ms = elapsed_ms(start);
  return rec;
}

}  // namespace cof
