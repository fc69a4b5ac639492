#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cof/attention.hpp"
#include "cof/geometry.hpp"
#include "cof/grounding.hpp"
#include "cof/record.hpp"
#include "cof/toy_model.hpp"

namespace cof {

struct Capabilities {
  bool ground = false;
  bool generate = false;
  bool generate_with_mask = false;

  bool all() const { return ground && generate && generate_with_mask; }
};

// What a backend needs to know about an image. Remote backends resolve `id`
// in their own registry; the toy backend needs `pixels`.
struct ImageRef {
  std::string id;
  PatchGrid grid;
  int width_px = 1;
  int height_px = 1;
  const SyntheticImage* pixels = nullptr;

  static ImageRef of(const SyntheticImage& image, std::string id);
};

struct BackendOutput {
  std::string text;
  // Head-averaged attention of the answering position on the target patch,
  // per layer. Empty when the backend cannot observe it.
  std::vector<double> target_mass_per_layer;
};

// Model backend shared by the toy decoder and the remote server client.
// Every implementation must return generate()'s output from
// generate_with_mask(..., lambda = 1).
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string name() const = 0;
  virtual std::string config_hash() const = 0;
  virtual Capabilities capabilities() const = 0;

  // Stage-1 call: raw text of the grounding answer.
  virtual std::string ground(const ImageRef& image, const std::string& prompt) = 0;
  virtual BackendOutput generate(const ImageRef& image, const std::string& prompt) = 0;
  virtual BackendOutput generate_with_mask(const ImageRef& image, const std::string& prompt, const TokenMask& mask,
                                           double lambda, const LayerScope& layers) = 0;
};

class ToyBackend final : public Backend {
 public:
  ToyBackend(std::shared_ptr<const ModelWeights> weights, GroundingNoise noise = {}, int max_tokens = 4);

  std::string name() const override { return "toy"; }
  std::string config_hash() const override;
  Capabilities capabilities() const override { return {true, true, true}; }

  std::string ground(const ImageRef& image, const std::string& prompt) override;
  BackendOutput generate(const ImageRef& image, const std::string& prompt) override;
  BackendOutput generate_with_mask(const ImageRef& image, const std::string& prompt, const TokenMask& mask,
                                   double lambda, const LayerScope& layers) override;

  const ModelWeights& weights() const { return *weights_; }
  const GroundingNoise& noise() const { return noise_; }

 private:
  BackendOutput run(const ImageRef& image, const std::string& prompt, const std::optional<AttentionReweight>& rw);

  std::shared_ptr<const ModelWeights> weights_;
  GroundingNoise noise_;
  int max_tokens_;
};

struct PipelineOptions {
  std::string grounding_template = std::string(kDefaultGroundingTemplate);
  // Send the grounding instruction in the answer pass too (default: question only).
  bool stage2_includes_grounding_prompt = false;
};

// Stages 1-4 of a grounded run: grounding call, parse, expand + clamp, mask.
struct CofPlan {
  PromptBundle prompt;
  GroundingResponse grounding;
  std::optional<NormBox> raw_box;  // empty when the full-image fallback was used
  NormBox expanded_box;
  NormBox clamped_box;
  bool fallback = false;
  TokenMask mask;
};

CofPlan plan_cof(Backend& backend, const ImageRef& image, const std::string& question, const CoFConfig& config,
                 const PipelineOptions& options = {});

// Full grounded run: plan_cof followed by the reweighted answer pass. Fills
// the variant-independent fields of the record (no task id or gold answer).
// Backend transport errors are rethrown with the stage named.
EvalRecord run_cof(Backend& backend, const ImageRef& image, const std::string& question, const CoFConfig& config,
                   const PipelineOptions& options = {});

// baseline: plain generate. reweight_global: all-ones mask with lambda.
// cof: run_cof.
EvalRecord run_variant(Backend& backend, const ImageRef& image, const std::string& question, RunVariant variant,
                       const CoFConfig& config, const PipelineOptions& options = {});

}  // namespace cof
