#pragma once

// Minimal multimodal decoder: linear patch encoder, affine projector into the
// decoder embedding space, and a pre-norm (RMSNorm) multi-head transformer
// whose answer head scores the final hidden state against per-answer
// embeddings. There is no positional encoding; order enters only through the
// causal mask.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cof/attention.hpp"
#include "cof/geometry.hpp"
#include "cof/grounding.hpp"
#include "cof/matrix.hpp"

namespace cof {

inline constexpr std::array<std::string_view, 8> kColorNames = {"red",    "green",  "blue",  "yellow",
                                                                 "purple", "orange", "white", "black"};
inline constexpr int kNumColors = static_cast<int>(kColorNames.size());

// Patch feature layout used by the synthetic images: one-hot color, salience,
// objectness.
inline constexpr int kFeatureSalience = kNumColors;
inline constexpr int kFeatureObjectness = kNumColors + 1;
inline constexpr int kFeatureDim = kNumColors + 2;

struct PatchIndex {
  int row = 0;
  int col = 0;

  bool operator==(const PatchIndex&) const = default;
};

struct SyntheticImage {
  PatchGrid grid{4, 4};
  int patch_pixels = 14;
  Matrix patch_features;  // grid.size() x feature dim, row-major patches
  PatchIndex target_patch;
  std::vector<PatchIndex> distractor_patches;

  int pixel_width() const { return grid.cols * patch_pixels; }
  int pixel_height() const { return grid.rows * patch_pixels; }
  std::size_t target_index() const { return grid.index(target_patch.row, target_patch.col); }

  // Throws InvalidParameter when the target is off-grid, listed as a
  // distractor, or the feature matrix has the wrong row count.
  void validate() const;

  bool operator==(const SyntheticImage&) const = default;
};

struct ModelDims {
  int feature_dim = kFeatureDim;
  int encoder_dim = 16;
  int model_dim = 64;
  int n_layers = 2;
  int n_heads = 4;
  int ffn_dim = 64;
  int n_words = 32;
  int n_answers = kNumColors + 3;

  int head_dim() const { return model_dim / n_heads; }
  void validate() const;

  bool operator==(const ModelDims&) const = default;
};

// Question-word and answer-token vocabularies. Answers are emitted by the
// answer head and, once generated, fed back through their own input table.
struct Vocabulary {
  std::vector<std::string> words;    // index 0 is the unknown word
  std::vector<std::string> answers;  // includes the end token
  int eos_answer = -1;

  int word_id(std::string_view w) const;
  std::optional<int> answer_id(std::string_view a) const;
  // Lowercases, splits on whitespace, keeps '?', '.', ',' as tokens, drops
  // other punctuation; unknown words map to id 0.
  std::vector<int> tokenize(std::string_view text) const;
};

struct LayerWeights {
  std::vector<double> attn_norm_gain;
  Matrix wq, wk, wv;  // (n_heads * head_dim) x model_dim
  Matrix wo;          // model_dim x (n_heads * head_dim)
  std::vector<double> ffn_norm_gain;
  Matrix w1;  // ffn_dim x model_dim
  std::vector<double> b1;
  Matrix w2;  // model_dim x ffn_dim
  std::vector<double> b2;
};

struct ModelWeights {
  std::uint64_t seed = 0;
  ModelDims dims;
  Vocabulary vocab;
  Matrix encoder;  // encoder_dim x feature_dim
  Matrix projector;  // model_dim x encoder_dim
  std::vector<double> projector_bias;
  Matrix word_embeddings;  // n_words x model_dim
  Matrix answer_embeddings;  // n_answers x model_dim, input side
  std::vector<LayerWeights> layers;
  std::vector<double> final_norm_gain;
  Matrix answer_head;  // n_answers x model_dim
  double norm_eps = 1e-6;

  // Dense Gaussian initialisation of every tensor from the seed.
  static ModelWeights random(const ModelDims& dims, std::uint64_t seed);

  // The model used by the synthetic benchmark: two layers, four heads, width
  // 64, whose heads read patch color, salience and question words through
  // fixed channel groups. Seeded parts: color basis, encoder rotation, word
  // identities and the feed-forward blocks.
  static ModelWeights task_model(std::uint64_t seed);

  // FNV-1a over the dims, seed and every tensor.
  std::uint64_t fingerprint() const;
};

// Visual tokens e_v first (row-major grid order), then text tokens e_t.
struct TokenSequence {
  PatchGrid grid;
  Matrix visual;  // grid.size() x model_dim
  Matrix text;    // n_text x model_dim
  std::vector<std::string> text_labels;

  std::size_t n_visual() const { return visual.rows(); }
  std::size_t n_text() const { return text.rows(); }
  std::size_t size() const { return n_visual() + n_text(); }
  TokenLayout layout() const { return {grid, n_text()}; }
  std::span<const double> token(std::size_t i) const;
  std::vector<std::string> labels() const;
};

// One row per patch: encoder * features.
Matrix encode_image(const SyntheticImage& image, const ModelWeights& weights);
// Affine map of patch embeddings into the decoder space.
Matrix project(const Matrix& patch_embeddings, const ModelWeights& weights);
TokenSequence build_sequence(const SyntheticImage& image, std::string_view prompt, const ModelWeights& weights);

// Reweighting applied inside the decoder. column_mask covers the visual prefix;
// key positions past its end are unmasked.
struct AttentionReweight {
  ReweightParams params;
  LayerScope layers;
};

// Post-softmax attention captured during a forward call: probs[layer][head]
// has one row per query position processed in that call.
struct AttentionTrace {
  std::vector<std::vector<Matrix>> probs;
};

// Incremental decoder state (KV cache) for one generation.
class DecodeSession {
 public:
  DecodeSession(const ModelWeights& weights, std::optional<AttentionReweight> reweight);

  // Runs the whole sequence and returns the answer logits at its last position.
  std::vector<double> prefill(const TokenSequence& sequence, AttentionTrace* trace = nullptr);
  // Appends one token embedding and returns the logits at the new position.
  std::vector<double> step(std::span<const double> embedding, AttentionTrace* trace = nullptr);

  std::size_t length() const { return length_; }

 private:
  std::vector<double> forward(const Matrix& x, AttentionTrace* trace);

  const ModelWeights* weights_;
  std::optional<AttentionReweight> reweight_;
  double log_lambda_ = 0.0;
  std::vector<Matrix> keys_;    // per layer
  std::vector<Matrix> values_;  // per layer
  std::size_t length_ = 0;
};

// Logits over the answer vocabulary at the last position of the sequence.
std::vector<double> decode_step(const TokenSequence& sequence, const ModelWeights& weights,
                                const std::optional<AttentionReweight>& reweight, AttentionTrace* trace = nullptr);

struct Generation {
  std::vector<int> tokens;  // answer ids, end token excluded
  std::string text;         // tokens joined by spaces
  std::vector<double> first_logits;
  AttentionTrace first_trace;  // attention of the step that produced the first token
};

// Greedy decoding; stops at the end token or after max_tokens tokens.
Generation generate(const TokenSequence& sequence, const ModelWeights& weights,
                    const std::optional<AttentionReweight>& reweight, int max_tokens);

// Attention the last query row puts on `columns`, averaged over heads, per layer.
std::vector<double> attention_mass_per_layer(const AttentionTrace& trace, std::span<const std::size_t> columns);

enum class GroundingNoiseMode { exact, perturbed, refusal };

std::string_view to_string(GroundingNoiseMode m);
std::optional<GroundingNoiseMode> grounding_noise_mode_from_string(std::string_view s);

// Perturbation applied by the grounding stub. perturbed: the target rectangle
// is scaled about its center, shifted by (offset_x, offset_y) plus uniform
// jitter in [-jitter, jitter] drawn from (seed, target), then shifted back into
// the image. refusal: no box at all.
struct GroundingNoise {
  GroundingNoiseMode mode = GroundingNoiseMode::exact;
  double offset_x = 0.0;
  double offset_y = 0.0;
  double scale = 1.0;
  double jitter = 0.0;
  std::uint64_t seed = 0;
};

// Text the grounding stub answers with for this image.
std::string toy_ground_text(const SyntheticImage& image, const GroundingNoise& noise);

// Stage-1 grounding stand-in: reports the target patch rectangle (after noise)
// as '{"bbox": [...]}' text and parses it back with parse_bbox_response.
GroundingResponse toy_ground(const SyntheticImage& image, std::string_view question, const ModelWeights& weights,
                             const GroundingNoise& noise);

}  // namespace cof
