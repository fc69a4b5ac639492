#include "cof/toy_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>

#include "cof/errors.hpp"
#include "cof/rng.hpp"

namespace cof {

namespace {

void fill_gaussian(Matrix& m, Rng& rng, double stddev) {
  for (double& v : m.data()) v = rng.normal() * stddev;
}

std::vector<double> gaussian_vector(std::size_t n, Rng& rng, double mean, double stddev) {
  std::vector<double> v(n);
  for (double& x : v) x = mean + rng.normal() * stddev;
  return v;
}

std::vector<double> rms_norm(std::span<const double> x, std::span<const double> gain, double eps) {
  double ss = 0.0;
  for (double v : x) ss += v * v;
  const double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.size()) + eps);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * gain[i];
  return out;
}

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  }
  template <typename T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }
  void doubles(std::span<const double> v) { bytes(v.data(), v.size() * sizeof(double)); }
};

}  // namespace

void SyntheticImage::validate() const {
  grid.validate();
  const auto on_grid = [&](const PatchIndex& p) {
    return p.row >= 0 && p.row < grid.rows && p.col >= 0 && p.col < grid.cols;
  };
  if (!on_grid(target_patch)) throw InvalidParameter("synthetic image: target patch outside the grid");
  for (const auto& d : distractor_patches) {
    if (!on_grid(d)) throw InvalidParameter("synthetic image: distractor patch outside the grid");
    if (d == target_patch) throw InvalidParameter("synthetic image: target listed as a distractor");
  }
  if (patch_features.rows() != grid.size()) {
    throw InvalidParameter("synthetic image: expected one feature row per patch");
  }
  if (patch_pixels < 1) throw InvalidParameter("synthetic image: patch_pixels must be >= 1");
}

void ModelDims::validate() const {
  if (feature_dim < 1 || encoder_dim < 1 || model_dim < 1 || n_layers < 0 || n_heads < 1 || ffn_dim < 1 ||
      n_words < 1 || n_answers < 2) {
    throw InvalidParameter("model dims: every size must be positive (n_answers >= 2)");
  }
  if (model_dim % n_heads != 0) throw InvalidParameter("model dims: model_dim must be divisible by n_heads");
}

int Vocabulary::word_id(std::string_view w) const {
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i] == w) return static_cast<int>(i);
  }
  return 0;
}

std::optional<int> Vocabulary::answer_id(std::string_view a) const {
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (answers[i] == a) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::vector<int> Vocabulary::tokenize(std::string_view text) const {
  std::vector<int> ids;
  std::string word;
  const auto flush = [&] {
    if (!word.empty()) ids.push_back(word_id(word));
    word.clear();
  };
  for (char raw : text) {
    const auto ch = static_cast<unsigned char>(raw);
    if (std::isspace(ch)) {
      flush();
    } else if (raw == '?' || raw == '.' || raw == ',') {
      flush();
      ids.push_back(word_id(std::string(1, raw)));
    } else if (std::isalnum(ch) || raw == '-' || raw == '\'' || ch >= 0x80) {
      word.push_back(static_cast<char>(std::tolower(ch)));
    } else {
      flush();
    }
  }
  flush();
  return ids;
}

ModelWeights ModelWeights::random(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  Rng rng(seed);
  ModelWeights w;
  w.seed = seed;
  w.dims = dims;
  w.vocab.words.push_back("<unk>");
  for (int i = 1; i < dims.n_words; ++i) w.vocab.words.push_back("w" + std::to_string(i));
  for (int i = 0; i + 1 < dims.n_answers; ++i) w.vocab.answers.push_back("a" + std::to_string(i));
  w.vocab.answers.push_back("<eos>");
  w.vocab.eos_answer = dims.n_answers - 1;

  const auto d = static_cast<std::size_t>(dims.model_dim);
  const auto inner = static_cast<std::size_t>(dims.n_heads * dims.head_dim());
  const auto ff = static_cast<std::size_t>(dims.ffn_dim);

  w.encoder = Matrix(dims.encoder_dim, dims.feature_dim);
  fill_gaussian(w.encoder, rng, 1.0 / std::sqrt(dims.feature_dim));
  w.projector = Matrix(d, dims.encoder_dim);
  fill_gaussian(w.projector, rng, 1.0 / std::sqrt(dims.encoder_dim));
  w.projector_bias = gaussian_vector(d, rng, 0.0, 0.1);
  w.word_embeddings = Matrix(dims.n_words, d);
  fill_gaussian(w.word_embeddings, rng, 1.0);
  w.answer_embeddings = Matrix(dims.n_answers, d);
  fill_gaussian(w.answer_embeddings, rng, 1.0);

  const double s_in = 1.0 / std::sqrt(static_cast<double>(d));
  for (int l = 0; l < dims.n_layers; ++l) {
    LayerWeights lw;
    lw.attn_norm_gain = gaussian_vector(d, rng, 1.0, 0.1);
    lw.wq = Matrix(inner, d);
    lw.wk = Matrix(inner, d);
    lw.wv = Matrix(inner, d);
    lw.wo = Matrix(d, inner);
    fill_gaussian(lw.wq, rng, s_in);
    fill_gaussian(lw.wk, rng, s_in);
    fill_gaussian(lw.wv, rng, s_in);
    fill_gaussian(lw.wo, rng, 1.0 / std::sqrt(static_cast<double>(inner)));
    lw.ffn_norm_gain = gaussian_vector(d, rng, 1.0, 0.1);
    lw.w1 = Matrix(ff, d);
    fill_gaussian(lw.w1, rng, s_in);
    lw.b1 = gaussian_vector(ff, rng, 0.0, 0.1);
    lw.w2 = Matrix(d, ff);
    fill_gaussian(lw.w2, rng, 1.0 / std::sqrt(static_cast<double>(ff)));
    lw.b2 = gaussian_vector(d, rng, 0.0, 0.1);
    w.layers.push_back(std::move(lw));
  }
  w.final_norm_gain = gaussian_vector(d, rng, 1.0, 0.1);
  w.answer_head = Matrix(dims.n_answers, d);
  fill_gaussian(w.answer_head, rng, s_in);
  return w;
}

std::uint64_t ModelWeights::fingerprint() const {
  Fnv1a h;
  h.value(seed);
  for (int v : {dims.feature_dim, dims.encoder_dim, dims.model_dim, dims.n_layers, dims.n_heads, dims.ffn_dim,
                dims.n_words, dims.n_answers}) {
    h.value(v);
  }
  for (const auto& s : vocab.words) h.bytes(s.data(), s.size());
  for (const auto& s : vocab.answers) h.bytes(s.data(), s.size());
  h.doubles(encoder.data());
  h.doubles(projector.data());
  h.doubles(projector_bias);
  h.doubles(word_embeddings.data());
  h.doubles(answer_embeddings.data());
  for (const auto& l : layers) {
    h.doubles(l.attn_norm_gain);
    h.doubles(l.wq.data());
    h.doubles(l.wk.data());
    h.doubles(l.wv.data());
    h.doubles(l.wo.data());
    h.doubles(l.ffn_norm_gain);
    h.doubles(l.w1.data());
    h.doubles(l.b1);
    h.doubles(l.w2.data());
    h.doubles(l.b2);
  }
  h.doubles(final_norm_gain);
  h.doubles(answer_head.data());
  return h.h;
}

std::span<const double> TokenSequence::token(std::size_t i) const {
  return i < n_visual() ? visual.row(i) : text.row(i - n_visual());
}

std::vector<std::string> TokenSequence::labels() const {
  std::vector<std::string> out;
  out.reserve(size());
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) out.push_back("v" + std::to_string(r) + "_" + std::to_string(c));
  }
  for (std::size_t i = 0; i < n_text(); ++i) {
    const std::string& t = i < text_labels.size() ? text_labels[i] : std::string("?");
    // CSV-safe label
    std::string safe;
    for (char ch : t) safe.push_back(ch == ',' || ch == '"' ? '_' : ch);
    out.push_back("t" + std::to_string(i) + ":" + safe);
  }
  return out;
}

Matrix encode_image(const SyntheticImage& image, const ModelWeights& weights) {
  image.validate();
  if (image.patch_features.cols() != static_cast<std::size_t>(weights.dims.feature_dim)) {
    throw ShapeError("encode_image: feature width does not match the encoder");
  }
  Matrix out(image.grid.size(), weights.dims.encoder_dim);
  for (std::size_t p = 0; p < image.grid.size(); ++p) {
    const auto e = matvec(weights.encoder, image.patch_features.row(p));
    std::copy(e.begin(), e.end(), out.row(p).begin());
  }
  return out;
}

Matrix project(const Matrix& patch_embeddings, const ModelWeights& weights) {
  if (patch_embeddings.cols() != weights.projector.cols()) {
    throw ShapeError("project: embedding width " + std::to_string(patch_embeddings.cols()) +
                     " != projector input width " + std::to_string(weights.projector.cols()));
  }
  Matrix out(patch_embeddings.rows(), weights.projector.rows());
  for (std::size_t p = 0; p < patch_embeddings.rows(); ++p) {
    const auto y = matvec(weights.projector, patch_embeddings.row(p));
    auto row = out.row(p);
    for (std::size_t i = 0; i < y.size(); ++i) row[i] = y[i] + weights.projector_bias[i];
  }
  return out;
}

TokenSequence build_sequence(const SyntheticImage& image, std::string_view prompt, const ModelWeights& weights) {
  TokenSequence seq;
  seq.grid = image.grid;
  seq.visual = project(encode_image(image, weights), weights);
  seq.text = Matrix(0, weights.dims.model_dim);
  for (int id : weights.vocab.tokenize(prompt)) {
    seq.text.append_row(weights.word_embeddings.row(id));
    seq.text_labels.push_back(weights.vocab.words[id]);
  }
  return seq;
}

DecodeSession::DecodeSession(const ModelWeights& weights, std::optional<AttentionReweight> reweight)
    : weights_(&weights), reweight_(std::move(reweight)) {
  if (reweight_) {
    reweight_->params.validate();
    log_lambda_ = std::log(reweight_->params.lambda);
  }
  const auto inner = static_cast<std::size_t>(weights.dims.n_heads * weights.dims.head_dim());
  keys_.assign(weights.layers.size(), Matrix(0, inner));
  values_.assign(weights.layers.size(), Matrix(0, inner));
}

std::vector<double> DecodeSession::prefill(const TokenSequence& sequence, AttentionTrace* trace) {
  if (length_ != 0) throw InvalidParameter("decode session: prefill on a non-empty session");
  if (sequence.size() == 0) throw InvalidParameter("decode: empty token sequence");
  const auto d = static_cast<std::size_t>(weights_->dims.model_dim);
  if (sequence.visual.cols() != d && sequence.n_visual() > 0) throw ShapeError("decode: visual token width mismatch");
  if (sequence.text.cols() != d && sequence.n_text() > 0) throw ShapeError("decode: text token width mismatch");
  if (reweight_) {
    const auto& mask = reweight_->params.column_mask;
    for (std::size_t j = sequence.n_visual(); j < mask.size(); ++j) {
      if (mask[j]) throw InvalidParameter("decode: reweight column mask covers a text position");
    }
  }
  Matrix x(sequence.size(), d);
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const auto t = sequence.token(i);
    std::copy(t.begin(), t.end(), x.row(i).begin());
  }
  return forward(x, trace);
}

std::vector<double> DecodeSession::step(std::span<const double> embedding, AttentionTrace* trace) {
  if (length_ == 0) throw InvalidParameter("decode session: step before prefill");
  Matrix x(0, weights_->dims.model_dim);
  x.append_row(embedding);
  return forward(x, trace);
}

std::vector<double> DecodeSession::forward(const Matrix& x_in, AttentionTrace* trace) {
  const ModelWeights& w = *weights_;
  const std::size_t m = x_in.rows();
  const std::size_t d = static_cast<std::size_t>(w.dims.model_dim);
  const std::size_t n_heads = static_cast<std::size_t>(w.dims.n_heads);
  const std::size_t hd = static_cast<std::size_t>(w.dims.head_dim());
  const std::size_t total = length_ + m;
  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));

  if (trace) trace->probs.assign(w.layers.size(), std::vector<Matrix>(n_heads, Matrix(m, total)));

  Matrix x = x_in;
  std::vector<double> scores(total);
  std::vector<double> probs(total);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const LayerWeights& lw = w.layers[l];
    const bool reweighted = reweight_ && reweight_->layers.contains(static_cast<int>(l));
    const std::vector<bool>* mask = reweighted ? &reweight_->params.column_mask : nullptr;

    std::vector<std::vector<double>> queries(m);
    for (std::size_t i = 0; i < m; ++i) {
      const auto h = rms_norm(x.row(i), lw.attn_norm_gain, w.norm_eps);
      queries[i] = matvec(lw.wq, h);
      keys_[l].append_row(matvec(lw.wk, h));
      values_[l].append_row(matvec(lw.wv, h));
    }

    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t n_visible = length_ + i + 1;
      std::vector<double> concat(n_heads * hd, 0.0);
      for (std::size_t head = 0; head < n_heads; ++head) {
        const std::size_t off = head * hd;
        const std::span<const double> q(queries[i].data() + off, hd);
        for (std::size_t j = 0; j < n_visible; ++j) {
          scores[j] = dot(q, keys_[l].row(j).subspan(off, hd)) * inv_sqrt_hd;
        }
        const std::span<double> p(probs.data(), n_visible);
        reweighted_softmax_row(std::span<const double>(scores.data(), n_visible), p, mask, log_lambda_);
        for (std::size_t j = 0; j < n_visible; ++j) {
          const auto v = values_[l].row(j).subspan(off, hd);
          for (std::size_t k = 0; k < hd; ++k) concat[off + k] += p[j] * v[k];
        }
        if (trace) std::copy(p.begin(), p.end(), trace->probs[l][head].row(i).begin());
      }
      const auto attn_out = matvec(lw.wo, concat);
      auto xi = x.row(i);
      for (std::size_t k = 0; k < d; ++k) xi[k] += attn_out[k];

      const auto h2 = rms_norm(xi, lw.ffn_norm_gain, w.norm_eps);
      auto hidden = matvec(lw.w1, h2);
      for (std::size_t k = 0; k < hidden.size(); ++k) hidden[k] = std::max(0.0, hidden[k] + lw.b1[k]);
      const auto ffn_out = matvec(lw.w2, hidden);
      for (std::size_t k = 0; k < d; ++k) xi[k] += ffn_out[k] + lw.b2[k];
    }
  }
  length_ = total;

  const auto h = rms_norm(x.row(m - 1), w.final_norm_gain, w.norm_eps);
  return matvec(w.answer_head, h);
}

std::vector<double> decode_step(const TokenSequence& sequence, const ModelWeights& weights,
                                const std::optional<AttentionReweight>& reweight, AttentionTrace* trace) {
  DecodeSession session(weights, reweight);
  return session.prefill(sequence, trace);
}

Generation generate(const TokenSequence& sequence, const ModelWeights& weights,
                    const std::optional<AttentionReweight>& reweight, int max_tokens) {
  if (max_tokens < 1) throw InvalidParameter("generate: max_tokens must be >= 1");
  Generation out;
  DecodeSession session(weights, reweight);
  std::vector<double> logits = session.prefill(sequence, &out.first_trace);
  out.first_logits = logits;
  for (int t = 0; t < max_tokens; ++t) {
    const auto best = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == weights.vocab.eos_answer) break;
    out.tokens.push_back(best);
    if (!out.text.empty()) out.text.push_back(' ');
    out.text += weights.vocab.answers[best];
    if (t + 1 == max_tokens) break;
    logits = session.step(weights.answer_embeddings.row(best));
  }
  return out;
}

std::vector<double> attention_mass_per_layer(const AttentionTrace& trace, std::span<const std::size_t> columns) {
  std::vector<double> out;
  out.reserve(trace.probs.size());
  for (const auto& heads : trace.probs) {
    double acc = 0.0;
    for (const Matrix& p : heads) {
      const auto last = p.row(p.rows() - 1);
      for (std::size_t c : columns) acc += last[c];
    }
    out.push_back(heads.empty() ? 0.0 : acc / static_cast<double>(heads.size()));
  }
  return out;
}

std::string_view to_string(GroundingNoiseMode m) {
  switch (m) {
    case GroundingNoiseMode::exact:
      return "exact";
    case GroundingNoiseMode::perturbed:
      return "perturbed";
    case GroundingNoiseMode::refusal:
      return "refusal";
  }
  return "unknown";
}

std::optional<GroundingNoiseMode> grounding_noise_mode_from_string(std::string_view s) {
  for (auto m : {GroundingNoiseMode::exact, GroundingNoiseMode::perturbed, GroundingNoiseMode::refusal}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

std::string toy_ground_text(const SyntheticImage& image, const GroundingNoise& noise) {
  image.validate();
  if (noise.mode == GroundingNoiseMode::refusal) {
    return "I cannot determine the location of the answer in this image.";
  }
  NormBox box = image.grid.patch_rect(image.target_patch.row, image.target_patch.col);
  if (noise.mode == GroundingNoiseMode::perturbed) {
    if (!std::isfinite(noise.scale) || noise.scale <= 0.0) {
      throw InvalidParameter("grounding noise: scale must be finite and > 0");
    }
    box = expand_box(box, noise.scale);
    double dx = noise.offset_x;
    double dy = noise.offset_y;
    if (noise.jitter > 0.0) {
      Rng rng(noise.seed * 0x9E3779B97F4A7C15ull + image.target_index());
      dx += rng.uniform(-noise.jitter, noise.jitter);
      dy += rng.uniform(-noise.jitter, noise.jitter);
    }
    box = clamp_box({box.x1 + dx, box.y1 + dy, box.x2 + dx, box.y2 + dy});
  }
  return format_bbox_json(box);
}

GroundingResponse toy_ground(const SyntheticImage& image, std::string_view /*question*/,
                             const ModelWeights& /*weights*/, const GroundingNoise& noise) {
  return parse_bbox_response(toy_ground_text(image, noise), image.pixel_width(), image.pixel_height());
}

}  // namespace cof
