// Weights of the synthetic-benchmark decoder.
//
// The residual stream is split into channel groups so that each head has one
// job and the answer can be read off the final hidden state:
//
//   COLOR   patch color (visual tokens only; never written by a layer)
//   GATHER  color mixture collected by the gatherer heads
//   ASK     color named in a question word
//   ASK2    ASK collected from the question by the reader head
//   SAL     patch salience          VIS / TXT   token-role constants
//   PROBE / ATTR    question-type flags ("there" / "color"), and their
//   PROBE2 / ATTR2  copies collected by the reader head
//   YES     visual evidence written by the searcher head
//   DONE    set on answer tokens fed back during generation
//   IDENT   seeded per-word identity noise, touched only by the FFNs
//
// Heads per layer: 0, 1 gather color weighted by salience; 2 reads the
// question; 3 gathers in layer 0 and, in layer 1, searches the image for the
// asked color. Query/key projections only read channels no layer writes
// (except ASK2 for the searcher), so reweighting one layer barely moves the
// scores of the next.

#include <cmath>

#include "cof/errors.hpp"
#include "cof/rng.hpp"
#include "cof/toy_model.hpp"

namespace cof {

namespace {

constexpr int kModelDim = 64;
constexpr int kEncoderDim = 16;
constexpr int kHeads = 4;
constexpr int kHeadDim = kModelDim / kHeads;

constexpr int COLOR = 0;
constexpr int GATHER = 8;
constexpr int ASK = 16;
constexpr int ASK2 = 24;
constexpr int SAL = 32;
constexpr int VIS = 33;
constexpr int TXT = 34;
constexpr int PROBE = 35;
constexpr int ATTR = 36;
constexpr int PROBE2 = 37;
constexpr int ATTR2 = 38;
constexpr int YES = 39;
constexpr int DONE = 40;
constexpr int IDENT = 41;
constexpr int kIdentDim = kModelDim - IDENT;

// Embedding magnitudes.
constexpr double kRoleScale = 6.0;
constexpr double kColorScale = 1.5;
constexpr double kFlagScale = 3.0;
constexpr double kAskScale = 3.0;
constexpr double kDoneScale = 4.0;
constexpr double kIdentStd = 0.3;

// Head gains.
constexpr double kGatherQuery[3] = {1.0, 1.2, 0.9};
constexpr double kGatherTextKey = 0.035;
constexpr double kGatherOut = 1.0;
constexpr double kReaderKey = 0.22;
constexpr double kReaderOut = 4.0;
constexpr double kSearchQuery = 8.0;
constexpr double kSearchTextKey = 0.15;
constexpr double kSearchVisualKey = -0.15;
constexpr double kSearchOut = 0.25;

// Answer head gains.
constexpr double kAnswerColor = 1.0;
constexpr double kAnswerColorProbePenalty = 5.0;
constexpr double kAnswerYes = 3.0;
constexpr double kAnswerYesAttrPenalty = 4.0;
constexpr double kAnswerNo = 0.35;
constexpr double kAnswerEos = 3.0;

constexpr double kFfnStd = 0.05;

const char* const kWords[] = {"<unk>", "what", "color", "colour", "is",  "the",    "object", "there",
                              "a",     "an",   "in",    "image",  "region", "highlighted", "of", "this",
                              "any",   "?",    ".",     ","};

// Rows of a seeded random orthogonal n x n matrix (modified Gram-Schmidt).
std::vector<std::vector<double>> random_orthonormal(int n, Rng& rng) {
  std::vector<std::vector<double>> basis;
  while (static_cast<int>(basis.size()) < n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    for (const auto& b : basis) {
      const double p = dot(v, b);
      for (int i = 0; i < n; ++i) v[i] -= p * b[i];
    }
    const double norm = std::sqrt(dot(v, v));
    if (norm < 1e-6) continue;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

void place_color(std::span<double> row, int group, const std::vector<double>& c, double scale) {
  for (int k = 0; k < kNumColors; ++k) row[group + k] += scale * c[k];
}

void fill_ident(std::span<double> row, Rng& rng) {
  for (int k = 0; k < kIdentDim; ++k) row[IDENT + k] = rng.normal() * kIdentStd;
}

void gatherer(LayerWeights& lw, int head, double query_gain) {
  const int o = head * kHeadDim;
  lw.wq(o, TXT) = query_gain;
  lw.wk(o, SAL) = 1.0;
  lw.wk(o, TXT) = kGatherTextKey;
  for (int k = 0; k < kNumColors; ++k) {
    lw.wv(o + k, COLOR + k) = 1.0;
    lw.wo(GATHER + k, o + k) = kGatherOut;
  }
}

void reader(LayerWeights& lw, int head) {
  const int o = head * kHeadDim;
  lw.wq(o, TXT) = 1.0;
  lw.wk(o, TXT) = kReaderKey;
  for (int k = 0; k < kNumColors; ++k) {
    lw.wv(o + k, ASK + k) = 1.0;
    lw.wo(ASK2 + k, o + k) = kReaderOut;
  }
  lw.wv(o + kNumColors, PROBE) = 1.0;
  lw.wo(PROBE2, o + kNumColors) = kReaderOut;
  lw.wv(o + kNumColors + 1, ATTR) = 1.0;
  lw.wo(ATTR2, o + kNumColors + 1) = kReaderOut;
}

void searcher(LayerWeights& lw, int head) {
  const int o = head * kHeadDim;
  for (int k = 0; k < kNumColors; ++k) {
    lw.wq(o + k, ASK2 + k) = kSearchQuery;
    lw.wk(o + k, COLOR + k) = 1.0;
  }
  lw.wq(o + kNumColors, TXT) = 1.0;
  lw.wk(o + kNumColors, TXT) = kSearchTextKey;
  lw.wk(o + kNumColors, VIS) = kSearchVisualKey;
  lw.wv(o, VIS) = 1.0;
  lw.wo(YES, o) = kSearchOut;
}

// Feed-forward block that only reads and writes the identity channels.
void identity_ffn(LayerWeights& lw, Rng& rng) {
  for (std::size_t h = 0; h < lw.w1.rows(); ++h) {
    for (int k = 0; k < kIdentDim; ++k) lw.w1(h, IDENT + k) = rng.normal() * kFfnStd;
    lw.b1[h] = rng.normal() * kFfnStd;
  }
  for (int k = 0; k < kIdentDim; ++k) {
    for (std::size_t h = 0; h < lw.w2.cols(); ++h) lw.w2(IDENT + k, h) = rng.normal() * kFfnStd;
  }
}

}  // namespace

ModelWeights ModelWeights::task_model(std::uint64_t seed) {
  Rng rng(seed);
  ModelWeights w;
  w.seed = seed;

  for (const char* word : kWords) w.vocab.words.emplace_back(word);
  for (auto name : kColorNames) w.vocab.words.emplace_back(name);
  for (auto name : kColorNames) w.vocab.answers.emplace_back(name);
  w.vocab.answers.emplace_back("yes");
  w.vocab.answers.emplace_back("no");
  w.vocab.answers.emplace_back("<eos>");
  w.vocab.eos_answer = static_cast<int>(w.vocab.answers.size()) - 1;
  const int yes_id = kNumColors;
  const int no_id = kNumColors + 1;

  w.dims.feature_dim = kFeatureDim;
  w.dims.encoder_dim = kEncoderDim;
  w.dims.model_dim = kModelDim;
  w.dims.n_layers = 2;
  w.dims.n_heads = kHeads;
  w.dims.ffn_dim = kModelDim;
  w.dims.n_words = static_cast<int>(w.vocab.words.size());
  w.dims.n_answers = static_cast<int>(w.vocab.answers.size());

  const auto colors = random_orthonormal(kNumColors, rng);
  const auto rotation = random_orthonormal(kEncoderDim, rng);

  // Encoder: rotate the feature vector (zero-padded to kEncoderDim).
  w.encoder = Matrix(kEncoderDim, kFeatureDim);
  for (int r = 0; r < kEncoderDim; ++r) {
    for (int f = 0; f < kFeatureDim; ++f) w.encoder(r, f) = rotation[r][f];
  }
  // Projector: undo the rotation and place each feature in its channel group.
  Matrix placement(kModelDim, kEncoderDim);
  for (int k = 0; k < kNumColors; ++k) {
    for (int c = 0; c < kNumColors; ++c) placement(COLOR + c, k) = kColorScale * colors[k][c];
  }
  placement(SAL, kFeatureSalience) = 1.0;
  placement(VIS, kFeatureObjectness) = 0.5;
  w.projector = Matrix(kModelDim, kEncoderDim);
  for (int r = 0; r < kModelDim; ++r) {
    for (int e = 0; e < kEncoderDim; ++e) {
      double acc = 0.0;
      for (int f = 0; f < kEncoderDim; ++f) acc += placement(r, f) * rotation[e][f];
      w.projector(r, e) = acc;
    }
  }
  w.projector_bias.assign(kModelDim, 0.0);
  w.projector_bias[VIS] = kRoleScale;

  w.word_embeddings = Matrix(w.dims.n_words, kModelDim);
  for (int id = 0; id < w.dims.n_words; ++id) {
    auto row = w.word_embeddings.row(id);
    row[TXT] = kRoleScale;
    fill_ident(row, rng);
    const std::string& word = w.vocab.words[id];
    if (word == "color" || word == "colour") row[ATTR] = kFlagScale;
    if (word == "there") row[PROBE] = kFlagScale;
    for (int k = 0; k < kNumColors; ++k) {
      if (word == kColorNames[k]) place_color(row, ASK, colors[k], kAskScale);
    }
  }
  w.answer_embeddings = Matrix(w.dims.n_answers, kModelDim);
  for (int id = 0; id < w.dims.n_answers; ++id) {
    auto row = w.answer_embeddings.row(id);
    row[TXT] = kRoleScale;
    row[DONE] = kDoneScale;
    fill_ident(row, rng);
  }

  const int inner = kHeads * kHeadDim;
  for (int l = 0; l < 2; ++l) {
    LayerWeights lw;
    lw.attn_norm_gain.assign(kModelDim, 1.0);
    lw.wq = Matrix(inner, kModelDim);
    lw.wk = Matrix(inner, kModelDim);
    lw.wv = Matrix(inner, kModelDim);
    lw.wo = Matrix(kModelDim, inner);
    gatherer(lw, 0, kGatherQuery[0]);
    gatherer(lw, 1, kGatherQuery[1]);
    reader(lw, 2);
    if (l == 0) {
      gatherer(lw, 3, kGatherQuery[2]);
    } else {
      searcher(lw, 3);
    }
    lw.ffn_norm_gain.assign(kModelDim, 1.0);
    lw.w1 = Matrix(kModelDim, kModelDim);
    lw.b1.assign(kModelDim, 0.0);
    lw.w2 = Matrix(kModelDim, kModelDim);
    lw.b2.assign(kModelDim, 0.0);
    identity_ffn(lw, rng);
    w.layers.push_back(std::move(lw));
  }

  w.final_norm_gain.assign(kModelDim, 1.0);
  w.answer_head = Matrix(w.dims.n_answers, kModelDim);
  for (int k = 0; k < kNumColors; ++k) {
    auto row = w.answer_head.row(k);
    place_color(row, GATHER, colors[k], kAnswerColor);
    row[PROBE2] = -kAnswerColorProbePenalty;
  }
  w.answer_head(yes_id, YES) = kAnswerYes;
  w.answer_head(yes_id, ATTR2) = -kAnswerYesAttrPenalty;
  w.answer_head(no_id, PROBE2) = kAnswerNo;
  w.answer_head(w.vocab.eos_answer, DONE) = kAnswerEos;
  return w;
}

}  // namespace cof
