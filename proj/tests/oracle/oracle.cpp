#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

Vec boosted_softmax(const Vec& scores, const std::vector<bool>& mask, double lambda) {
  double top = -std::numeric_limits<double>::infinity();
  for (double s : scores) top = std::max(top, s);
  Vec out(scores.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (std::isinf(scores[j])) continue;
    double e = std::exp(scores[j] - top);
    if (j < mask.size() && mask[j]) e *= lambda;
    out[j] = e;
    total += e;
  }
  for (double& p : out) p /= total;
  return out;
}

cof::TokenMask brute_force_mask(const cof::NormBox& box, cof::PatchGrid grid) {
  std::vector<bool> bits(static_cast<std::size_t>(grid.rows * grid.cols), false);
  const bool degenerate = box.x2 - box.x1 <= 0.0 || box.y2 - box.y1 <= 0.0;
  if (degenerate) {
    const double cx = (box.x1 + box.x2) / 2.0;
    const double cy = (box.y1 + box.y2) / 2.0;
    // Half-open cells: the cell c with c/cols <= cx < (c+1)/cols, last cell for cx == 1.
    int col = grid.cols - 1;
    for (int c = 0; c < grid.cols; ++c) {
      if (cx >= double(c) / grid.cols && cx < double(c + 1) / grid.cols) {
        col = c;
        break;
      }
    }
    int row = grid.rows - 1;
    for (int r = 0; r < grid.rows; ++r) {
      if (cy >= double(r) / grid.rows && cy < double(r + 1) / grid.rows) {
        row = r;
        break;
      }
    }
    bits[static_cast<std::size_t>(row * grid.cols + col)] = true;
    return cof::TokenMask(grid, bits);
  }
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const double px1 = double(c) / grid.cols, px2 = double(c + 1) / grid.cols;
      const double py1 = double(r) / grid.rows, py2 = double(r + 1) / grid.rows;
      const double ow = std::min(box.x2, px2) - std::max(box.x1, px1);
      const double oh = std::min(box.y2, py2) - std::max(box.y1, py1);
      if (ow > 0.0 && oh > 0.0) bits[static_cast<std::size_t>(r * grid.cols + c)] = true;
    }
  }
  return cof::TokenMask(grid, bits);
}

namespace {

Vec mat_vec(const cof::Matrix& m, const Vec& x) {
  Vec out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) acc += m(r, c) * x[c];
    out[r] = acc;
  }
  return out;
}

Vec rmsnorm(const Vec& x, const std::vector<double>& gain, double eps) {
  double ms = 0.0;
  for (double v : x) ms += v * v;
  ms /= static_cast<double>(x.size());
  const double denom = std::sqrt(ms + eps);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gain[i] * (x[i] / denom);
  return out;
}

}  // namespace

Mat visual_tokens(const cof::ModelWeights& w, const cof::SyntheticImage& image) {
  Mat out;
  for (std::size_t p = 0; p < image.patch_features.rows(); ++p) {
    Vec f(image.patch_features.cols());
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = image.patch_features(p, k);
    Vec e = mat_vec(w.encoder, f);
    Vec v = mat_vec(w.projector, e);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += w.projector_bias[k];
    out.push_back(std::move(v));
  }
  return out;
}

Mat prompt_tokens(const cof::ModelWeights& w, const cof::SyntheticImage& image, const std::vector<int>& word_ids) {
  Mat out = visual_tokens(w, image);
  for (int id : word_ids) {
    Vec t(w.word_embeddings.cols());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = w.word_embeddings(static_cast<std::size_t>(id), k);
    out.push_back(std::move(t));
  }
  return out;
}

Forward forward(const cof::ModelWeights& w, const Mat& tokens, const Reweight* reweight) {
  const std::size_t n = tokens.size();
  const std::size_t d = static_cast<std::size_t>(w.dims.model_dim);
  const std::size_t heads = static_cast<std::size_t>(w.dims.n_heads);
  const std::size_t hd = d / heads;
  Forward out;
  Mat x = tokens;
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const cof::LayerWeights& lw = w.layers[l];
    Mat q(n), k(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec h = rmsnorm(x[i], lw.attn_norm_gain, w.norm_eps);
      q[i] = mat_vec(lw.wq, h);
      k[i] = mat_vec(lw.wk, h);
      v[i] = mat_vec(lw.wv, h);
    }
    const bool active = reweight && reweight->layers.contains(static_cast<int>(l));
    std::vector<Mat> layer_probs(heads, Mat(n, Vec(n, 0.0)));
    Mat attn(n, Vec(heads * hd, 0.0));
    for (std::size_t hh = 0; hh < heads; ++hh) {
      for (std::size_t i = 0; i < n; ++i) {
        Vec s(n, -std::numeric_limits<double>::infinity());
        for (std::size_t j = 0; j <= i; ++j) {
          double acc = 0.0;
          for (std::size_t t = 0; t < hd; ++t) acc += q[i][hh * hd + t] * k[j][hh * hd + t];
          s[j] = acc / std::sqrt(static_cast<double>(hd));
        }
        const Vec p = active ? boosted_softmax(s, reweight->column_mask, reweight->lambda)
                             : boosted_softmax(s, {}, 1.0);
        layer_probs[hh][i] = p;
        for (std::size_t j = 0; j <= i; ++j) {
          for (std::size_t t = 0; t < hd; ++t) attn[i][hh * hd + t] += p[j] * v[j][hh * hd + t];
        }
      }
    }
    out.probs.push_back(std::move(layer_probs));
    for (std::size_t i = 0; i < n; ++i) {
      const Vec o = mat_vec(lw.wo, attn[i]);
      for (std::size_t t = 0; t < d; ++t) x[i][t] += o[t];
      const Vec h = rmsnorm(x[i], lw.ffn_norm_gain, w.norm_eps);
      Vec hidden = mat_vec(lw.w1, h);
      for (std::size_t t = 0; t < hidden.size(); ++t) hidden[t] = std::max(0.0, hidden[t] + lw.b1[t]);
      const Vec f = mat_vec(lw.w2, hidden);
      for (std::size_t t = 0; t < d; ++t) x[i][t] += f[t] + lw.b2[t];
    }
  }
  out.logits = mat_vec(w.answer_head, rmsnorm(x[n - 1], w.final_norm_gain, w.norm_eps));
  return out;
}

std::vector<int> greedy(const cof::ModelWeights& w, Mat tokens, const Reweight* reweight, int max_tokens) {
  std::vector<int> out;
  for (int t = 0; t < max_tokens; ++t) {
    const Vec logits = forward(w, tokens, reweight).logits;
    int best = 0;
    for (std::size_t a = 1; a < logits.size(); ++a) {
      if (logits[a] > logits[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
    }
    if (best == w.vocab.eos_answer) break;
    out.push_back(best);
    Vec e(w.answer_embeddings.cols());
    for (std::size_t k = 0; k < e.size(); ++k) e[k] = w.answer_embeddings(static_cast<std::size_t>(best), k);
    tokens.push_back(std::move(e));
  }
  return out;
}

}  // namespace oracle
