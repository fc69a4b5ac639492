#include "cof/attention.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "cof/errors.hpp"

namespace cof {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Matrix apply_rows(const ScoreMatrix& scores, const std::vector<bool>* column_mask, double log_lambda,
                  const VisibilityMask* visibility) {
  const std::size_t nq = scores.n_query();
  const std::size_t nk = scores.n_key();
  if (visibility && (visibility->n_query() != nq || visibility->n_key() != nk)) {
    throw ShapeError("softmax: visibility mask shape does not match the score matrix");
  }
  Matrix out(nq, nk);
  std::vector<double> row(nk);
  for (std::size_t i = 0; i < nq; ++i) {
    const auto src = scores.values.row(i);
    for (std::size_t j = 0; j < nk; ++j) {
      row[j] = (visibility && !visibility->visible(i, j)) ? kNegInf : src[j];
    }
    try {
      reweighted_softmax_row(row, out.row(i), column_mask, log_lambda);
    } catch (const DegenerateRow&) {
      throw DegenerateRow("softmax: row " + std::to_string(i) + " has every key column excluded");
    }
  }
  return out;
}

}  // namespace

void ReweightParams::validate() const {
  if (!std::isfinite(lambda) || lambda < 1.0) {
    throw InvalidParameter("reweight: lambda must be finite and >= 1 (got " + std::to_string(lambda) + ")");
  }
}

VisibilityMask VisibilityMask::causal(std::size_t n_query, std::size_t n_key) {
  if (n_query > n_key) throw ShapeError("causal mask: more queries than keys");
  VisibilityMask m(n_query, n_key, false);
  const std::size_t offset = n_key - n_query;
  for (std::size_t i = 0; i < n_query; ++i) {
    for (std::size_t j = 0; j <= i + offset; ++j) m.set(i, j, true);
  }
  return m;
}

ScoreMatrix scaled_scores(const Matrix& queries, const Matrix& keys, int d_k) {
  if (d_k < 1) throw InvalidParameter("scaled_scores: d_k must be >= 1");
  if (queries.cols() != keys.cols()) {
    throw ShapeError("scaled_scores: query width " + std::to_string(queries.cols()) + " != key width " +
                     std::to_string(keys.cols()));
  }
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(d_k));
  ScoreMatrix s{Matrix(queries.rows(), keys.rows()), d_k};
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    for (std::size_t j = 0; j < keys.rows(); ++j) s.values(i, j) = dot(queries.row(i), keys.row(j)) * inv_scale;
  }
  return s;
}

void reweighted_softmax_row(std::span<const double> scores, std::span<double> out,
                            const std::vector<bool>* column_mask, double log_lambda) {
  const std::size_t n = scores.size();
  const bool boost = column_mask != nullptr && log_lambda != 0.0;
  const std::size_t n_mask = boost ? std::min(n, column_mask->size()) : 0;

  double max_score = kNegInf;
  for (std::size_t j = 0; j < n; ++j) {
    double s = scores[j];
    if (std::isnan(s) || s == std::numeric_limits<double>::infinity()) {
      throw InvalidParameter("softmax: scores must be finite or -inf");
    }
    if (j < n_mask && (*column_mask)[j] && s != kNegInf) s += log_lambda;
    out[j] = s;
    if (s > max_score) max_score = s;
  }
  if (max_score == kNegInf) throw DegenerateRow("softmax: every key column is excluded");

  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double e = out[j] == kNegInf ? 0.0 : std::exp(out[j] - max_score);
    out[j] = e;
    sum += e;
  }
  const double inv = 1.0 / sum;
  for (std::size_t j = 0; j < n; ++j) out[j] *= inv;
}

Matrix softmax_rows(const ScoreMatrix& scores, const VisibilityMask* visibility) {
  return apply_rows(scores, nullptr, 0.0, visibility);
}

Matrix reweight_softmax(const ScoreMatrix& scores, const ReweightParams& params, const VisibilityMask* visibility) {
  params.validate();
  if (params.column_mask.size() != scores.n_key()) {
    throw ShapeError("reweight_softmax: column mask length " + std::to_string(params.column_mask.size()) +
                     " != key count " + std::to_string(scores.n_key()));
  }
  return apply_rows(scores, &params.column_mask, std::log(params.lambda), visibility);
}

std::vector<bool> mask_to_columns(const TokenMask& mask, const TokenLayout& layout) {
  if (!(mask.grid() == layout.grid)) {
    throw ShapeError("mask_to_columns: mask grid " + std::to_string(mask.grid().rows) + "x" +
                     std::to_string(mask.grid().cols) + " does not match layout grid " +
                     std::to_string(layout.grid.rows) + "x" + std::to_string(layout.grid.cols));
  }
  std::vector<bool> columns(layout.n_total(), false);
  for (std::size_t i = 0; i < layout.n_visual(); ++i) columns[i] = mask.at(i);
  return columns;
}

std::string LayerScope::to_string() const {
  if (!range) return "all";
  return std::to_string(range->first) + ":" + std::to_string(range->second);
}

CoFConfig CoFConfig::preset(Preset p) {
  switch (p) {
    case Preset::llava_v15_7b:
      return {1.3, 2.0, LayerScope::all(), HeadScope::all_heads};
    case Preset::llava_v15_13b:
      return {1.0, 4.5, LayerScope::all(), HeadScope::all_heads};
    case Preset::instructblip_13b:
      return {1.0, 22.0, LayerScope::all(), HeadScope::all_heads};
  }
  throw InvalidParameter("unknown preset");
}

void CoFConfig::validate() const {
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw InvalidParameter("alpha must be finite and > 0 (got " + std::to_string(alpha) + ")");
  }
  if (!std::isfinite(lambda) || lambda < 1.0) {
    throw InvalidParameter("lambda must be finite and >= 1 (got " + std::to_string(lambda) + ")");
  }
  if (layer_scope.range && (layer_scope.range->first < 0 || layer_scope.range->first > layer_scope.range->second)) {
    throw InvalidParameter("layer range must satisfy 0 <= begin <= end (got " + layer_scope.to_string() + ")");
  }
}

std::optional<Preset> preset_from_string(std::string_view name) {
  for (auto p : {Preset::llava_v15_7b, Preset::llava_v15_13b, Preset::instructblip_13b}) {
    if (name == to_string(p)) return p;
  }
  return std::nullopt;
}

std::string_view to_string(Preset p) {
  switch (p) {
    case Preset::llava_v15_7b:
      return "llava-v1.5-7b";
    case Preset::llava_v15_13b:
      return "llava-v1.5-13b";
    case Preset::instructblip_13b:
      return "instructblip-13b";
  }
  return "unknown";
}

void write_attention_csv(std::ostream& os, const Matrix& probs, const std::vector<std::string>& query_labels,
                         const std::vector<std::string>& key_labels) {
  if (query_labels.size() != probs.rows() || key_labels.size() != probs.cols()) {
    throw ShapeError("write_attention_csv: label count does not match matrix shape");
  }
  os << "query";
  for (const auto& k : key_labels) os << ',' << k;
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    os << query_labels[i];
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", probs(i, j));
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace cof
