#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cof/geometry.hpp"
#include "cof/matrix.hpp"

namespace cof {

// Pre-softmax attention logits, already divided by sqrt(d_k). -inf entries are
// reserved for excluded (causally masked) positions.
struct ScoreMatrix {
  Matrix values;
  int d_k = 1;

  std::size_t n_query() const { return values.rows(); }
  std::size_t n_key() const { return values.cols(); }
};

// Boost factor and the key columns it applies to. lambda == 1 is a no-op.
struct ReweightParams {
  double lambda = 1.0;
  std::vector<bool> column_mask;

  // Throws InvalidParameter unless lambda is finite and >= 1.
  void validate() const;
};

// Which key positions each query may see. true = visible.
class VisibilityMask {
 public:
  VisibilityMask(std::size_t n_query, std::size_t n_key, bool fill = true)
      : n_query_(n_query), n_key_(n_key), visible_(n_query * n_key, fill) {}

  // Query i sees keys 0 .. i + (n_key - n_query): the usual decoder mask when
  // the queries are the trailing n_query positions of the key sequence.
  static VisibilityMask causal(std::size_t n_query, std::size_t n_key);

  std::size_t n_query() const { return n_query_; }
  std::size_t n_key() const { return n_key_; }
  bool visible(std::size_t i, std::size_t j) const { return visible_[i * n_key_ + j]; }
  void set(std::size_t i, std::size_t j, bool v) { visible_[i * n_key_ + j] = v; }

 private:
  std::size_t n_query_;
  std::size_t n_key_;
  std::vector<bool> visible_;
};

// values[i][j] = dot(q_i, k_j) / sqrt(d_k). Throws ShapeError on mismatched
// widths, InvalidParameter on d_k < 1.
ScoreMatrix scaled_scores(const Matrix& queries, const Matrix& keys, int d_k);

// Softmax of one row with log(lambda) added to the masked columns:
//   out[j] = exp(s[j] + log(lambda) * m[j]) / sum_j' exp(s[j'] + log(lambda) * m[j'])
// -inf scores get probability 0. Columns past column_mask.size() count as
// unmasked; a null mask or log_lambda == 0 is the plain softmax, bit for bit.
// Throws DegenerateRow when every score is -inf and InvalidParameter on NaN/+inf.
void reweighted_softmax_row(std::span<const double> scores, std::span<double> out,
                            const std::vector<bool>* column_mask, double log_lambda);

// Row-wise softmax of the scores (no reweighting).
Matrix softmax_rows(const ScoreMatrix& scores, const VisibilityMask* visibility = nullptr);

// Row-wise reweighted softmax. The visibility mask is applied as -inf before
// the boost, so hidden positions stay at probability 0.
Matrix reweight_softmax(const ScoreMatrix& scores, const ReweightParams& params,
                        const VisibilityMask* visibility = nullptr);

// Key-position layout of a decoder sequence: visual tokens (one per grid cell,
// row-major) followed by text tokens.
struct TokenLayout {
  PatchGrid grid;
  std::size_t n_text = 0;

  std::size_t n_visual() const { return grid.size(); }
  std::size_t n_total() const { return n_visual() + n_text; }
};

// Column mask that is true exactly on the visual positions whose grid cell is
// set in `mask`. Throws ShapeError when the mask grid differs from the layout's.
std::vector<bool> mask_to_columns(const TokenMask& mask, const TokenLayout& layout);

// Decoder layers the reweighting applies to; all layers unless a half-open
// [begin, end) range is given.
struct LayerScope {
  std::optional<std::pair<int, int>> range;

  static LayerScope all() { return {}; }
  static LayerScope layers(int begin, int end) { return {std::make_pair(begin, end)}; }

  bool contains(int layer) const { return !range || (layer >= range->first && layer < range->second); }
  bool is_all() const { return !range.has_value(); }
  std::string to_string() const;

  bool operator==(const LayerScope&) const = default;
};

enum class HeadScope { all_heads };

enum class Preset { llava_v15_7b, llava_v15_13b, instructblip_13b };

// alpha: box expansion factor. lambda: attention boost on the grounded region.
struct CoFConfig {
  double alpha = 1.3;
  double lambda = 2.0;
  LayerScope layer_scope;
  HeadScope head_scope = HeadScope::all_heads;

  static CoFConfig preset(Preset p);
  // Throws InvalidParameter when alpha <= 0, lambda < 1 or either is non-finite,
  // or when the layer range is empty-or-reversed with begin > end.
  void validate() const;

  bool operator==(const CoFConfig&) const = default;
};

std::optional<Preset> preset_from_string(std::string_view name);
std::string_view to_string(Preset p);

// CSV dump of an attention matrix with a header row of key labels and the
// query label as first column.
void write_attention_csv(std::ostream& os, const Matrix& probs, const std::vector<std::string>& query_labels,
                         const std::vector<std::string>& key_labels);

}  // namespace cof
