#include "cof/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cof/errors.hpp"

namespace cof {

namespace {

// Patch boundary k/n, computed identically everywhere a boundary is needed.
double edge(int k, int n) { return static_cast<double>(k) / static_cast<double>(n); }

// Index of the cell [k/n, (k+1)/n) containing v, with v == 1 mapped to the last cell.
int cell_of(double v, int n) {
  int k = static_cast<int>(std::floor(v * n));
  k = std::clamp(k, 0, n - 1);
  while (k > 0 && v < edge(k, n)) --k;
  while (k + 1 < n && v >= edge(k + 1, n)) ++k;
  return k;
}

// Cells [lo, hi] with positive-length overlap against [a, b], a < b.
std::pair<int, int> overlapping_cells(double a, double b, int n) {
  // smallest k with (k+1)/n > a
  int lo = std::clamp(static_cast<int>(std::floor(a * n)), 0, n - 1);
  while (lo > 0 && edge(lo, n) > a) --lo;
  while (lo + 1 < n && edge(lo + 1, n) <= a) ++lo;
  // largest k with k/n < b
  int hi = std::clamp(static_cast<int>(std::ceil(b * n)) - 1, 0, n - 1);
  while (hi + 1 < n && edge(hi + 1, n) < b) ++hi;
  while (hi > 0 && edge(hi, n) >= b) --hi;
  return {lo, hi};
}

void clamp_axis(double& lo, double& hi) {
  const double extent = hi - lo;
  if (extent >= 1.0) {
    lo = 0.0;
    hi = 1.0;
  } else if (lo < 0.0) {
    lo = 0.0;
    hi = extent;
  } else if (hi > 1.0) {
    lo = 1.0 - extent;
    hi = 1.0;
  }
}

}  // namespace

bool NormBox::is_finite() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2);
}

bool NormBox::in_unit_square() const {
  return x1 >= 0.0 && y1 >= 0.0 && x2 <= 1.0 && y2 <= 1.0 && x1 <= 1.0 && y1 <= 1.0 && x2 >= 0.0 &&
         y2 >= 0.0;
}

bool NormBox::contains(const NormBox& other) const {
  return x1 <= other.x1 && y1 <= other.y1 && other.x2 <= x2 && other.y2 <= y2;
}

std::string to_string(const NormBox& box) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "(%.4f, %.4f, %.4f, %.4f)", box.x1, box.y1, box.x2, box.y2);
  return buf;
}

void PatchGrid::validate() const {
  if (!is_valid()) {
    throw InvalidParameter("patch grid must have rows >= 1 and cols >= 1, got " + std::to_string(rows) + "x" +
                           std::to_string(cols));
  }
}

NormBox PatchGrid::patch_rect(int r, int c) const {
  return {edge(c, cols), edge(r, rows), edge(c + 1, cols), edge(r + 1, rows)};
}

TokenMask::TokenMask(PatchGrid grid, bool fill) : grid_(grid) {
  grid_.validate();
  bits_.assign(grid_.size(), fill);
}

TokenMask::TokenMask(PatchGrid grid, std::vector<bool> bits) : grid_(grid), bits_(std::move(bits)) {
  grid_.validate();
  if (bits_.size() != grid_.size()) throw ShapeError("token mask: bit count does not match grid");
}

std::size_t TokenMask::cardinality() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

bool TokenMask::is_subset_of(const TokenMask& other) const {
  if (other.bits_.size() != bits_.size()) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && !other.bits_[i]) return false;
  }
  return true;
}

std::string TokenMask::bit_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (bool b : bits_) s.push_back(b ? '1' : '0');
  return s;
}

TokenMask TokenMask::from_bit_string(PatchGrid grid, const std::string& bits) {
  grid.validate();
  if (bits.size() != grid.size()) throw ShapeError("token mask: bit string length does not match grid");
  std::vector<bool> out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') throw ShapeError("token mask: bit string must contain only 0/1");
    out[i] = bits[i] == '1';
  }
  return TokenMask(grid, std::move(out));
}

std::string TokenMask::render_grid() const {
  std::string s;
  for (int r = 0; r < grid_.rows; ++r) {
    for (int c = 0; c < grid_.cols; ++c) s.push_back(at(r, c) ? '1' : '0');
    s.push_back('\n');
  }
  return s;
}

NormBox expand_box(const NormBox& box, double alpha) {
  if (!std::isfinite(alpha) || alpha <= 0.0) {
    throw InvalidParameter("expand_box: alpha must be finite and > 0");
  }
  if (!box.is_well_formed()) throw InvalidParameter("expand_box: input box is not a valid NormBox " + to_string(box));
  if (alpha == 1.0) return box;

  const double cx = box.center_x();
  const double cy = box.center_y();
  const double half_w = 0.5 * box.width() * alpha;
  const double half_h = 0.5 * box.height() * alpha;
  return {cx - half_w, cy - half_h, cx + half_w, cy + half_h};
}

NormBox clamp_box(const NormBox& box) {
  if (!box.is_finite()) throw InvalidParameter("clamp_box: non-finite coordinates");
  if (!box.is_ordered()) throw InvalidParameter("clamp_box: corners are not ordered " + to_string(box));
  NormBox out = box;
  clamp_axis(out.x1, out.x2);
  clamp_axis(out.y1, out.y2);
  return out;
}

TokenMask box_to_mask(const NormBox& box, PatchGrid grid) {
  grid.validate();
  if (!box.is_well_formed()) throw InvalidParameter("box_to_mask: box outside the unit square " + to_string(box));

  TokenMask mask(grid);
  if (box.width() <= 0.0 || box.height() <= 0.0) {
    mask.set(cell_of(box.center_y(), grid.rows), cell_of(box.center_x(), grid.cols));
    return mask;
  }
  const auto [c_lo, c_hi] = overlapping_cells(box.x1, box.x2, grid.cols);
  const auto [r_lo, r_hi] = overlapping_cells(box.y1, box.y2, grid.rows);
  for (int r = r_lo; r <= r_hi; ++r) {
    for (int c = c_lo; c <= c_hi; ++c) mask.set(r, c);
  }
  return mask;
}

}  // namespace cof
