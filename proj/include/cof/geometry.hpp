#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cof {

// Axis-aligned box in normalized image coordinates: origin top-left, x right,
// y down. A well-formed box satisfies 0 <= x1 <= x2 <= 1 and 0 <= y1 <= y2 <= 1;
// expand_box may produce a candidate outside the unit square, which clamp_box
// brings back.
struct NormBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 1.0;
  double y2 = 1.0;

  static constexpr NormBox full_image() { return {0.0, 0.0, 1.0, 1.0}; }

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1 + x2); }
  double center_y() const { return 0.5 * (y1 + y2); }

  bool is_finite() const;
  bool is_ordered() const { return x1 <= x2 && y1 <= y2; }
  bool in_unit_square() const;
  // Ordered, finite and inside [0,1]^2.
  bool is_well_formed() const { return is_finite() && is_ordered() && in_unit_square(); }
  bool contains(const NormBox& other) const;

  bool operator==(const NormBox&) const = default;
};

std::string to_string(const NormBox& box);

// rows x cols tiling of the image; one visual token per cell, row-major.
struct PatchGrid {
  int rows = 1;
  int cols = 1;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
  bool is_valid() const { return rows >= 1 && cols >= 1; }
  void validate() const;

  // Patch (r, c) covers [c/cols, (c+1)/cols) x [r/rows, (r+1)/rows).
  NormBox patch_rect(int r, int c) const;
  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * cols + c; }

  bool operator==(const PatchGrid&) const = default;
};

// Binary mask over the visual-token grid, row-major.
class TokenMask {
 public:
  TokenMask() = default;
  explicit TokenMask(PatchGrid grid, bool fill = false);
  TokenMask(PatchGrid grid, std::vector<bool> bits);

  static TokenMask full(PatchGrid grid) { return TokenMask(grid, true); }
  static TokenMask empty(PatchGrid grid) { return TokenMask(grid, false); }

  const PatchGrid& grid() const { return grid_; }
  const std::vector<bool>& bits() const { return bits_; }
  std::size_t size() const { return bits_.size(); }

  bool at(int r, int c) const { return bits_[grid_.index(r, c)]; }
  bool at(std::size_t i) const { return bits_[i]; }
  void set(int r, int c, bool v = true) { bits_[grid_.index(r, c)] = v; }

  std::size_t cardinality() const;
  bool is_subset_of(const TokenMask& other) const;

  // Row-major '0'/'1' string, and the inverse.
  std::string bit_string() const;
  static TokenMask from_bit_string(PatchGrid grid, const std::string& bits);

  // One line of '0'/'1' characters per grid row.
  std::string render_grid() const;

  bool operator==(const TokenMask&) const = default;

 private:
  PatchGrid grid_;
  std::vector<bool> bits_;
};

// Scales width and height by alpha about the box center. The result may leave
// the unit square. Throws InvalidParameter for alpha <= 0 / non-finite or a
// malformed input box.
NormBox expand_box(const NormBox& box, double alpha);

// Translates the box by the minimal shift that places it inside [0,1]^2,
// keeping width and height. An axis longer than 1 becomes [0, 1].
NormBox clamp_box(const NormBox& box);

// Marks every patch whose rectangle overlaps the box with positive area. A
// zero-area box marks the single patch containing its center.
TokenMask box_to_mask(const NormBox& box, PatchGrid grid);

}  // namespace cof
