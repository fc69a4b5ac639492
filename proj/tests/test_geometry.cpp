#include <cmath>

#include "doctest.h"

#include "cof/errors.hpp"
#include "cof/geometry.hpp"
#include "cof/rng.hpp"
#include "oracle.hpp"

using namespace cof;

namespace {

void check_box(const NormBox& got, const NormBox& want, double tol = 1e-12) {
  CHECK(got.x1 == doctest::Approx(want.x1).epsilon(tol));
  CHECK(got.y1 == doctest::Approx(want.y1).epsilon(tol));
  CHECK(got.x2 == doctest::Approx(want.x2).epsilon(tol));
  CHECK(got.y2 == doctest::Approx(want.y2).epsilon(tol));
}

NormBox random_box(Rng& rng) {
  double a = rng.uniform(), b = rng.uniform(), c = rng.uniform(), d = rng.uniform();
  return {std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("expand_box examples") {
    check_box(expand_box({0.25, 0.25, 0.75, 0.75}, 1.0), {0.25, 0.25, 0.75, 0.75});
    CHECK(expand_box({0.25, 0.25, 0.75, 0.75}, 1.0) == NormBox{0.25, 0.25, 0.75, 0.75});
    check_box(expand_box({0.4, 0.4, 0.6, 0.6}, 1.3), {0.37, 0.37, 0.63, 0.63});
    check_box(expand_box({0.9, 0.9, 1.0, 1.0}, 2.0), {0.85, 0.85, 1.05, 1.05});
  }

  TEST_CASE("expand_box rejects bad alpha and boxes") {
    const NormBox b{0.1, 0.1, 0.2, 0.2};
    CHECK_THROWS_AS(expand_box(b, 0.0), InvalidParameter);
    CHECK_THROWS_AS(expand_box(b, -1.0), InvalidParameter);
    CHECK_THROWS_AS(expand_box(b, std::nan("")), InvalidParameter);
    CHECK_THROWS_AS(expand_box(b, INFINITY), InvalidParameter);
    CHECK_THROWS_AS(expand_box({0.5, 0.1, 0.2, 0.2}, 1.0), InvalidParameter);
  }

  TEST_CASE("clamp_box examples") {
    check_box(clamp_box({0.85, 0.85, 1.05, 1.05}), {0.80, 0.80, 1.00, 1.00});
    CHECK(clamp_box({0.2, 0.2, 0.4, 0.4}) == NormBox{0.2, 0.2, 0.4, 0.4});
    check_box(clamp_box({-0.3, 0.1, 1.2, 0.5}), {0.0, 0.1, 1.0, 0.5});
    check_box(clamp_box({-0.1, -0.2, 0.3, 0.2}), {0.0, 0.0, 0.4, 0.4});
    CHECK_THROWS_AS(clamp_box({0.0, 0.0, NAN, 1.0}), InvalidParameter);
  }

  TEST_CASE("box_to_mask examples") {
    const PatchGrid g{4, 4};
    CHECK(box_to_mask({0, 0, 1, 1}, g).cardinality() == 16);
    const auto quarter = box_to_mask({0, 0, 0.5, 0.5}, g);
    CHECK(quarter.cardinality() == 4);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) CHECK(quarter.at(r, c));
    }
    const auto point = box_to_mask({0.3, 0.3, 0.3, 0.3}, g);
    CHECK(point.cardinality() == 1);
    CHECK(point.at(1, 1));
  }

  TEST_CASE("box_to_mask boundary and degenerate cases") {
    const PatchGrid g{4, 4};
    // A box ending exactly on a patch edge does not spill into the next patch.
    CHECK(box_to_mask({0.25, 0.25, 0.5, 0.5}, g).cardinality() == 1);
    // Zero-width line: center rule.
    const auto line = box_to_mask({0.5, 0.0, 0.5, 1.0}, g);
    CHECK(line.cardinality() == 1);
    CHECK(line.at(2, 2));
    // Point on the far corner belongs to the last patch.
    CHECK(box_to_mask({1, 1, 1, 1}, g).at(3, 3));
    CHECK_THROWS_AS(box_to_mask({0, 0, 1.5, 1}, g), InvalidParameter);
    CHECK_THROWS_AS(box_to_mask({0, 0, 1, 1}, PatchGrid{0, 4}), InvalidParameter);
  }

  TEST_CASE("patch_rect tiles the unit square") {
    const PatchGrid g{3, 7};
    CHECK(g.patch_rect(0, 0).x1 == 0.0);
    CHECK(g.patch_rect(2, 6).x2 == 1.0);
    CHECK(g.patch_rect(2, 6).y2 == 1.0);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 7; ++c) CHECK(box_to_mask(g.patch_rect(r, c), g).cardinality() == 1);
    }
  }

  TEST_CASE("token mask bit strings round-trip") {
    const PatchGrid g{2, 3};
    TokenMask m(g);
    m.set(0, 1);
    m.set(1, 2);
    CHECK(m.bit_string() == "010001");
    CHECK(TokenMask::from_bit_string(g, "010001") == m);
    CHECK(m.render_grid() == "010\n001\n");
    CHECK_THROWS_AS(TokenMask::from_bit_string(g, "0100"), ShapeError);
    CHECK_THROWS_AS(TokenMask::from_bit_string(g, "01000x"), ShapeError);
    CHECK(m.is_subset_of(TokenMask::full(g)));
    CHECK_FALSE(TokenMask::full(g).is_subset_of(m));
  }

  TEST_CASE("property: expand then clamp stays in the unit square and keeps the center") {
    Rng rng(101);
    for (int i = 0; i < 2000; ++i) {
      const NormBox b = random_box(rng);
      const double alpha = rng.uniform(0.5, 3.0);
      const NormBox e = expand_box(b, alpha);
      CHECK(std::abs(e.center_x() - b.center_x()) <= 1e-12);
      CHECK(std::abs(e.center_y() - b.center_y()) <= 1e-12);
      const NormBox c = clamp_box(e);
      REQUIRE(c.is_well_formed());
      if (e.in_unit_square()) {
        CHECK(c == e);
        if (b.area() > 1e-9) CHECK(c.area() == doctest::Approx(alpha * alpha * b.area()).epsilon(1e-9));
      } else {
        if (e.width() <= 1.0) CHECK(c.width() == doctest::Approx(e.width()).epsilon(1e-12));
        if (e.height() <= 1.0) CHECK(c.height() == doctest::Approx(e.height()).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("property: box_to_mask matches the brute-force oracle") {
    Rng rng(202);
    for (int i = 0; i < 500; ++i) {
      const PatchGrid g{1 + static_cast<int>(rng.below(32)), 1 + static_cast<int>(rng.below(32))};
      NormBox b = random_box(rng);
      if (i % 10 == 0) b = {b.x1, b.y1, b.x1, b.y2};           // zero width
      if (i % 10 == 1) b = g.patch_rect(static_cast<int>(rng.below(g.rows)), 0);  // exact edges
      const auto m = box_to_mask(b, g);
      CHECK(m == oracle::brute_force_mask(b, g));
      CHECK(m.cardinality() >= 1);
    }
  }

  TEST_CASE("property: box_to_mask is monotone in the box") {
    Rng rng(303);
    const PatchGrid g{7, 5};
    for (int i = 0; i < 500; ++i) {
      const NormBox inner = random_box(rng);
      const NormBox outer = clamp_box(expand_box(inner, rng.uniform(1.0, 2.0)));
      if (!outer.contains(inner)) continue;
      CHECK(box_to_mask(inner, g).is_subset_of(box_to_mask(outer, g)));
    }
  }
}
