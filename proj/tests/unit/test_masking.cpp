#include <doctest.h>

#include <cmath>

#include "hideseek/error.hpp"
#include "hideseek/masking.hpp"
#include "support/oracles.hpp"

using namespace hideseek;

TEST_CASE("hidden_target rounds half up and rejects ratios outside (0, 1)") {
  CHECK(hidden_target(64, 0.5) == 32);
  CHECK(hidden_target(64, 0.6) == 38);
  CHECK(hidden_target(4, 0.125) == 1);  // 0.5 rounds up
  CHECK_THROWS_AS(hidden_target(64, 0.0), Error);
  CHECK_THROWS_AS(hidden_target(64, 1.0), Error);
}

TEST_CASE("max independent set matches brute force on small grids") {
  for (int cols = 1; cols <= 4; ++cols)
    for (int rows = 1; rows <= 4; ++rows) {
      CAPTURE(cols);
      CAPTURE(rows);
      CHECK(max_independent_cells(PatchGrid(cols, rows, 1)) ==
            static_cast<std::size_t>(oracle::brute_max_independent(cols, rows)));
    }
  CHECK(max_independent_cells(PatchGrid(64, 64, 8)) == 32);
}

TEST_CASE("random masks hide the exact count and are reproducible") {
  const PatchGrid grid(64, 64, 8);
  Rng a(17), b(17);
  const Mask m1 = create_random_mask(grid, 0.5, a);
  const Mask m2 = create_random_mask(grid, 0.5, b);
  CHECK(m1.hidden_count() == 32);
  CHECK(m1 == m2);
  Rng c(18);
  CHECK(create_random_mask(grid, 0.6, c).hidden_count() == 38);
}

TEST_CASE("continuous masks are a single 4-connected component") {
  const PatchGrid grid(64, 64, 8);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const Mask m = create_continuous_mask(grid, 0.75, rng);
    CHECK(m.hidden_count() == 48);
    CHECK(oracle::hidden_components(m) == 1);
  }
  Rng one(3);
  CHECK(create_continuous_mask(grid, 0.01, one).hidden_count() == 1);
}

TEST_CASE("continuous masks on a 1x4 strip hide two neighbours") {
  const PatchGrid strip(4, 1, 1);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const Mask m = create_continuous_mask(strip, 0.5, rng);
    const auto cells = m.hidden_cells();
    REQUIRE(cells.size() == 2);
    CHECK(std::abs(cells[0].x - cells[1].x) == 1);
  }
}

TEST_CASE("scattered masks are independent sets and reject infeasible ratios") {
  const PatchGrid grid(64, 64, 8);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Mask m = create_scattered_mask(grid, 0.5, rng);
    CHECK(m.hidden_count() == 32);
    CHECK(oracle::hidden_independent(m));
  }
  Rng rng(1);
  try {
    create_scattered_mask(grid, 0.6, rng);
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInfeasible);
  }
}

TEST_CASE("scattered masks on a 2x2 grid pick a diagonal pair") {
  const PatchGrid tiny(2, 2, 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Mask m = create_scattered_mask(tiny, 0.5, rng);
    const auto cells = m.hidden_cells();
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].x != cells[1].x);
    CHECK(cells[0].y != cells[1].y);
  }
}

TEST_CASE("soft_mask is the tempered sigmoid") {
  RealMap zero(3, 2, 0.0);
  const SoftMask half = soft_mask(zero, 4.0);
  for (double v : half.values()) CHECK(v == 0.5);
  RealMap l(1, 1, std::log(3.0));
  CHECK(soft_mask(l, 1.0).at(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
  RealMap big(1, 1, 50.0);
  CHECK(soft_mask(big, 1.0).at(0, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(soft_mask(zero, 0.0), Error);
}

TEST_CASE("larger gamma pushes same-sign logits toward 0 or 1") {
  RealMap l(2, 1);
  l.at(0, 0) = 0.3;
  l.at(1, 0) = -0.3;
  const SoftMask lo = soft_mask(l, 1.0);
  const SoftMask hi = soft_mask(l, 5.0);
  CHECK(hi.at(0, 0) > lo.at(0, 0));
  CHECK(hi.at(1, 0) < lo.at(1, 0));
}

TEST_CASE("harden uses a strict threshold with ties hidden") {
  RealMap logits(3, 1);
  logits.at(0, 0) = -1.0;
  logits.at(1, 0) = 0.2;
  logits.at(2, 0) = 3.0;
  const SoftMask soft = soft_mask(logits, 1.0);
  CHECK(soft.at(0, 0) == doctest::Approx(0.27).epsilon(0.01));
  CHECK(soft.at(1, 0) == doctest::Approx(0.55).epsilon(0.01));
  CHECK(soft.at(2, 0) == doctest::Approx(0.95).epsilon(0.01));
  const Mask hard = harden(soft);
  CHECK_FALSE(hard.visible(0, 0));
  CHECK(hard.visible(1, 0));
  CHECK(hard.visible(2, 0));

  CHECK(harden(SoftMask(4, 4, 0.5)).hidden_count() == 16);
  CHECK(harden(SoftMask(4, 4, 1.0)).hidden_count() == 0);
  CHECK_THROWS_AS(harden(SoftMask(2, 2, 0.5), 1.0), Error);
}

TEST_CASE("harden of soft_mask does not depend on gamma for non-zero logits") {
  Rng rng(8);
  RealMap l(8, 8);
  for (double& v : l.values) {
    v = rng.uniform(-2.0, 2.0);
    if (v == 0.0) v = 0.1;
  }
  const Mask ref = harden(soft_mask(l, 1.0));
  for (double g : {0.1, 3.0, 40.0}) CHECK(harden(soft_mask(l, g)) == ref);
}

TEST_CASE("reconstruction order sorts by score with row-major ties") {
  RealMap scores(3, 1);
  scores.at(0, 0) = 0.1;
  scores.at(1, 0) = 0.3;
  scores.at(2, 0) = 0.45;
  const Mask all_hidden(3, 1, 1, 0);
  const auto order = reconstruction_order(scores, all_hidden);
  REQUIRE(order.size() == 3);
  CHECK(order[0] == Cell{2, 0});
  CHECK(order[1] == Cell{1, 0});
  CHECK(order[2] == Cell{0, 0});

  const auto tied = reconstruction_order(RealMap(2, 2, 0.2), Mask(2, 2, 1, 0));
  CHECK(tied == std::vector<Cell>{{0, 0}, {1, 0}, {0, 1}, {1, 1}});

  Mask single(3, 1);
  single.set(1, 0, false);
  CHECK(reconstruction_order(scores, single) == std::vector<Cell>{{1, 0}});

  CHECK_THROWS_AS(reconstruction_order(RealMap(2, 2), Mask(3, 3)), Error);
}

TEST_CASE("reconstruction order is a permutation of the hidden set ending at the minimum") {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    RealMap scores(6, 5);
    for (double& v : scores.values) v = rng.uniform();
    const Mask m = create_random_mask(PatchGrid(6, 5, 1), 0.5, rng);
    const auto order = reconstruction_order(scores, m);
    REQUIRE(order.size() == m.hidden_count());
    double lowest = 2.0;
    for (const Cell& c : order) {
      CHECK_FALSE(m.visible(c));
      lowest = std::min(lowest, scores.at(c.x, c.y));
    }
    CHECK(scores.at(order.back().x, order.back().y) == lowest);
  }
}

TEST_CASE("limit_hidden keeps the lowest-scoring cells") {
  RealMap scores(4, 1);
  scores.values = {0.4, 0.1, 0.3, 0.2};
  const Mask all(4, 1, 1, 0);
  const Mask two = limit_hidden(all, scores, 2);
  CHECK(two.hidden_count() == 2);
  CHECK_FALSE(two.visible(1, 0));
  CHECK_FALSE(two.visible(3, 0));
  CHECK(limit_hidden(all, scores, 0).hidden_count() == 0);
  CHECK(limit_hidden(all, scores, 9) == all);
}
