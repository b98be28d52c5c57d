#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hideseek/error.hpp"
#include "hideseek/order_theory.hpp"
#include "support/oracles.hpp"

using namespace hideseek;

TEST_CASE("instances must be positive, sorted and of equal length") {
  CHECK_THROWS_AS(OrderInstance({1, 2}, {1}), Error);
  CHECK_THROWS_AS(OrderInstance({}, {}), Error);
  CHECK_THROWS_AS(OrderInstance({2, 1}, {1, 2}), Error);
  CHECK_THROWS_AS(OrderInstance({0, 1}, {1, 2}), Error);
  CHECK_NOTHROW(OrderInstance({1, 1}, {2, 2}));
}

TEST_CASE("ape examples and permutation invariance") {
  CHECK(accumulative_prediction_error(OrderInstance({1, 2}, {3, 4})) == doctest::Approx(5.0));
  CHECK(accumulative_prediction_error(OrderInstance({1}, {1})) == 1.0);
  CHECK(accumulative_prediction_error(OrderInstance({1, 2, 3}, {1, 2, 3})) == doctest::Approx(std::sqrt(14.0)));
}

TEST_CASE("apd examples") {
  const OrderInstance inst({1, 2, 3}, {1, 2, 3});
  const std::vector<std::size_t> id{0, 1, 2}, rev{2, 1, 0};
  CHECK(accumulative_prediction_discrepancy(inst, id) == 14.0);
  CHECK(accumulative_prediction_discrepancy(inst, rev) == 10.0);
  const std::vector<std::size_t> bad{0, 0, 2};
  CHECK_THROWS_AS(accumulative_prediction_discrepancy(inst, bad), Error);
  const OrderInstance one({0.5}, {3.0});
  const std::vector<std::size_t> only{0};
  CHECK(accumulative_prediction_discrepancy(one, only) == 1.5);
}

TEST_CASE("the ascending pairing is the maximum on the worked instance") {
  const OrderVerdict v = verify_order_theorem(OrderInstance({1, 2, 3}, {1, 2, 3}));
  const auto e = oracle::enumerate_pairings({1, 2, 3}, {1, 2, 3});
  CHECK(v.holds);
  CHECK(v.permutations == 6);
  CHECK(v.max_apd == e.max);
  CHECK(v.min_apd == e.min);
  CHECK(v.max_apd == 14.0);
  CHECK(v.min_apd == 10.0);
  CHECK(v.argmax == Permutation{0, 1, 2});
  CHECK(v.argmin == Permutation{2, 1, 0});
  CHECK_FALSE(v.counterexample.has_value());
}

TEST_CASE("constant scores tie every permutation") {
  const OrderVerdict v = verify_order_theorem(OrderInstance({1, 1, 1}, {0.2, 0.5, 0.9}));
  CHECK(v.holds);
  CHECK(v.max_apd == doctest::Approx(v.min_apd));
}

TEST_CASE("random sorted instances satisfy both sides of the rearrangement bound") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.index(7);
    const OrderInstance inst = OrderInstance::random(n, rng);
    const OrderVerdict v = verify_order_theorem(inst);
    const auto e = oracle::enumerate_pairings(inst.scores(), inst.errors());
    CHECK(v.holds);
    CHECK(v.identity_apd == doctest::Approx(e.max).epsilon(1e-12));
    Permutation rev(n);
    std::iota(rev.rbegin(), rev.rend(), 0);
    CHECK(accumulative_prediction_discrepancy(inst, rev) == doctest::Approx(e.min).epsilon(1e-12));

    std::vector<double> shuffled = inst.errors();
    rng.shuffle(std::span<double>(shuffled));
    double sq = 0.0;
    for (double y : shuffled) sq += y * y;
    CHECK(accumulative_prediction_error(inst) == doctest::Approx(std::sqrt(sq)).epsilon(1e-12));
  }
}

TEST_CASE("scaling both sequences scales apd and keeps the maximiser") {
  const OrderInstance a({0.2, 0.4, 0.9}, {0.1, 0.3, 0.35});
  const OrderInstance b({0.6, 1.2, 2.7}, {0.2, 0.6, 0.7});
  const OrderVerdict va = verify_order_theorem(a), vb = verify_order_theorem(b);
  CHECK(vb.max_apd == doctest::Approx(6.0 * va.max_apd));
  CHECK(va.argmax == vb.argmax);
}

TEST_CASE("exhaustive search refuses oversized instances") {
  Rng rng(1);
  CHECK_THROWS_AS(verify_order_theorem(OrderInstance::random(kMaxExhaustiveOrder + 1, rng)), Error);
}
