#include "hideseek/order_theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hideseek/error.hpp"

namespace hideseek {

OrderInstance::OrderInstance(std::vector<double> scores, std::vector<double> errors)
    : scores_(std::move(scores)), errors_(std::move(errors)) {
  if (scores_.empty()) fail(ErrorCode::kInvalidArgument, "order instance is empty");
  if (scores_.size() != errors_.size()) fail(ErrorCode::kInvalidArgument, "scores and errors differ in length");
  for (std::size_t i = 0; i < scores_.size(); ++i) {
    if (!(scores_[i] > 0.0) || !(errors_[i] > 0.0)) {
      fail(ErrorCode::kInvalidArgument, "scores and errors must be positive");
    }
  }
  if (!std::is_sorted(scores_.begin(), scores_.end()) || !std::is_sorted(errors_.begin(), errors_.end())) {
    fail(ErrorCode::kInvalidArgument, "scores and errors must be sorted non-decreasing");
  }
}

OrderInstance OrderInstance::random(std::size_t n, Rng& rng) {
  std::vector<double> a(n), y(n);
  for (double& v : a) v = 1.0 - rng.uniform();  // (0, 1]
  for (double& v : y) v = 1.0 - rng.uniform();
  std::sort(a.begin(), a.end());
  std::sort(y.begin(), y.end());
  return {std::move(a), std::move(y)};
}

double accumulative_prediction_error(const OrderInstance& instance) {
  double s = 0.0;
  for (double y : instance.errors()) s += y * y;
  return std::sqrt(s);
}

bool is_permutation_of_indices(std::span<const std::size_t> perm, std::size_t n) {
  if (perm.size() != n) return false;
  std::vector<char> seen(n, 0);
  for (std::size_t p : perm) {
    if (p >= n || seen[p]) return false;
    seen[p] = 1;
  }
  return true;
}

double accumulative_prediction_discrepancy(const OrderInstance& instance, std::span<const std::size_t> perm) {
  if (!is_permutation_of_indices(perm, instance.size())) {
    fail(ErrorCode::kInvalidArgument, "not a permutation of the step indices");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) s += instance.scores()[i] * instance.errors()[perm[i]];
  return s;
}

OrderVerdict verify_order_theorem(const OrderInstance& instance) {
  const std::size_t n = instance.size();
  if (n > kMaxExhaustiveOrder) {
    fail(ErrorCode::kInvalidArgument, "instance too large for exhaustive search", std::to_string(n));
  }
  Permutation perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  OrderVerdict v;
  v.identity_apd = accumulative_prediction_discrepancy(instance, perm);
  v.max_apd = v.min_apd = v.identity_apd;
  v.argmax = v.argmin = perm;
  // Ties within a few ulps of the identity value count as ties.
  const double tol = 1e-12 * std::max(1.0, std::abs(v.identity_apd));
  do {
    const double apd = accumulative_prediction_discrepancy(instance, perm);
    ++v.permutations;
    if (apd > v.max_apd) {
      v.max_apd = apd;
      v.argmax = perm;
    }
    if (apd < v.min_apd) {
      v.min_apd = apd;
      v.argmin = perm;
    }
    if (apd > v.identity_apd + tol && !v.counterexample) v.counterexample = perm;
  } while (std::next_permutation(perm.begin(), perm.end()));

  v.holds = !v.counterexample.has_value();
  if (v.holds) {
    v.max_apd = std::max(v.max_apd, v.identity_apd);
    std::iota(v.argmax.begin(), v.argmax.end(), std::size_t{0});
  }
  return v;
}

}  // namespace hideseek
