#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "hideseek/rng.hpp"

namespace hideseek {

/// Per-step masker scores and oracle prediction errors, both positive and
/// sorted non-decreasing. Step i reconstructs the pixel with score
/// scores[i]; the oracle assumption fixes the error of step i at errors[i]
/// whatever order is used.
class OrderInstance {
 public:
  /// Throws kInvalidArgument on unequal lengths, an empty instance,
  /// non-positive entries or unsorted input.
  OrderInstance(std::vector<double> scores, std::vector<double> errors);

  /// Draws n scores and errors uniformly from (0, 1] and sorts them.
  static OrderInstance random(std::size_t n, Rng& rng);

  [[nodiscard]] std::size_t size() const noexcept { return scores_.size(); }
  [[nodiscard]] const std::vector<double>& scores() const noexcept { return scores_; }
  [[nodiscard]] const std::vector<double>& errors() const noexcept { return errors_; }

 private:
  std::vector<double> scores_;
  std::vector<double> errors_;
};

/// Zero-based permutation: perm[i] is the error index paired with score i.
using Permutation = std::vector<std::size_t>;

/// Accumulative prediction error, sqrt(sum errors^2); order-free.
double accumulative_prediction_error(const OrderInstance& instance);

/// Accumulative prediction discrepancy sum_i scores[i] * errors[perm[i]].
/// Throws kInvalidArgument unless perm is a permutation of 0..n-1.
double accumulative_prediction_discrepancy(const OrderInstance& instance, std::span<const std::size_t> perm);

bool is_permutation_of_indices(std::span<const std::size_t> perm, std::size_t n);

inline constexpr std::size_t kMaxExhaustiveOrder = 10;

struct OrderVerdict {
  bool holds = false;
  double identity_apd = 0.0;
  double max_apd = 0.0;
  double min_apd = 0.0;
  Permutation argmax;  // a maximiser; the identity whenever it ties for max
  Permutation argmin;
  std::size_t permutations = 0;
  /// A permutation beating the identity, when the ascending order is not
  /// optimal.
  std::optional<Permutation> counterexample;
};

/// Enumerates all n! pairings; the ascending (identity) order must attain the
/// maximum APD. Throws kInvalidArgument for n > kMaxExhaustiveOrder.
OrderVerdict verify_order_theorem(const OrderInstance& instance);

}  // namespace hideseek
