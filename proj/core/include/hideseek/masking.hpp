#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "hideseek/image.hpp"
#include "hideseek/mask.hpp"
#include "hideseek/rng.hpp"

namespace hideseek {

enum class MaskKind { kRandom, kContinuous, kScattered };

std::string_view to_string(MaskKind kind);
MaskKind mask_kind_from_string(std::string_view name);

struct MaskStrategy {
  MaskKind kind = MaskKind::kRandom;
  double beta = 0.6;  // masking ratio in (0, 1)
};

/// round(beta * total) with ties rounded up. Throws kInvalidArgument unless
/// 0 < beta < 1.
std::size_t hidden_target(std::size_t total, double beta);

/// Size of the largest 4-adjacency independent set of the grid.
std::size_t max_independent_cells(const PatchGrid& grid);

Mask create_random_mask(const PatchGrid& grid, double beta, Rng& rng);

/// Hidden set grown from a random seed patch by repeatedly hiding a uniformly
/// chosen visible patch on the 4-neighbour frontier; always one 4-connected
/// component.
Mask create_continuous_mask(const PatchGrid& grid, double beta, Rng& rng);

struct ScatteredOptions {
  int max_restarts = 256;
  // After the restarts run out, build the set from a random parity class and
  // randomise it with feasible single-cell moves.
  bool swap_chain_fallback = true;
  int swap_steps_per_cell = 32;
};

/// Hidden set in which no two patches are 4-adjacent.
Mask create_scattered_mask(const PatchGrid& grid, double beta, Rng& rng,
                           const ScatteredOptions& options = {});

Mask create_mask(const PatchGrid& grid, const MaskStrategy& strategy, Rng& rng);

/// value = 1 / (1 + exp(-gamma * logit)), element-wise.
SoftMask soft_mask(const RealMap& logits, double gamma);

/// value > threshold -> visible; value <= threshold -> hidden.
Mask harden(const SoftMask& soft, double threshold = 0.5);

/// Hidden cells sorted by score, highest first; equal scores keep row-major
/// order. The last entry is therefore a minimum-score hidden cell.
std::vector<Cell> reconstruction_order(const RealMap& scores, const Mask& mask);

/// Keeps only the `budget` lowest-scoring hidden cells hidden (the tail of
/// reconstruction_order) and reveals the rest.
Mask limit_hidden(const Mask& mask, const RealMap& scores, std::size_t budget);

}  // namespace hideseek
