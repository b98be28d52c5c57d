#include "hideseek/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hideseek/error.hpp"

namespace hideseek {

std::string_view to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::kRandom: return "random";
    case MaskKind::kContinuous: return "continuous";
    case MaskKind::kScattered: return "scattered";
  }
  return "random";
}

MaskKind mask_kind_from_string(std::string_view name) {
  if (name == "random") return MaskKind::kRandom;
  if (name == "continuous") return MaskKind::kContinuous;
  if (name == "scattered") return MaskKind::kScattered;
  fail(ErrorCode::kInvalidArgument, "unknown mask strategy", std::string(name));
}

std::size_t hidden_target(std::size_t total, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "masking ratio beta must lie in (0, 1)", std::to_string(beta));
  }
  // Snap to 9 decimals first so products such as 0.35 * 10 = 3.4999999...
  // round as the exact tie they represent.
  const double exact = beta * static_cast<double>(total);
  const double cleaned = std::round(exact * 1e9) / 1e9;
  return static_cast<std::size_t>(std::floor(cleaned + 0.5));
}

std::size_t max_independent_cells(const PatchGrid& grid) { return (grid.cell_count() + 1) / 2; }

Mask create_random_mask(const PatchGrid& grid, double beta, Rng& rng) {
  const std::size_t target = hidden_target(grid.cell_count(), beta);
  std::vector<std::size_t> cells(grid.cell_count());
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `target` entries are a uniform sample.
  for (std::size_t i = 0; i < target; ++i) std::swap(cells[i], cells[i + rng.index(cells.size() - i)]);
  Mask mask = Mask::for_grid(grid);
  for (std::size_t i = 0; i < target; ++i) mask.set(grid.cell(cells[i]), false);
  return mask;
}

Mask create_continuous_mask(const PatchGrid& grid, double beta, Rng& rng) {
  const std::size_t target = hidden_target(grid.cell_count(), beta);
  Mask mask = Mask::for_grid(grid);
  if (target == 0) return mask;

  std::vector<char> hidden(grid.cell_count(), 0);
  std::vector<char> on_frontier(grid.cell_count(), 0);
  std::vector<std::size_t> frontier;

  auto hide = [&](std::size_t idx) {
    hidden[idx] = 1;
    mask.set(grid.cell(idx), false);
    for (std::size_t n : grid.neighbours(idx)) {
      if (!hidden[n] && !on_frontier[n]) {
        on_frontier[n] = 1;
        frontier.push_back(n);
      }
    }
  };

  hide(rng.index(grid.cell_count()));
  for (std::size_t count = 1; count < target; ++count) {
    const std::size_t pick = rng.index(frontier.size());
    const std::size_t idx = frontier[pick];
    frontier[pick] = frontier.back();
    frontier.pop_back();
    on_frontier[idx] = 0;
    hide(idx);
  }
  return mask;
}

namespace {

bool try_rejection(const PatchGrid& grid, std::size_t target, Rng& rng, std::vector<char>& hidden) {
  const std::size_t n = grid.cell_count();
  hidden.assign(n, 0);
  std::vector<char> blocked(n, 0);
  std::vector<std::size_t> candidates(n);
  std::iota(candidates.begin(), candidates.end(), std::size_t{0});

  for (std::size_t count = 0; count < target; ++count) {
    if (candidates.empty()) return false;  // dead end
    const std::size_t idx = candidates[rng.index(candidates.size())];
    hidden[idx] = 1;
    blocked[idx] = 1;
    for (std::size_t nb : grid.neighbours(idx)) blocked[nb] = 1;
    std::erase_if(candidates, [&](std::size_t c) { return blocked[c] != 0; });
  }
  return true;
}

bool independent_without(const PatchGrid& grid, const std::vector<char>& hidden, std::size_t cell,
                         std::size_t ignore) {
  for (std::size_t nb : grid.neighbours(cell)) {
    if (nb != ignore && hidden[nb]) return false;
  }
  return true;
}

void swap_chain(const PatchGrid& grid, std::size_t target, Rng& rng, int steps_per_cell,
                std::vector<char>& hidden) {
  const std::size_t n = grid.cell_count();
  hidden.assign(n, 0);
  // Start from a random subset of one parity class; either class of an
  // R x C grid is an independent set and the larger one holds ceil(RC/2).
  const int parity = (n % 2 == 1) ? 0 : static_cast<int>(rng.index(2));
  std::vector<std::size_t> cls;
  for (std::size_t i = 0; i < n; ++i) {
    const Cell c = grid.cell(i);
    if ((c.x + c.y) % 2 == parity) cls.push_back(i);
  }
  rng.shuffle(std::span<std::size_t>(cls));
  std::vector<std::size_t> members(cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(target));
  for (std::size_t m : members) hidden[m] = 1;

  const std::size_t steps = static_cast<std::size_t>(steps_per_cell) * n;
  for (std::size_t s = 0; s < steps && !members.empty(); ++s) {
    const std::size_t which = rng.index(members.size());
    const std::size_t from = members[which];
    const std::size_t to = rng.index(n);
    if (hidden[to] || !independent_without(grid, hidden, to, from)) continue;
    hidden[from] = 0;
    hidden[to] = 1;
    members[which] = to;
  }
}

}  // namespace

Mask create_scattered_mask(const PatchGrid& grid, double beta, Rng& rng, const ScatteredOptions& options) {
  const std::size_t target = hidden_target(grid.cell_count(), beta);
  const std::size_t limit = max_independent_cells(grid);
  if (target > limit) {
    fail(ErrorCode::kInfeasible, "scattered mask cannot hide that many patches",
         std::to_string(target) + " > " + std::to_string(limit));
  }

  std::vector<char> hidden;
  bool ok = false;
  for (int attempt = 0; attempt <= options.max_restarts && !ok; ++attempt) {
    ok = try_rejection(grid, target, rng, hidden);
  }
  if (!ok) {
    if (!options.swap_chain_fallback) {
      fail(ErrorCode::kBudgetExhausted, "scattered mask restart budget exhausted");
    }
    swap_chain(grid, target, rng, options.swap_steps_per_cell, hidden);
  }

  Mask mask = Mask::for_grid(grid);
  for (std::size_t i = 0; i < hidden.size(); ++i)
    if (hidden[i]) mask.set(grid.cell(i), false);
  return mask;
}

Mask create_mask(const PatchGrid& grid, const MaskStrategy& strategy, Rng& rng) {
  switch (strategy.kind) {
    case MaskKind::kRandom: return create_random_mask(grid, strategy.beta, rng);
    case MaskKind::kContinuous: return create_continuous_mask(grid, strategy.beta, rng);
    case MaskKind::kScattered: return create_scattered_mask(grid, strategy.beta, rng);
  }
  fail(ErrorCode::kInvalidArgument, "unknown mask strategy");
}

SoftMask soft_mask(const RealMap& logits, double gamma) {
  if (!(gamma > 0.0)) fail(ErrorCode::kInvalidArgument, "temperature gamma must be positive");
  SoftMask out(logits.width, logits.height);
  for (std::size_t i = 0; i < logits.values.size(); ++i) {
    const double z = gamma * logits.values[i];
    // Split on sign so exp never overflows.
    out.values()[i] = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  return out;
}

Mask harden(const SoftMask& soft, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "hardening threshold must lie in (0, 1)");
  }
  Mask mask(soft.width(), soft.height());
  for (int y = 0; y < soft.height(); ++y)
    for (int x = 0; x < soft.width(); ++x) mask.set(x, y, soft.at(x, y) > threshold);
  return mask;
}

std::vector<Cell> reconstruction_order(const RealMap& scores, const Mask& mask) {
  if (scores.width != mask.cols() || scores.height != mask.rows()) {
    fail(ErrorCode::kShapeMismatch, "scores and mask differ in extent");
  }
  std::vector<Cell> order = mask.hidden_cells();  // row-major
  std::stable_sort(order.begin(), order.end(),
                   [&](const Cell& a, const Cell& b) { return scores.at(a.x, a.y) > scores.at(b.x, b.y); });
  return order;
}

Mask limit_hidden(const Mask& mask, const RealMap& scores, std::size_t budget) {
  const std::vector<Cell> order = reconstruction_order(scores, mask);
  Mask out = mask;
  for (std::size_t i = 0; i + budget < order.size(); ++i) out.set(order[i], true);
  return out;
}

}  // namespace hideseek
