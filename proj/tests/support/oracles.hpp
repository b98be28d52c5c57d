#pragma once

// Independent reference computations the tests compare the library against.
// None of these call into the code under test beyond plain data access.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <queue>
#include <vector>

#include "hideseek/image.hpp"
#include "hideseek/mask.hpp"

namespace oracle {

/// Direct O(N^4) evaluation of F(u, v) = sum_x sum_y X(x, y) e^{-i 2 pi (ux/w + vy/h)};
/// layout (c * h + v) * w + u.
inline std::vector<std::complex<double>> brute_dft(const hideseek::ImageTensor& img) {
  const int w = img.width(), h = img.height();
  std::vector<std::complex<double>> out(static_cast<std::size_t>(img.channels()) * w * h);
  for (int c = 0; c < img.channels(); ++c)
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        std::complex<double> s = 0.0;
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            const double phase = -2.0 * std::numbers::pi * (static_cast<double>(u) * x / w + static_cast<double>(v) * y / h);
            s += img.at(c, x, y) * std::complex<double>(std::cos(phase), std::sin(phase));
          }
        out[(static_cast<std::size_t>(c) * h + v) * w + u] = s;
      }
  return out;
}

/// Central difference of f along every coordinate of x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double step = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = f(x);
    x[i] = keep - step;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

/// Worst |a - b| / max(|a|, |b|, floor) over two gradients.
inline double worst_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

/// P(X >= k), X ~ Binomial(n, 1/2), from exact integer binomial coefficients
/// (n <= 62).
inline double binomial_tail(int n, int k) {
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  std::uint64_t c = 1;  // C(n, 0)
  std::uint64_t total = 0;
  for (int j = 0; j <= n; ++j) {
    if (j >= k) total += c;
    c = c * static_cast<std::uint64_t>(n - j) / static_cast<std::uint64_t>(j + 1);
  }
  return static_cast<double>(total) / std::ldexp(1.0, n);
}

/// Smallest d with P(|X - n/2| <= d) >= coverage, X ~ Binomial(n, 1/2), in
/// counts (n even).
inline int binomial_half_width(int n, double coverage) {
  for (int d = 0;; ++d) {
    const double outside = 2.0 * binomial_tail(n, n / 2 + d + 1);
    if (1.0 - outside >= coverage) return d;
  }
}

/// Largest 4-adjacency independent set of a cols x rows grid by exhaustive
/// subset enumeration (cols * rows <= 20).
inline int brute_max_independent(int cols, int rows) {
  const int n = cols * rows;
  int best = 0;
  for (std::uint32_t s = 0; s < (1u << n); ++s) {
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      if (!(s >> i & 1u)) continue;
      const int x = i % cols, y = i / cols;
      if (x + 1 < cols && (s >> (i + 1) & 1u)) ok = false;
      if (y + 1 < rows && (s >> (i + cols) & 1u)) ok = false;
    }
    if (ok) best = std::max(best, std::popcount(s));
  }
  return best;
}

/// Number of 4-connected components among hidden cells (flood fill).
inline int hidden_components(const hideseek::Mask& m) {
  std::vector<int> seen(m.cell_count(), 0);
  int comps = 0;
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x) {
      if (m.visible(x, y) || seen[static_cast<std::size_t>(y) * m.cols() + x]) continue;
      ++comps;
      std::queue<std::pair<int, int>> q;
      q.push({x, y});
      seen[static_cast<std::size_t>(y) * m.cols() + x] = 1;
      while (!q.empty()) {
        auto [cx, cy] = q.front();
        q.pop();
        const int dx[] = {-1, 1, 0, 0}, dy[] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
          const int nx = cx + dx[d], ny = cy + dy[d];
          if (nx < 0 || ny < 0 || nx >= m.cols() || ny >= m.rows()) continue;
          const std::size_t k = static_cast<std::size_t>(ny) * m.cols() + nx;
          if (m.visible(nx, ny) || seen[k]) continue;
          seen[k] = 1;
          q.push({nx, ny});
        }
      }
    }
  return comps;
}

/// True when no two hidden cells share an edge.
inline bool hidden_independent(const hideseek::Mask& m) {
  for (int y = 0; y < m.rows(); ++y)
    for (int x = 0; x < m.cols(); ++x) {
      if (m.visible(x, y)) continue;
      if (x + 1 < m.cols() && !m.visible(x + 1, y)) return false;
      if (y + 1 < m.rows() && !m.visible(x, y + 1)) return false;
    }
  return true;
}

/// max / min of sum_i a_i * y_{perm(i)} over all permutations.
struct PermutationExtremes {
  double max = 0.0;
  double min = 0.0;
  double identity = 0.0;
};

inline PermutationExtremes enumerate_pairings(const std::vector<double>& a, const std::vector<double>& y) {
  std::vector<std::size_t> p(a.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = i;
  PermutationExtremes e{-1e300, 1e300, 0.0};
  bool first = true;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += a[i] * y[p[i]];
    if (first) e.identity = s, first = false;
    e.max = std::max(e.max, s);
    e.min = std::min(e.min, s);
  } while (std::next_permutation(p.begin(), p.end()));
  return e;
}

/// 20 log10(peak / rmse) straight from the definition.
inline double psnr(const hideseek::ImageTensor& a, const hideseek::ImageTensor& b, double peak) {
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  return 20.0 * std::log10(peak / std::sqrt(mse));
}

}  // namespace oracle
