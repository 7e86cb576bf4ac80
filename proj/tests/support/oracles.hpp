#pragma once

// Test-only oracles, kept independent of the library's solve paths: matrix
// inversion is hand-rolled Gauss-Jordan on plain vectors (no Eigen), and
// leakage is recovered by inverting the full joint covariance of (X, S_A)
// rather than through the Schur form the library uses.

#include "datamkt/gaussian.hpp"
#include "datamkt/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace datamkt::testing {

using DenseMatrix = std::vector<std::vector<double>>;

inline DenseMatrix gauss_jordan_inverse(DenseMatrix a) {
  const std::size_t n = a.size();
  DenseMatrix inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-14) {
      throw std::runtime_error("gauss_jordan_inverse: singular matrix");
    }
    std::swap(a[pivot], a[col]);
    std::swap(inv[pivot], inv[col]);
    const double d = a[col][col];
    for (std::size_t c = 0; c < n; ++c) {
      a[col][c] /= d;
      inv[col][c] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        a[r][c] -= f * a[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  return inv;
}

// Posterior variance of X_i given S_A by inverting the (n+k)-dimensional
// joint covariance of (X, S_A): the X-block of the joint precision matrix is
// the conditional precision, so invert it back to read off the variance.
inline double joint_conditioning_leakage(const GaussianMarket& market, const ActionProfile& a,
                                         int i) {
  const int n = market.size();
  std::vector<int> sharers;
  for (int j = 0; j < n; ++j) {
    if (a.shares(j)) sharers.push_back(j);
  }
  if (sharers.empty()) return 0.0;
  const std::size_t k = sharers.size();
  const std::size_t d = static_cast<std::size_t>(n) + k;

  DenseMatrix joint(d, std::vector<double>(d, 0.0));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) joint[r][c] = market.covariance(r, c);
  }
  for (std::size_t s = 0; s < k; ++s) {
    for (int c = 0; c < n; ++c) {
      joint[static_cast<std::size_t>(n) + s][static_cast<std::size_t>(c)] =
          market.covariance(sharers[s], c);
      joint[static_cast<std::size_t>(c)][static_cast<std::size_t>(n) + s] =
          market.covariance(c, sharers[s]);
    }
    for (std::size_t t = 0; t < k; ++t) {
      joint[static_cast<std::size_t>(n) + s][static_cast<std::size_t>(n) + t] =
          market.covariance(sharers[s], sharers[t]) + (s == t ? 1.0 : 0.0);
    }
  }

  const DenseMatrix precision = gauss_jordan_inverse(joint);
  DenseMatrix x_precision(static_cast<std::size_t>(n), std::vector<double>(n, 0.0));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      x_precision[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
          precision[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  const DenseMatrix posterior = gauss_jordan_inverse(x_precision);
  const auto ui = static_cast<std::size_t>(i);
  return market.variance(i) - posterior[ui][ui];
}

// Random correlation-shaped PSD matrix: Gram matrix of Gaussian rows,
// rescaled to variances in [0.25, 4].
inline GaussianMarket random_market(SplitMix64& rng, int n) {
  std::vector<std::vector<double>> a(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(n)));
  for (auto& row : a) {
    for (auto& x : row) x = rng.normal();
  }
  Eigen::MatrixXd sigma(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double dot = 0.0;
      for (int t = 0; t < n; ++t) {
        dot += a[static_cast<std::size_t>(r)][static_cast<std::size_t>(t)] *
               a[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)];
      }
      sigma(r, c) = dot;
    }
  }
  Eigen::VectorXd scale(n);
  for (int r = 0; r < n; ++r) {
    scale(r) = rng.uniform(0.5, 2.0) / std::sqrt(sigma(r, r));
  }
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) sigma(r, c) *= scale(r) * scale(c);
  }
  return GaussianMarket(sigma);
}

}  // namespace datamkt::testing
