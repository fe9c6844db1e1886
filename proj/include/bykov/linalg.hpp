#pragma once

// Tiny fixed-size dense helpers (Newton steps, Gram-Schmidt).

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

#include "bykov/error.hpp"

namespace bykov {

template <std::size_t N>
using Vector = std::array<double, N>;

template <std::size_t N>
using Matrix = std::array<std::array<double, N>, N>;

/// Solves a x = b by Gaussian elimination with partial pivoting.
template <std::size_t N>
Vector<N> solve(Matrix<N> a, Vector<N> b) {
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < N; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (a[piv][col] == 0.0 || !std::isfinite(a[piv][col])) throw SolverError("singular linear system");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < N; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < N; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  Vector<N> x{};
  for (std::size_t i = N; i-- > 0;) {
    double acc = b[i];
    for (std::size_t k = i + 1; k < N; ++k) acc -= a[i][k] * x[k];
    x[i] = acc / a[i][i];
  }
  return x;
}

template <std::size_t N>
double dot(const Vector<N>& a, const Vector<N>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t N>
Vector<N> sub(const Vector<N>& a, const Vector<N>& b) {
  Vector<N> d;
  for (std::size_t i = 0; i < N; ++i) d[i] = a[i] - b[i];
  return d;
}

template <std::size_t N>
double norm(const Vector<N>& a) {
  return std::sqrt(dot(a, a));
}

/// Modified Gram-Schmidt on the columns `cols` in place; returns the
/// diagonal of R (the stretch of each direction).
template <std::size_t N, std::size_t K>
std::array<double, K> gram_schmidt(std::array<Vector<N>, K>& cols) {
  std::array<double, K> r{};
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      const double p = dot(cols[k], cols[j]);
      for (std::size_t i = 0; i < N; ++i) cols[k][i] -= p * cols[j][i];
    }
    r[k] = norm(cols[k]);
    for (std::size_t i = 0; i < N; ++i) cols[k][i] /= r[k];
  }
  return r;
}

}  // namespace bykov
