#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "toeplista/complex_array.hpp"

namespace test_support {

using toeplista::ComplexArray;
using toeplista::cplx;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline ComplexArray random_vector(std::size_t n, std::mt19937_64& g, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  ComplexArray a(n);
  for (std::size_t i = 0; i < n; ++i) a.set(i, {nd(g), nd(g)});
  return a;
}

inline ComplexArray random_matrix(std::size_t r, std::size_t c, std::mt19937_64& g, double scale = 1.0) {
  return random_vector(r * c, g, scale).reshaped(r, c);
}

inline double max_abs_diff(const ComplexArray& a, const ComplexArray& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// ||a - b|| / max(||b||, 1e-300)
inline double rel_diff(const ComplexArray& a, const ComplexArray& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

// Dense M x M matrix-vector product written as plain loops over std::complex.
inline std::vector<cplx> loop_matvec(const ComplexArray& w, const ComplexArray& x) {
  std::vector<cplx> out(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t k = 0; k < w.cols(); ++k) out[i] += w(i, k) * x[k];
  }
  return out;
}

}  // namespace test_support
