#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "toeplista/errors.hpp"

namespace toeplista {

using cplx = std::complex<double>;

// Complex vector or matrix with the real and imaginary parts kept in two
// separate row-major planes. Rank is 1 (shape [n]) or 2 (shape [rows, cols]).
class ComplexArray {
 public:
  ComplexArray() = default;
  explicit ComplexArray(std::size_t n);
  ComplexArray(std::size_t rows, std::size_t cols);
  ComplexArray(std::vector<std::size_t> shape, std::vector<double> re, std::vector<double> im);

  static ComplexArray vector(std::span<const cplx> values);
  static ComplexArray matrix(std::size_t rows, std::size_t cols, std::span<const cplx> row_major);
  static ComplexArray identity(std::size_t n);

  std::size_t rank() const noexcept { return rank_; }
  std::vector<std::size_t> shape() const;
  std::size_t size() const noexcept { return re_.size(); }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return re_.empty(); }

  std::span<const double> re() const noexcept { return re_; }
  std::span<const double> im() const noexcept { return im_; }
  std::span<double> re() noexcept { return re_; }
  std::span<double> im() noexcept { return im_; }

  cplx operator[](std::size_t i) const { return {re_[i], im_[i]}; }
  cplx operator()(std::size_t r, std::size_t c) const {
    return {re_[r * cols_ + c], im_[r * cols_ + c]};
  }
  void set(std::size_t i, cplx v) {
    re_[i] = v.real();
    im_[i] = v.imag();
  }
  void set(std::size_t r, std::size_t c, cplx v) { set(r * cols_ + c, v); }

  std::vector<cplx> to_complex() const;
  /// Same data, new shape (element count must match).
  ComplexArray reshaped(std::size_t rows, std::size_t cols) const;
  ComplexArray flattened() const;

  bool all_finite() const noexcept;

  friend bool operator==(const ComplexArray& a, const ComplexArray& b) = default;

 private:
  std::size_t rank_ = 1;
  std::size_t rows_ = 0;
  std::size_t cols_ = 1;
  std::vector<double> re_;
  std::vector<double> im_;
};

/// Soft-threshold level; always non-negative.
class Threshold {
 public:
  explicit Threshold(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

struct LipschitzEstimate {
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// W x with the complex product expanded into four real plane products.
ComplexArray matvec(const ComplexArray& w, const ComplexArray& x);
/// W^H x.
ComplexArray matvec_adjoint(const ComplexArray& w, const ComplexArray& x);
ComplexArray matmul(const ComplexArray& a, const ComplexArray& b);
ComplexArray adjoint(const ComplexArray& w);

/// x * (1 - theta / max(|x|, theta)); entries with |x| <= theta become exactly 0.
ComplexArray soft_threshold(const ComplexArray& x, Threshold theta);

/// Largest eigenvalue of Phi^H Phi by power iteration. The Rayleigh quotient
/// is reported, so the estimate never exceeds the true value.
LipschitzEstimate lipschitz_constant(const ComplexArray& phi, double tol = 1e-8,
                                     std::size_t max_iter = 500);

double squared_norm(const ComplexArray& x);
double norm(const ComplexArray& x);
double l1_norm(const ComplexArray& x);
double max_abs(const ComplexArray& x);

ComplexArray operator+(const ComplexArray& a, const ComplexArray& b);
ComplexArray operator-(const ComplexArray& a, const ComplexArray& b);
ComplexArray operator*(cplx s, const ComplexArray& a);

void require_same_shape(const ComplexArray& a, const ComplexArray& b, const char* where);

}  // namespace toeplista
