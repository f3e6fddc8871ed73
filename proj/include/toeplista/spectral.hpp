#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "toeplista/complex_array.hpp"

namespace toeplista {

// Generator of an M x M Toeplitz matrix, [W]_{i,k} = h_{i-k}.
// Storage position p holds h_{p-(M-1)}, so h_0 sits at index M-1.
class ToeplitzVec {
 public:
  ToeplitzVec() = default;
  explicit ToeplitzVec(std::size_t m);
  ToeplitzVec(std::size_t m, ComplexArray h);

  std::size_t grid_size() const noexcept { return m_; }
  const ComplexArray& coeffs() const noexcept { return h_; }
  ComplexArray& coeffs() noexcept { return h_; }
  /// h_d for d in [-(M-1), M-1].
  cplx at(std::ptrdiff_t d) const { return h_[static_cast<std::size_t>(d + offset())]; }
  void set(std::ptrdiff_t d, cplx v) { h_.set(static_cast<std::size_t>(d + offset()), v); }

 private:
  std::ptrdiff_t offset() const noexcept { return static_cast<std::ptrdiff_t>(m_) - 1; }
  std::size_t m_ = 0;
  ComplexArray h_;
};

// Generator of a doubly-block Toeplitz matrix for an M1 x M2 grid.
// H has shape (2 M1 - 1) x (2 M2 - 1); entry (p, q) holds h_{p-(M1-1), q-(M2-1)}.
class ToeplitzMat2D {
 public:
  ToeplitzMat2D() = default;
  ToeplitzMat2D(std::size_t m1, std::size_t m2);
  ToeplitzMat2D(std::size_t m1, std::size_t m2, ComplexArray h);

  std::size_t m1() const noexcept { return m1_; }
  std::size_t m2() const noexcept { return m2_; }
  const ComplexArray& coeffs() const noexcept { return h_; }
  ComplexArray& coeffs() noexcept { return h_; }
  cplx at(std::ptrdiff_t a, std::ptrdiff_t b) const {
    return h_(static_cast<std::size_t>(a + static_cast<std::ptrdiff_t>(m1_) - 1),
              static_cast<std::size_t>(b + static_cast<std::ptrdiff_t>(m2_) - 1));
  }
  void set(std::ptrdiff_t a, std::ptrdiff_t b, cplx v) {
    h_.set(static_cast<std::size_t>(a + static_cast<std::ptrdiff_t>(m1_) - 1),
           static_cast<std::size_t>(b + static_cast<std::ptrdiff_t>(m2_) - 1), v);
  }

 private:
  std::size_t m1_ = 0;
  std::size_t m2_ = 0;
  ComplexArray h_;
};

// Radix-2 transform tables for one power-of-two length. Immutable once built.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  /// In-place transform of split planes. Forward uses e^{-j2pi kn/N}; the
  /// inverse uses e^{+j2pi kn/N} and scales by 1/N.
  void forward(std::span<double> re, std::span<double> im) const;
  void inverse(std::span<double> re, std::span<double> im) const;

 private:
  void transform(std::span<double> re, std::span<double> im, bool inverse) const;

  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  // (cos, sin) pairs; the stage of half-span h keeps its h twiddles at pairs [h, 2h).
  std::vector<double> twiddle_;
};

/// Shared plan for length n, built on first use.
std::shared_ptr<const FftPlan> fft_plan(std::size_t n);

bool is_power_of_two(std::size_t n) noexcept;
std::size_t next_power_of_two(std::size_t n) noexcept;

/// n-point DFT of x zero-padded to n (n must be a power of two, n >= len(x)).
ComplexArray fft(const ComplexArray& x, std::size_t n);
/// n-point inverse DFT (1/n scaling).
ComplexArray ifft(const ComplexArray& x, std::size_t n);
/// 2D DFT of a rows x cols matrix zero-padded to n1 x n2.
ComplexArray fft2(const ComplexArray& x, std::size_t n1, std::size_t n2);
ComplexArray ifft2(const ComplexArray& x, std::size_t n1, std::size_t n2);

/// [h * x]_i = sum_k h_{i-k} x_k, i in [0, M), by direct summation.
ComplexArray conv1d(const ToeplitzVec& t, const ComplexArray& x);
/// Same contract as conv1d, computed through zero-padded FFTs.
ComplexArray conv1d_fft(const ToeplitzVec& t, const ComplexArray& x);
/// Picks direct or FFT evaluation by size.
ComplexArray convolve(const ToeplitzVec& t, const ComplexArray& x);

/// [H * X]_{s,t} = sum_{i,j} h_{s-i,t-j} x_{i,j} on an M1 x M2 grid.
ComplexArray conv2d(const ToeplitzMat2D& t, const ComplexArray& x);
ComplexArray conv2d_fft(const ToeplitzMat2D& t, const ComplexArray& x);
ComplexArray convolve(const ToeplitzMat2D& t, const ComplexArray& x);

/// Dense M x M matrix with [W]_{i,k} = h_{i-k}.
ComplexArray toeplitz_expand(const ToeplitzVec& t);
/// Dense (M1 M2) x (M1 M2) matrix with W[s*M2 + t, i*M2 + j] = h_{s-i, t-j}:
/// an M1 x M1 block-Toeplitz arrangement of M2 x M2 Toeplitz blocks.
ComplexArray dbt_expand(const ToeplitzMat2D& t);

/// Reads h back from the first column and first row of a square matrix.
ToeplitzVec toeplitz_generator(const ComplexArray& w);
/// Reads H back from the first block row/column of a doubly-block Toeplitz matrix.
ToeplitzMat2D dbt_generator(const ComplexArray& w, std::size_t m1, std::size_t m2);

// Rectangular Toeplitz product used by the convolutional observation branch:
// out_i = sum_{k<n} h[i - k + (n-1)] x_k for i in [0, m), with len(h) = m + n - 1.
ComplexArray conv_rect(const ComplexArray& h, const ComplexArray& x, std::size_t m);

// Full linear cross-correlation c_d = sum_i a_{i+d} conj(b_i) for
// d in [-(len(b)-1), len(a)-1]; entry d sits at index d + len(b) - 1.
ComplexArray cross_correlate(const ComplexArray& a, const ComplexArray& b);
// 2D analogue over (rows, cols) grids; output shape (ra+rb-1) x (ca+cb-1).
ComplexArray cross_correlate2d(const ComplexArray& a, const ComplexArray& b);

}  // namespace toeplista
