#include "toeplista/complex_array.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace toeplista {

ComplexArray::ComplexArray(std::size_t n) : rank_(1), rows_(n), cols_(1), re_(n), im_(n) {}

ComplexArray::ComplexArray(std::size_t rows, std::size_t cols)
    : rank_(2), rows_(rows), cols_(cols), re_(rows * cols), im_(rows * cols) {}

ComplexArray::ComplexArray(std::vector<std::size_t> shape, std::vector<double> re,
                           std::vector<double> im)
    : re_(std::move(re)), im_(std::move(im)) {
  if (shape.empty() || shape.size() > 2) {
    throw DimensionError("ComplexArray: rank must be 1 or 2");
  }
  rank_ = shape.size();
  rows_ = shape[0];
  cols_ = rank_ == 2 ? shape[1] : 1;
  if (re_.size() != rows_ * cols_ || im_.size() != re_.size()) {
    throw DimensionError("ComplexArray: plane sizes do not match shape");
  }
}

ComplexArray ComplexArray::vector(std::span<const cplx> values) {
  ComplexArray out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.set(i, values[i]);
  return out;
}

ComplexArray ComplexArray::matrix(std::size_t rows, std::size_t cols,
                                  std::span<const cplx> row_major) {
  if (row_major.size() != rows * cols) {
    throw DimensionError("ComplexArray::matrix: element count does not match shape");
  }
  ComplexArray out(rows, cols);
  for (std::size_t i = 0; i < row_major.size(); ++i) out.set(i, row_major[i]);
  return out;
}

ComplexArray ComplexArray::identity(std::size_t n) {
  ComplexArray out(n, n);
  for (std::size_t i = 0; i < n; ++i) out.re_[i * n + i] = 1.0;
  return out;
}

std::vector<std::size_t> ComplexArray::shape() const {
  if (rank_ == 1) return {rows_};
  return {rows_, cols_};
}

std::vector<cplx> ComplexArray::to_complex() const {
  std::vector<cplx> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {re_[i], im_[i]};
  return out;
}

ComplexArray ComplexArray::reshaped(std::size_t rows, std::size_t cols) const {
  if (rows * cols != size()) throw DimensionError("reshaped: element count changes");
  ComplexArray out = *this;
  out.rank_ = 2;
  out.rows_ = rows;
  out.cols_ = cols;
  return out;
}

ComplexArray ComplexArray::flattened() const {
  ComplexArray out = *this;
  out.rank_ = 1;
  out.rows_ = size();
  out.cols_ = 1;
  return out;
}

bool ComplexArray::all_finite() const noexcept {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(re_.begin(), re_.end(), finite) && std::all_of(im_.begin(), im_.end(), finite);
}

Threshold::Threshold(double value) : value_(value) {
  if (!(value >= 0.0)) throw std::invalid_argument("Threshold must be non-negative");
}

void require_same_shape(const ComplexArray& a, const ComplexArray& b, const char* where) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(where) + ": shape mismatch");
  }
}

ComplexArray matvec(const ComplexArray& w, const ComplexArray& x) {
  if (w.rank() != 2 || x.size() != w.cols()) {
    throw DimensionError("matvec: matrix columns must equal vector length");
  }
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  ComplexArray out(m);
  auto wr = w.re();
  auto wi = w.im();
  auto xr = x.re();
  auto xi = x.im();
  auto yr = out.re();
  auto yi = out.im();
  for (std::size_t i = 0; i < m; ++i) {
    const double* rr = wr.data() + i * n;
    const double* ri = wi.data() + i * n;
    double acc_r = 0.0;
    double acc_i = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc_r += rr[k] * xr[k] - ri[k] * xi[k];
      acc_i += rr[k] * xi[k] + ri[k] * xr[k];
    }
    yr[i] = acc_r;
    yi[i] = acc_i;
  }
  return out;
}

ComplexArray matvec_adjoint(const ComplexArray& w, const ComplexArray& x) {
  if (w.rank() != 2 || x.size() != w.rows()) {
    throw DimensionError("matvec_adjoint: matrix rows must equal vector length");
  }
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  ComplexArray out(n);
  auto wr = w.re();
  auto wi = w.im();
  auto yr = out.re();
  auto yi = out.im();
  // Row-wise accumulation keeps the inner loop contiguous.
  for (std::size_t i = 0; i < m; ++i) {
    const double xr = x.re()[i];
    const double xi = x.im()[i];
    const double* rr = wr.data() + i * n;
    const double* ri = wi.data() + i * n;
    for (std::size_t k = 0; k < n; ++k) {
      // conj(w) * x
      yr[k] += rr[k] * xr + ri[k] * xi;
      yi[k] += rr[k] * xi - ri[k] * xr;
    }
  }
  return out;
}

ComplexArray matmul(const ComplexArray& a, const ComplexArray& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ");
  }
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  ComplexArray out(m, n);
  auto ar = a.re();
  auto ai = a.im();
  auto br = b.re();
  auto bi = b.im();
  auto cr = out.re();
  auto ci = out.im();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xr = ar[i * k + p];
      const double xi = ai[i * k + p];
      if (xr == 0.0 && xi == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        cr[i * n + j] += xr * br[p * n + j] - xi * bi[p * n + j];
        ci[i * n + j] += xr * bi[p * n + j] + xi * br[p * n + j];
      }
    }
  }
  return out;
}

ComplexArray adjoint(const ComplexArray& w) {
  if (w.rank() != 2) throw DimensionError("adjoint: expects a matrix");
  ComplexArray out(w.cols(), w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) out.set(j, i, std::conj(w(i, j)));
  }
  return out;
}

ComplexArray soft_threshold(const ComplexArray& x, Threshold theta) {
  ComplexArray out = x;
  const double t = theta.value();
  if (t == 0.0) return out;
  auto r = out.re();
  auto im = out.im();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double mag = std::hypot(r[i], im[i]);
    if (mag <= t) {
      r[i] = 0.0;
      im[i] = 0.0;
    } else {
      const double scale = 1.0 - t / mag;
      r[i] *= scale;
      im[i] *= scale;
    }
  }
  return out;
}

LipschitzEstimate lipschitz_constant(const ComplexArray& phi, double tol, std::size_t max_iter) {
  if (phi.rank() != 2 || phi.empty()) throw DimensionError("lipschitz_constant: expects a matrix");
  if (!(tol > 0.0)) throw std::invalid_argument("lipschitz_constant: tol must be positive");
  const std::size_t n = phi.cols();

  ComplexArray v(n);
  std::fill(v.re().begin(), v.re().end(), 1.0);
  ComplexArray pv = matvec(phi, v);
  // The all-ones vector lies in the null space of any partial Fourier matrix
  // that skips row 0; fall back to a fixed pseudo-random start in that case.
  if (squared_norm(pv) <= 1e-24 * squared_norm(v) * static_cast<double>(phi.size())) {
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) v.set(i, {g(rng), g(rng)});
    pv = matvec(phi, v);
  }
  if (squared_norm(pv) == 0.0) throw std::invalid_argument("lipschitz_constant: Phi is zero");

  LipschitzEstimate est;
  double prev = squared_norm(pv) / squared_norm(v);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    ComplexArray w = matvec_adjoint(phi, pv);
    const double wn = norm(w);
    if (wn == 0.0) break;
    v = cplx(1.0 / wn) * w;
    pv = matvec(phi, v);
    const double rq = squared_norm(pv);  // ||v|| == 1
    est.value = rq;
    est.iterations = it;
    if (std::abs(rq - prev) <= tol * rq) {
      est.converged = true;
      return est;
    }
    prev = rq;
  }
  return est;
}

double squared_norm(const ComplexArray& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.re()[i] * x.re()[i] + x.im()[i] * x.im()[i];
  return s;
}

double norm(const ComplexArray& x) { return std::sqrt(squared_norm(x)); }

double l1_norm(const ComplexArray& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::hypot(x.re()[i], x.im()[i]);
  return s;
}

double max_abs(const ComplexArray& x) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::hypot(x.re()[i], x.im()[i]));
  return m;
}

ComplexArray operator+(const ComplexArray& a, const ComplexArray& b) {
  require_same_shape(a, b, "operator+");
  ComplexArray out = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.re()[i] += b.re()[i];
    out.im()[i] += b.im()[i];
  }
  return out;
}

ComplexArray operator-(const ComplexArray& a, const ComplexArray& b) {
  require_same_shape(a, b, "operator-");
  ComplexArray out = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.re()[i] -= b.re()[i];
    out.im()[i] -= b.im()[i];
  }
  return out;
}

ComplexArray operator*(cplx s, const ComplexArray& a) {
  ComplexArray out = a;
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, s * a[i]);
  return out;
}

}  // namespace toeplista
