#include "toeplista/spectral.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace toeplista {

ToeplitzVec::ToeplitzVec(std::size_t m) : m_(m), h_(m == 0 ? 0 : 2 * m - 1) {
  if (m == 0) throw std::invalid_argument("ToeplitzVec: grid size must be positive");
}

ToeplitzVec::ToeplitzVec(std::size_t m, ComplexArray h) : m_(m), h_(std::move(h)) {
  if (m == 0 || h_.size() != 2 * m - 1) {
    throw DimensionError("ToeplitzVec: generator length must be 2M-1");
  }
  h_ = h_.flattened();
}

ToeplitzMat2D::ToeplitzMat2D(std::size_t m1, std::size_t m2)
    : m1_(m1), m2_(m2), h_(m1 == 0 ? 0 : 2 * m1 - 1, m2 == 0 ? 0 : 2 * m2 - 1) {
  if (m1 == 0 || m2 == 0) throw std::invalid_argument("ToeplitzMat2D: grid sizes must be positive");
}

ToeplitzMat2D::ToeplitzMat2D(std::size_t m1, std::size_t m2, ComplexArray h)
    : m1_(m1), m2_(m2), h_(std::move(h)) {
  if (m1 == 0 || m2 == 0 || h_.rank() != 2 || h_.rows() != 2 * m1 - 1 || h_.cols() != 2 * m2 - 1) {
    throw DimensionError("ToeplitzMat2D: generator shape must be (2M1-1) x (2M2-1)");
  }
}

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

FftPlan::FftPlan(std::size_t n) : n_(n), bitrev_(n), twiddle_(2 * n) {
  if (!is_power_of_two(n)) throw std::invalid_argument("FftPlan: length must be a power of two");
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
    bitrev_[i] = r;
  }
  for (std::size_t half = 1; half < n; half <<= 1) {
    for (std::size_t k = 0; k < half; ++k) {
      const double ang = std::numbers::pi * static_cast<double>(k) / static_cast<double>(half);
      twiddle_[2 * (half + k)] = std::cos(ang);
      twiddle_[2 * (half + k) + 1] = std::sin(ang);
    }
  }
}

void FftPlan::transform(std::span<double> re, std::span<double> im, bool inverse) const {
  if (re.size() != n_ || im.size() != n_) throw DimensionError("FftPlan: buffer length mismatch");
  // Butterflies run on an interleaved (re, im) copy loaded in bit-reversed
  // order: fewer memory streams than the split planes.
  thread_local std::vector<double> work;
  work.resize(2 * n_);
  double* z = work.data();
  for (std::size_t i = 0; i < n_; ++i) {
    z[2 * i] = re[bitrev_[i]];
    z[2 * i + 1] = im[bitrev_[i]];
  }
  const double sign = inverse ? 1.0 : -1.0;
  std::size_t stages = 0;
  while ((std::size_t{1} << stages) < n_) ++stages;
  std::size_t h = 1;  // half-span of the next radix-2 stage
  if (stages % 2 == 1) {
    for (std::size_t a = 0; a < 2 * n_; a += 4) {
      const double tr = z[a + 2];
      const double ti = z[a + 3];
      z[a + 2] = z[a] - tr;
      z[a + 3] = z[a + 1] - ti;
      z[a] += tr;
      z[a + 1] += ti;
    }
    h = 2;
  }
  // Two radix-2 stages (half-spans h and 2h) per pass over the data. The
  // second stage's upper twiddle is the lower one rotated by sign * j.
  for (; h < n_; h *= 4) {
    const double* w1 = twiddle_.data() + 2 * h;
    const double* w2 = twiddle_.data() + 4 * h;
    for (std::size_t start = 0; start < n_; start += 4 * h) {
      double* p0 = z + 2 * start;
      double* p1 = p0 + 2 * h;
      double* p2 = p1 + 2 * h;
      double* p3 = p2 + 2 * h;
      for (std::size_t k = 0; k < h; ++k) {
        const double w1r = w1[2 * k];
        const double w1i = sign * w1[2 * k + 1];
        const double w2r = w2[2 * k];
        const double w2i = sign * w2[2 * k + 1];
        const std::size_t o = 2 * k;

        const double t1r = w1r * p1[o] - w1i * p1[o + 1];
        const double t1i = w1r * p1[o + 1] + w1i * p1[o];
        const double a0r = p0[o] + t1r;
        const double a0i = p0[o + 1] + t1i;
        const double a1r = p0[o] - t1r;
        const double a1i = p0[o + 1] - t1i;
        const double t3r = w1r * p3[o] - w1i * p3[o + 1];
        const double t3i = w1r * p3[o + 1] + w1i * p3[o];
        const double a2r = p2[o] + t3r;
        const double a2i = p2[o + 1] + t3i;
        const double a3r = p2[o] - t3r;
        const double a3i = p2[o + 1] - t3i;

        const double u2r = w2r * a2r - w2i * a2i;
        const double u2i = w2r * a2i + w2i * a2r;
        const double v3r = w2r * a3r - w2i * a3i;
        const double v3i = w2r * a3i + w2i * a3r;
        const double u3r = -sign * v3i;
        const double u3i = sign * v3r;

        p0[o] = a0r + u2r;
        p0[o + 1] = a0i + u2i;
        p2[o] = a0r - u2r;
        p2[o + 1] = a0i - u2i;
        p1[o] = a1r + u3r;
        p1[o + 1] = a1i + u3i;
        p3[o] = a1r - u3r;
        p3[o + 1] = a1i - u3i;
      }
    }
  }
  const double scale = inverse ? 1.0 / static_cast<double>(n_) : 1.0;
  for (std::size_t i = 0; i < n_; ++i) {
    re[i] = z[2 * i] * scale;
    im[i] = z[2 * i + 1] * scale;
  }
}

void FftPlan::forward(std::span<double> re, std::span<double> im) const {
  transform(re, im, false);
}

void FftPlan::inverse(std::span<double> re, std::span<double> im) const {
  transform(re, im, true);
}

std::shared_ptr<const FftPlan> fft_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const FftPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<const FftPlan>(n);
  cache.emplace(n, plan);
  return plan;
}

namespace {

ComplexArray padded(const ComplexArray& x, std::size_t n, const char* where) {
  if (!is_power_of_two(n)) throw std::invalid_argument(std::string(where) + ": n must be a power of two");
  if (n < x.size()) throw std::invalid_argument(std::string(where) + ": n shorter than input");
  ComplexArray out(n);
  std::copy(x.re().begin(), x.re().end(), out.re().begin());
  std::copy(x.im().begin(), x.im().end(), out.im().begin());
  return out;
}

ComplexArray padded2(const ComplexArray& x, std::size_t n1, std::size_t n2, const char* where) {
  if (x.rank() != 2) throw DimensionError(std::string(where) + ": expects a matrix");
  if (!is_power_of_two(n1) || !is_power_of_two(n2)) {
    throw std::invalid_argument(std::string(where) + ": sizes must be powers of two");
  }
  if (n1 < x.rows() || n2 < x.cols()) throw std::invalid_argument(std::string(where) + ": size too small");
  ComplexArray out(n1, n2);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out.set(r, c, x(r, c));
  }
  return out;
}

void transform2(ComplexArray& a, bool inverse) {
  const std::size_t n1 = a.rows();
  const std::size_t n2 = a.cols();
  auto row_plan = fft_plan(n2);
  for (std::size_t r = 0; r < n1; ++r) {
    auto re = a.re().subspan(r * n2, n2);
    auto im = a.im().subspan(r * n2, n2);
    inverse ? row_plan->inverse(re, im) : row_plan->forward(re, im);
  }
  auto col_plan = fft_plan(n1);
  std::vector<double> cr(n1);
  std::vector<double> ci(n1);
  for (std::size_t c = 0; c < n2; ++c) {
    for (std::size_t r = 0; r < n1; ++r) {
      cr[r] = a.re()[r * n2 + c];
      ci[r] = a.im()[r * n2 + c];
    }
    inverse ? col_plan->inverse(cr, ci) : col_plan->forward(cr, ci);
    for (std::size_t r = 0; r < n1; ++r) {
      a.re()[r * n2 + c] = cr[r];
      a.im()[r * n2 + c] = ci[r];
    }
  }
}

// c_q = sum_k a_{q-k} b_k for q in [start, start + count), direct.
ComplexArray conv_window_direct(std::span<const double> ar, std::span<const double> ai,
                                std::span<const double> br, std::span<const double> bi,
                                std::size_t start, std::size_t count) {
  ComplexArray out(count);
  const auto na = static_cast<std::ptrdiff_t>(ar.size());
  const auto nb = static_cast<std::ptrdiff_t>(br.size());
  for (std::size_t o = 0; o < count; ++o) {
    const auto q = static_cast<std::ptrdiff_t>(start + o);
    // need 0 <= q-k < na and 0 <= k < nb
    const std::ptrdiff_t k0 = std::max<std::ptrdiff_t>(0, q - na + 1);
    const std::ptrdiff_t k1 = std::min<std::ptrdiff_t>(nb - 1, q);
    double sr = 0.0;
    double si = 0.0;
    for (std::ptrdiff_t k = k0; k <= k1; ++k) {
      const double hr = ar[static_cast<std::size_t>(q - k)];
      const double hi = ai[static_cast<std::size_t>(q - k)];
      sr += hr * br[static_cast<std::size_t>(k)] - hi * bi[static_cast<std::size_t>(k)];
      si += hr * bi[static_cast<std::size_t>(k)] + hi * br[static_cast<std::size_t>(k)];
    }
    out.re()[o] = sr;
    out.im()[o] = si;
  }
  return out;
}

// Smallest power-of-two circular length that leaves outputs [start, start + count)
// of a linear convolution of total length full unaliased: the window must fit
// and the wrapped tail, landing on [0, full - n), must stay below start.
std::size_t window_fft_length(std::size_t full, std::size_t start, std::size_t count) {
  return next_power_of_two(std::max(start + count, full - std::min(full, start)));
}

ComplexArray conv_window_fft(const ComplexArray& a, const ComplexArray& b, std::size_t start,
                             std::size_t count) {
  const std::size_t n = window_fft_length(a.size() + b.size() - 1, start, count);
  auto plan = fft_plan(n);
  // Per-thread scratch reused across calls; large fresh allocations cost page faults on every call.
  thread_local std::vector<double> ar;
  thread_local std::vector<double> ai;
  thread_local std::vector<double> br;
  thread_local std::vector<double> bi;
  const auto load = [n](std::vector<double>& re, std::vector<double>& im, const ComplexArray& v) {
    re.assign(n, 0.0);
    im.assign(n, 0.0);
    std::copy(v.re().begin(), v.re().end(), re.begin());
    std::copy(v.im().begin(), v.im().end(), im.begin());
  };
  load(ar, ai, a);
  load(br, bi, b);
  plan->forward(ar, ai);
  plan->forward(br, bi);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ar[i] * br[i] - ai[i] * bi[i];
    const double m = ar[i] * bi[i] + ai[i] * br[i];
    ar[i] = r;
    ai[i] = m;
  }
  plan->inverse(ar, ai);
  ComplexArray out(count);
  std::copy_n(ar.begin() + static_cast<std::ptrdiff_t>(start), count, out.re().begin());
  std::copy_n(ai.begin() + static_cast<std::ptrdiff_t>(start), count, out.im().begin());
  return out;
}

bool prefer_fft(std::size_t count, std::size_t inner, std::size_t full_len) {
  const std::size_t n = next_power_of_two(full_len);
  std::size_t lg = 0;
  while ((std::size_t{1} << lg) < n) ++lg;
  return count * inner > 4 * n * lg;
}

// 2D windowed linear convolution:
// c_{s,t} = sum_{i,j} a_{s-i, t-j} b_{i,j}, for s in [s0, s0+cs), t in [t0, t0+ct).
ComplexArray conv2_window_direct(const ComplexArray& a, const ComplexArray& b, std::size_t s0,
                                 std::size_t cs, std::size_t t0, std::size_t ct) {
  ComplexArray out(cs, ct);
  const auto ra = static_cast<std::ptrdiff_t>(a.rows());
  const auto ca = static_cast<std::ptrdiff_t>(a.cols());
  const auto rb = static_cast<std::ptrdiff_t>(b.rows());
  const auto cb = static_cast<std::ptrdiff_t>(b.cols());
  for (std::size_t os = 0; os < cs; ++os) {
    const auto s = static_cast<std::ptrdiff_t>(s0 + os);
    const std::ptrdiff_t i0 = std::max<std::ptrdiff_t>(0, s - ra + 1);
    const std::ptrdiff_t i1 = std::min<std::ptrdiff_t>(rb - 1, s);
    for (std::size_t ot = 0; ot < ct; ++ot) {
      const auto t = static_cast<std::ptrdiff_t>(t0 + ot);
      const std::ptrdiff_t j0 = std::max<std::ptrdiff_t>(0, t - ca + 1);
      const std::ptrdiff_t j1 = std::min<std::ptrdiff_t>(cb - 1, t);
      double sr = 0.0;
      double si = 0.0;
      for (std::ptrdiff_t i = i0; i <= i1; ++i) {
        const std::size_t arow = static_cast<std::size_t>((s - i) * ca);
        const std::size_t brow = static_cast<std::size_t>(i * cb);
        for (std::ptrdiff_t j = j0; j <= j1; ++j) {
          const std::size_t ia = arow + static_cast<std::size_t>(t - j);
          const std::size_t ib = brow + static_cast<std::size_t>(j);
          sr += a.re()[ia] * b.re()[ib] - a.im()[ia] * b.im()[ib];
          si += a.re()[ia] * b.im()[ib] + a.im()[ia] * b.re()[ib];
        }
      }
      out.re()[os * ct + ot] = sr;
      out.im()[os * ct + ot] = si;
    }
  }
  return out;
}

ComplexArray conv2_window_fft(const ComplexArray& a, const ComplexArray& b, std::size_t s0,
                              std::size_t cs, std::size_t t0, std::size_t ct) {
  const std::size_t n1 = window_fft_length(a.rows() + b.rows() - 1, s0, cs);
  const std::size_t n2 = window_fft_length(a.cols() + b.cols() - 1, t0, ct);
  ComplexArray fa = padded2(a, n1, n2, "conv2d");
  ComplexArray fb = padded2(b, n1, n2, "conv2d");
  transform2(fa, false);
  transform2(fb, false);
  for (std::size_t i = 0; i < fa.size(); ++i) fa.set(i, fa[i] * fb[i]);
  transform2(fa, true);
  ComplexArray out(cs, ct);
  for (std::size_t s = 0; s < cs; ++s) {
    for (std::size_t t = 0; t < ct; ++t) out.set(s, t, fa(s0 + s, t0 + t));
  }
  return out;
}

ComplexArray reversed_conj(const ComplexArray& b) {
  ComplexArray out(b.size());
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) out.set(i, std::conj(b[n - 1 - i]));
  return out;
}

ComplexArray reversed_conj2d(const ComplexArray& b) {
  ComplexArray out(b.rows(), b.cols());
  for (std::size_t r = 0; r < b.rows(); ++r) {
    for (std::size_t c = 0; c < b.cols(); ++c) {
      out.set(r, c, std::conj(b(b.rows() - 1 - r, b.cols() - 1 - c)));
    }
  }
  return out;
}

void check_grid(const ToeplitzMat2D& t, const ComplexArray& x, const char* where) {
  if (x.rank() != 2 || x.rows() != t.m1() || x.cols() != t.m2()) {
    throw DimensionError(std::string(where) + ": grid must be M1 x M2");
  }
}

}  // namespace

ComplexArray fft(const ComplexArray& x, std::size_t n) {
  ComplexArray out = padded(x, n, "fft");
  fft_plan(n)->forward(out.re(), out.im());
  return out;
}

ComplexArray ifft(const ComplexArray& x, std::size_t n) {
  ComplexArray out = padded(x, n, "ifft");
  fft_plan(n)->inverse(out.re(), out.im());
  return out;
}

ComplexArray fft2(const ComplexArray& x, std::size_t n1, std::size_t n2) {
  ComplexArray out = padded2(x, n1, n2, "fft2");
  transform2(out, false);
  return out;
}

ComplexArray ifft2(const ComplexArray& x, std::size_t n1, std::size_t n2) {
  ComplexArray out = padded2(x, n1, n2, "ifft2");
  transform2(out, true);
  return out;
}

ComplexArray conv1d(const ToeplitzVec& t, const ComplexArray& x) {
  const std::size_t m = t.grid_size();
  if (x.size() != m) throw DimensionError("conv1d: signal length must equal M");
  return conv_window_direct(t.coeffs().re(), t.coeffs().im(), x.re(), x.im(), m - 1, m);
}

ComplexArray conv1d_fft(const ToeplitzVec& t, const ComplexArray& x) {
  const std::size_t m = t.grid_size();
  if (x.size() != m) throw DimensionError("conv1d_fft: signal length must equal M");
  return conv_window_fft(t.coeffs(), x, m - 1, m);
}

ComplexArray convolve(const ToeplitzVec& t, const ComplexArray& x) {
  const std::size_t m = t.grid_size();
  return prefer_fft(m, m, 2 * m - 1) ? conv1d_fft(t, x) : conv1d(t, x);
}

ComplexArray conv2d(const ToeplitzMat2D& t, const ComplexArray& x) {
  check_grid(t, x, "conv2d");
  return conv2_window_direct(t.coeffs(), x, t.m1() - 1, t.m1(), t.m2() - 1, t.m2());
}

ComplexArray conv2d_fft(const ToeplitzMat2D& t, const ComplexArray& x) {
  check_grid(t, x, "conv2d_fft");
  return conv2_window_fft(t.coeffs(), x, t.m1() - 1, t.m1(), t.m2() - 1, t.m2());
}

ComplexArray convolve(const ToeplitzMat2D& t, const ComplexArray& x) {
  const std::size_t m = t.m1() * t.m2();
  const std::size_t full = (2 * t.m1() - 1) * (2 * t.m2() - 1);
  return prefer_fft(m, m, full) ? conv2d_fft(t, x) : conv2d(t, x);
}

ComplexArray toeplitz_expand(const ToeplitzVec& t) {
  const std::size_t m = t.grid_size();
  ComplexArray out(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      out.set(i, k, t.at(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(k)));
    }
  }
  return out;
}

ComplexArray dbt_expand(const ToeplitzMat2D& t) {
  const std::size_t m1 = t.m1();
  const std::size_t m2 = t.m2();
  ComplexArray out(m1 * m2, m1 * m2);
  for (std::size_t s = 0; s < m1; ++s) {
    for (std::size_t i = 0; i < m1; ++i) {
      const auto a = static_cast<std::ptrdiff_t>(s) - static_cast<std::ptrdiff_t>(i);
      for (std::size_t u = 0; u < m2; ++u) {
        for (std::size_t j = 0; j < m2; ++j) {
          const auto b = static_cast<std::ptrdiff_t>(u) - static_cast<std::ptrdiff_t>(j);
          out.set(s * m2 + u, i * m2 + j, t.at(a, b));
        }
      }
    }
  }
  return out;
}

ToeplitzVec toeplitz_generator(const ComplexArray& w) {
  if (w.rank() != 2 || w.rows() != w.cols() || w.rows() == 0) {
    throw DimensionError("toeplitz_generator: expects a non-empty square matrix");
  }
  const std::size_t m = w.rows();
  ToeplitzVec t(m);
  for (std::size_t i = 0; i < m; ++i) t.set(static_cast<std::ptrdiff_t>(i), w(i, 0));
  for (std::size_t k = 1; k < m; ++k) t.set(-static_cast<std::ptrdiff_t>(k), w(0, k));
  return t;
}

ToeplitzMat2D dbt_generator(const ComplexArray& w, std::size_t m1, std::size_t m2) {
  if (w.rank() != 2 || w.rows() != m1 * m2 || w.cols() != m1 * m2) {
    throw DimensionError("dbt_generator: matrix must be (M1 M2) x (M1 M2)");
  }
  ToeplitzMat2D t(m1, m2);
  const auto sm1 = static_cast<std::ptrdiff_t>(m1);
  const auto sm2 = static_cast<std::ptrdiff_t>(m2);
  for (std::ptrdiff_t a = -(sm1 - 1); a < sm1; ++a) {
    // block (s, i) with s - i = a
    const std::size_t s = a >= 0 ? static_cast<std::size_t>(a) : 0;
    const std::size_t i = a >= 0 ? 0 : static_cast<std::size_t>(-a);
    for (std::ptrdiff_t b = -(sm2 - 1); b < sm2; ++b) {
      const std::size_t u = b >= 0 ? static_cast<std::size_t>(b) : 0;
      const std::size_t j = b >= 0 ? 0 : static_cast<std::size_t>(-b);
      t.set(a, b, w(s * m2 + u, i * m2 + j));
    }
  }
  return t;
}

ComplexArray conv_rect(const ComplexArray& h, const ComplexArray& x, std::size_t m) {
  const std::size_t n = x.size();
  if (n == 0 || h.size() != m + n - 1) throw DimensionError("conv_rect: kernel length must be M+N-1");
  if (prefer_fft(m, n, h.size() + n - 1)) return conv_window_fft(h, x, n - 1, m);
  return conv_window_direct(h.re(), h.im(), x.re(), x.im(), n - 1, m);
}

ComplexArray cross_correlate(const ComplexArray& a, const ComplexArray& b) {
  if (a.empty() || b.empty()) throw DimensionError("cross_correlate: empty operand");
  const ComplexArray r = reversed_conj(b);
  const std::size_t full = a.size() + b.size() - 1;
  if (prefer_fft(full, std::min(a.size(), b.size()), full)) return conv_window_fft(a, r, 0, full);
  return conv_window_direct(a.re(), a.im(), r.re(), r.im(), 0, full);
}

ComplexArray cross_correlate2d(const ComplexArray& a, const ComplexArray& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.empty() || b.empty()) {
    throw DimensionError("cross_correlate2d: expects non-empty matrices");
  }
  const ComplexArray r = reversed_conj2d(b);
  const std::size_t fr = a.rows() + b.rows() - 1;
  const std::size_t fc = a.cols() + b.cols() - 1;
  if (prefer_fft(fr * fc, std::min(a.size(), b.size()), fr * fc)) {
    return conv2_window_fft(a, r, 0, fr, 0, fc);
  }
  return conv2_window_direct(a, r, 0, fr, 0, fc);
}

}  // namespace toeplista
