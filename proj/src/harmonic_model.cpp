#include "toeplista/harmonic_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace toeplista {

namespace {

std::vector<cplx> unit_roots(std::size_t m) {
  std::vector<cplx> r(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
    r[k] = {std::cos(ang), std::sin(ang)};
  }
  return r;
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

ComplexArray fourier_matrix(std::size_t m) {
  if (m == 0) throw std::invalid_argument("fourier_matrix: M must be positive");
  const auto roots = unit_roots(m);
  ComplexArray f(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < m; ++k) f.set(i, k, roots[(i * k) % m]);
  }
  return f;
}

SamplingSet draw_sampling(std::size_t m, std::size_t n, std::uint64_t seed) {
  if (n > m) throw std::invalid_argument("draw_sampling: N exceeds M");
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(seed, 0x53414d50);  // "SAMP"
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, m - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return {std::move(idx), seed};
}

Dictionary::Dictionary(GridShape grid, SamplingSet sampling, bool materialize)
    : grid_(grid), sampling_(std::move(sampling)) {
  if (grid_.m1 == 0 || grid_.m2 == 0) throw std::invalid_argument("Dictionary: empty grid");
  if (!grid_.is_2d() && grid_.m2 != 1) throw DimensionError("Dictionary: 1D grid must have M2 = 1");
  const std::size_t m = grid_.total();
  if (sampling_.omega.size() > m) throw DimensionError("Dictionary: more samples than grid points");
  for (std::size_t i = 0; i < sampling_.omega.size(); ++i) {
    if (sampling_.omega[i] >= m) throw DimensionError("Dictionary: sample index out of range");
    if (i > 0 && sampling_.omega[i] <= sampling_.omega[i - 1]) {
      throw std::invalid_argument("Dictionary: sampling set must be sorted and distinct");
    }
  }
  roots1_ = unit_roots(grid_.m1);
  roots2_ = unit_roots(grid_.m2);
  if (materialize) phi_ = matrix();
}

cplx Dictionary::entry(std::size_t row, std::size_t col) const {
  const std::size_t w = sampling_.omega[row];
  if (!grid_.is_2d()) return roots1_[(w * col) % grid_.m1];
  // Row w of F_{M1} (x) F_{M2} is the Kronecker product of row w / M2 of
  // F_{M1} and row w % M2 of F_{M2}.
  const std::size_t r1 = w / grid_.m2;
  const std::size_t r2 = w % grid_.m2;
  const std::size_t c1 = col / grid_.m2;
  const std::size_t c2 = col % grid_.m2;
  return roots1_[(r1 * c1) % grid_.m1] * roots2_[(r2 * c2) % grid_.m2];
}

ComplexArray Dictionary::matrix() const {
  if (!phi_.empty()) return phi_;
  ComplexArray out(rows(), cols());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < cols(); ++c) out.set(r, c, entry(r, c));
  }
  return out;
}

ComplexArray Dictionary::apply(const ComplexArray& x) const {
  if (x.size() != cols()) throw DimensionError("Dictionary::apply: length must equal M");
  if (materialized()) return matvec(phi_, x);
  ComplexArray out(rows());
  for (std::size_t r = 0; r < rows(); ++r) {
    cplx acc = 0.0;
    for (std::size_t c = 0; c < cols(); ++c) acc += entry(r, c) * x[c];
    out.set(r, acc);
  }
  return out;
}

ComplexArray Dictionary::apply_adjoint(const ComplexArray& y) const {
  if (y.size() != rows()) throw DimensionError("Dictionary::apply_adjoint: length must equal N");
  if (materialized()) return matvec_adjoint(phi_, y);
  ComplexArray out(cols());
  for (std::size_t c = 0; c < cols(); ++c) {
    cplx acc = 0.0;
    for (std::size_t r = 0; r < rows(); ++r) acc += std::conj(entry(r, c)) * y[r];
    out.set(c, acc);
  }
  return out;
}

Dictionary build_dictionary(GridShape grid, SamplingSet sampling, bool materialize) {
  return Dictionary(grid, std::move(sampling), materialize);
}

ComplexArray gram(const Dictionary& d) {
  const ComplexArray phi = d.matrix();
  return matmul(adjoint(phi), phi);
}

ComplexArray gen_sparse_signal(std::size_t m, std::size_t k, std::uint64_t seed) {
  if (k > m) throw std::invalid_argument("gen_sparse_signal: K exceeds M");
  auto rng = make_rng(seed, 0x58535053);  // "XSPS"
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, m - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  ComplexArray x(m);
  for (std::size_t i = 0; i < k; ++i) {
    const double re = g(rng);
    const double im = g(rng);
    x.set(idx[i], {re, im});
  }
  return x;
}

ComplexArray synth_offgrid(const Dictionary& d, std::span<const std::size_t> grid_indices, double frac,
                           const ComplexArray& amps) {
  if (!(frac >= 0.0 && frac < 1.0)) throw std::invalid_argument("synth_offgrid: frac must lie in [0, 1)");
  if (amps.size() != grid_indices.size()) throw DimensionError("synth_offgrid: one amplitude per index");
  const GridShape& g = d.grid();
  for (auto m : grid_indices) {
    if (m >= g.total()) throw DimensionError("synth_offgrid: grid index out of range");
  }
  const double two_pi = 2.0 * std::numbers::pi;
  ComplexArray y(d.rows());
  for (std::size_t n = 0; n < d.rows(); ++n) {
    const std::size_t w = d.sampling().omega[n];
    cplx acc = 0.0;
    for (std::size_t k = 0; k < grid_indices.size(); ++k) {
      const std::size_t m = grid_indices[k];
      double phase = 0.0;
      if (!g.is_2d()) {
        phase = two_pi * (static_cast<double>((m * w) % g.m1) + frac * static_cast<double>(w)) /
                static_cast<double>(g.m1);
      } else {
        const std::size_t r1 = w / g.m2;
        const std::size_t r2 = w % g.m2;
        const std::size_t c1 = m / g.m2;
        const std::size_t c2 = m % g.m2;
        phase = two_pi * static_cast<double>((r1 * c1) % g.m1) / static_cast<double>(g.m1) +
                two_pi * (static_cast<double>((r2 * c2) % g.m2) + frac * static_cast<double>(r2)) /
                    static_cast<double>(g.m2);
      }
      acc += amps[k] * cplx(std::cos(phase), std::sin(phase));
    }
    y.set(n, acc);
  }
  return y;
}

ComplexArray add_noise(const ComplexArray& y, double sigma2, std::uint64_t seed) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("add_noise: sigma2 must be non-negative");
  if (sigma2 == 0.0) return y;
  auto rng = make_rng(seed, 0x4e4f4953);  // "NOIS"
  std::normal_distribution<double> g(0.0, std::sqrt(sigma2 / 2.0));
  ComplexArray out = y;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.re()[i] += g(rng);
    out.im()[i] += g(rng);
  }
  return out;
}

ComplexArray Dataset::observation(std::size_t i) const {
  ComplexArray out(Y.rows());
  for (std::size_t r = 0; r < Y.rows(); ++r) out.set(r, Y(r, i));
  return out;
}

ComplexArray Dataset::truth(std::size_t i) const {
  ComplexArray out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out.set(r, X(r, i));
  return out;
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw std::out_of_range("Dataset::slice: bad range");
  std::vector<ComplexArray> ys;
  std::vector<ComplexArray> xs;
  for (std::size_t i = begin; i < end; ++i) {
    ys.push_back(observation(i));
    xs.push_back(truth(i));
  }
  DatasetMeta meta = this->meta;
  return make_dataset(ys, xs, meta);
}

Dataset make_dataset(const std::vector<ComplexArray>& ys, const std::vector<ComplexArray>& xs,
                     DatasetMeta meta) {
  if (ys.size() != xs.size()) throw DimensionError("make_dataset: column counts differ");
  const std::size_t n = ys.size();
  const std::size_t n_obs = meta.n_obs;
  const std::size_t m = meta.grid.total();
  Dataset ds{ComplexArray(n_obs, n), ComplexArray(m, n), meta};
  for (std::size_t i = 0; i < n; ++i) {
    if (ys[i].size() != n_obs || xs[i].size() != m) throw DimensionError("make_dataset: column length");
    for (std::size_t r = 0; r < n_obs; ++r) ds.Y.set(r, i, ys[i][r]);
    for (std::size_t r = 0; r < m; ++r) ds.X.set(r, i, xs[i][r]);
  }
  ds.meta.n_samples = n;
  return ds;
}

Dataset gen_dataset(const Dictionary& d, std::size_t n_samples, std::size_t k, double sigma2,
                    std::uint64_t seed) {
  if (k > d.cols()) throw std::invalid_argument("gen_dataset: K exceeds M");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("gen_dataset: sigma2 must be non-negative");
  DatasetMeta meta{d.grid(), d.rows(), n_samples, k, sigma2, seed, d.sampling()};
  std::vector<ComplexArray> ys(n_samples);
  std::vector<ComplexArray> xs(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    // Two independent streams per column so a column never depends on its neighbours.
    const std::uint64_t sx = make_rng(seed, 2 * i)();
    const std::uint64_t sw = make_rng(seed, 2 * i + 1)();
    xs[i] = gen_sparse_signal(d.cols(), k, sx);
    ys[i] = add_noise(d.apply(xs[i]), sigma2, sw);
  }
  return make_dataset(ys, xs, meta);
}

}  // namespace toeplista
