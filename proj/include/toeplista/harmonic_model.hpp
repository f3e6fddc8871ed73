#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "toeplista/complex_array.hpp"

namespace toeplista {

enum class ProblemKind : std::uint32_t { OneD = 1, TwoD = 2 };

// Frequency grid of the sparse spectrum. A 1D grid has m2 == 1. Flat index of
// cell (m1, m2) is m1 * M2 + m2, the column order of F_{M1} (x) F_{M2}.
struct GridShape {
  ProblemKind kind = ProblemKind::OneD;
  std::size_t m1 = 0;
  std::size_t m2 = 1;

  static GridShape one_d(std::size_t m) { return {ProblemKind::OneD, m, 1}; }
  static GridShape two_d(std::size_t m1, std::size_t m2) { return {ProblemKind::TwoD, m1, m2}; }
  std::size_t total() const noexcept { return m1 * m2; }
  bool is_2d() const noexcept { return kind == ProblemKind::TwoD; }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct SamplingSet {
  std::vector<std::size_t> omega;  // sorted, distinct
  std::uint64_t seed = 0;
};

// Row-subsampled Fourier (1D) or Kronecker-Fourier (2D) sensing matrix.
class Dictionary {
 public:
  Dictionary(GridShape grid, SamplingSet sampling, bool materialize = true);

  const GridShape& grid() const noexcept { return grid_; }
  const SamplingSet& sampling() const noexcept { return sampling_; }
  std::size_t rows() const noexcept { return sampling_.omega.size(); }  // N
  std::size_t cols() const noexcept { return grid_.total(); }           // M
  bool materialized() const noexcept { return !phi_.empty(); }

  /// Dense N x M matrix; built on demand when the dictionary is matrix-free.
  ComplexArray matrix() const;
  cplx entry(std::size_t row, std::size_t col) const;

  ComplexArray apply(const ComplexArray& x) const;          // Phi x
  ComplexArray apply_adjoint(const ComplexArray& r) const;  // Phi^H r

 private:
  GridShape grid_;
  SamplingSet sampling_;
  ComplexArray phi_;
  std::vector<cplx> roots1_;  // e^{j 2 pi k / M1}
  std::vector<cplx> roots2_;  // e^{j 2 pi k / M2}
};

struct DatasetMeta {
  GridShape grid;
  std::size_t n_obs = 0;  // N
  std::size_t n_samples = 0;
  std::size_t sparsity = 0;  // K
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
  SamplingSet sampling;
};

// Column i of Y and X is one (observation, ground truth) pair.
struct Dataset {
  ComplexArray Y;  // N x n_samples
  ComplexArray X;  // M x n_samples
  DatasetMeta meta;

  std::size_t size() const noexcept { return meta.n_samples; }
  ComplexArray observation(std::size_t i) const;
  ComplexArray truth(std::size_t i) const;
  /// Samples [begin, end) as a new dataset.
  Dataset slice(std::size_t begin, std::size_t end) const;
};

/// Independent generator for (seed, stream); same inputs give the same stream.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Unnormalized DFT matrix, [F]_{i,m} = e^{j 2 pi i m / M}.
ComplexArray fourier_matrix(std::size_t m);
SamplingSet draw_sampling(std::size_t m, std::size_t n, std::uint64_t seed);
Dictionary build_dictionary(GridShape grid, SamplingSet sampling, bool materialize = true);
/// Phi^H Phi.
ComplexArray gram(const Dictionary& d);

/// K nonzeros at distinct uniform positions, circular complex Gaussian with E|a|^2 = 1.
ComplexArray gen_sparse_signal(std::size_t m, std::size_t k, std::uint64_t seed);
/// Sinusoids at flat grid indices, the last axis shifted by frac cells,
/// observed at the dictionary's sampling set.
ComplexArray synth_offgrid(const Dictionary& d, std::span<const std::size_t> grid_indices, double frac,
                           const ComplexArray& amps);
/// Adds circular complex Gaussian noise of total variance sigma2 per entry.
ComplexArray add_noise(const ComplexArray& y, double sigma2, std::uint64_t seed);
Dataset gen_dataset(const Dictionary& d, std::size_t n_samples, std::size_t k, double sigma2,
                    std::uint64_t seed);

/// Assembles a dataset from per-sample columns.
Dataset make_dataset(const std::vector<ComplexArray>& ys, const std::vector<ComplexArray>& xs,
                     DatasetMeta meta);

}  // namespace toeplista
