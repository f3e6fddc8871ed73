#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "toeplista/complex_array.hpp"
#include "toeplista/harmonic_model.hpp"
#include "toeplista/unfolded.hpp"

namespace toeplista {

// All binary formats are little-endian regardless of the host. Each writer
// also emits "<path>.json" describing the file; readers use it only for data
// the binary layout does not carry (the sampling set).

/// "HUD1": kind, M (or M1, M2), N, n_samples, K as u32, seed u64, sigma2 f64,
/// then Y and X as row-major (re, im) f64 pairs.
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
/// The sampling set is restored from the sidecar when present.
Dataset load_dataset(const std::filesystem::path& path);

struct ModelInfo {
  std::optional<SamplingSet> sampling;
  std::optional<TrainConfig> train;
  std::optional<TrainReport> report;
};

/// "HUN1": arch u32, T u32, P u32, M1 [, M2], N as u32, then per layer the
/// filter re/im, inhibition re/im and theta as f64.
void save_model(const std::filesystem::path& path, const UnfoldedNetwork& net, const ModelInfo& info = {});
UnfoldedNetwork load_model(const std::filesystem::path& path, ModelInfo* info = nullptr);

// 2D observation on a sampled range-Doppler grid.
struct IqGrid {
  std::size_t m1 = 0;
  std::size_t m2 = 0;
  std::vector<std::size_t> omega;  // flat indices m1 * M2 + m2 of the observed cells
  ComplexArray samples;            // one sample per omega entry
};

/// "HIQ1", u32 header length, JSON header {"M1", "M2", "omega"}, then
/// N (re, im) f64 pairs.
void save_iq_grid(const std::filesystem::path& path, const IqGrid& grid);
IqGrid load_iq_grid(const std::filesystem::path& path);

struct IqObservation {
  Dictionary dictionary;
  ComplexArray y;
};

/// Dictionary built from the header's sampling set, plus the observation.
IqObservation ingest_iq_grid(const std::filesystem::path& path);
/// As above, but the header must agree with the declared grid and sampling set.
IqObservation ingest_iq_grid(const std::filesystem::path& path, std::size_t m1, std::size_t m2,
                             const std::vector<std::size_t>& omega);

}  // namespace toeplista
