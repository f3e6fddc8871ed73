#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "toeplista/complex_array.hpp"
#include "toeplista/harmonic_model.hpp"
#include "toeplista/unfolded.hpp"

namespace toeplista {

/// ||x_true - x_hat|| / ||x_true||.
double nmse_metric(const ComplexArray& x_hat, const ComplexArray& x_true);

/// Indices of the k largest magnitudes, ties broken by lowest index, sorted ascending.
std::vector<std::size_t> top_k_indices(const ComplexArray& x, std::size_t k);

/// Fraction of the k true-support indices found among the top-k entries of
/// x_hat. With tolerance, a true index counts when some top-k entry lies
/// within one cell of it along every grid axis.
double hit_rate_metric(const ComplexArray& x_hat, const ComplexArray& x_true, std::size_t k);
double hit_rate_metric(const ComplexArray& x_hat, const ComplexArray& x_true, std::size_t k,
                       const GridShape& grid, bool tolerant);

enum class Method { Ista, Fista, Lista, ConvLista, ListaToeplitz };

std::string to_string(Method m);
Method method_from_string(const std::string& name);
bool is_learned(Method m);
/// Network architecture a learned method runs on a given grid.
Architecture method_architecture(Method m, const GridShape& grid);

struct ExperimentConfig {
  GridShape grid = GridShape::one_d(64);
  std::size_t n_obs = 16;  // N
  std::size_t k = 2;
  std::vector<double> noise_powers_db{-10.0};
  std::vector<Method> methods{Method::Ista};
  /// Iterations for ISTA/FISTA; learned methods run their trained depth.
  std::map<Method, std::size_t> iteration_budgets;
  std::size_t trials_per_point = 100;
  std::uint64_t seed = 1;
  std::uint64_t sampling_seed = 1;
  std::map<Method, std::string> model_paths;
  /// Regularization for ISTA/FISTA; the solver default when unset.
  std::optional<double> lambda;
  bool offgrid = false;
  double offgrid_frac = 0.25;
  bool tolerant_hits = false;
  bool timing = false;
  std::size_t threads = 1;

  std::size_t budget(Method m) const;
  /// Throws std::invalid_argument on an empty method list or zero budgets/trials.
  void validate() const;
};

struct MetricRow {
  std::string method;
  double noise_power_db = 0.0;
  double nmse_db = 0.0;
  double hit_rate = 0.0;
  double mean_runtime_ms = 0.0;  // 0 unless timing is enabled
  std::size_t trials = 0;
};

using ModelSet = std::map<Method, UnfoldedNetwork>;

/// Loads every learned method's model from cfg.model_paths and checks it
/// against the configured dimensions and sampling set.
ModelSet load_models(const ExperimentConfig& cfg);

/// Noise power sigma2 = 10^(dB / 10).
double noise_variance(double noise_db);

/// One instance of the configured problem: flat support, amplitudes, truth and observation.
struct Instance {
  ComplexArray x_true;
  ComplexArray y;
  std::vector<std::size_t> support;
};
Instance make_instance(const ExperimentConfig& cfg, const Dictionary& d, double sigma2, std::uint64_t seed);

/// Dictionary of the configured grid and sampling seed.
Dictionary experiment_dictionary(const ExperimentConfig& cfg);

/// Recovery of one observation by one method. The step size of ISTA/FISTA is
/// estimated from the dictionary unless given.
ComplexArray recover(Method m, const ExperimentConfig& cfg, const Dictionary& d, const ModelSet& models,
                     const ComplexArray& y, std::optional<double> lipschitz = std::nullopt);

/// Rows ordered by method (configuration order), then noise point. Every
/// method sees the same instances at a given noise point.
std::vector<MetricRow> run_sweep(const ExperimentConfig& cfg, const ModelSet& models);
std::vector<MetricRow> run_sweep(const ExperimentConfig& cfg);

void write_csv(std::ostream& out, const std::vector<MetricRow>& rows);

struct RecoveryDump {
  GridShape grid;
  std::vector<std::string> methods;
  ComplexArray x_true;
  std::vector<ComplexArray> x_hat;  // one per method
};

/// One instance at the first configured noise point, recovered by every method.
RecoveryDump run_single(const ExperimentConfig& cfg, const ModelSet& models);
RecoveryDump run_single(const ExperimentConfig& cfg);
/// Columns: index, i1, i2, truth, then one magnitude column per method.
void write_csv(std::ostream& out, const RecoveryDump& dump);

struct ComplexityRow {
  std::size_t m = 0;
  std::size_t lista_inhibition = 0;     // per layer
  std::size_t toeplitz_inhibition = 0;  // per layer
  std::size_t lista_layer_params = 0;
  std::size_t toeplitz_layer_params = 0;
  double storage_ratio = 0.0;  // toeplitz / lista inhibition
  double lista_ms = 0.0;       // median per-layer forward time
  double toeplitz_ms = 0.0;
  double lista_time_ratio = 0.0;  // relative to the first row
  double toeplitz_time_ratio = 0.0;
};

struct ComplexityOptions {
  std::size_t n_obs = 64;
  std::size_t repetitions = 5;
  bool timing = true;
  bool include_dense = true;  // dense timing needs M^2 complex entries of memory
  std::uint64_t seed = 1;
};

/// Median wall time in milliseconds of one layer_step of a random network.
double time_layer(Architecture arch, const NetworkDims& dims, std::size_t repetitions, std::uint64_t seed);

std::vector<ComplexityRow> complexity_report(const std::vector<std::size_t>& grid_sizes,
                                             const ComplexityOptions& opts = {});
void write_csv(std::ostream& out, const std::vector<ComplexityRow>& rows);

/// Fixed-format number rendering used by every CSV writer.
std::string format_number(double v);

}  // namespace toeplista
