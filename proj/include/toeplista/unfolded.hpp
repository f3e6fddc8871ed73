#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "toeplista/complex_array.hpp"
#include "toeplista/harmonic_model.hpp"
#include "toeplista/spectral.hpp"

namespace toeplista {

enum class Architecture : std::uint32_t {
  Lista = 1,       // dense mutual inhibition
  Toeplitz1D = 2,  // inhibition as 1D linear convolution
  Toeplitz2D = 3,  // inhibition as 2D linear convolution
  ConvLista = 4,   // both branches convolutional
};

std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);

struct NetworkDims {
  GridShape grid;
  std::size_t n_obs = 0;  // N

  std::size_t m() const noexcept { return grid.total(); }
  friend bool operator==(const NetworkDims&, const NetworkDims&) = default;
};

using Inhibition = std::variant<ComplexArray, ToeplitzVec, ToeplitzMat2D>;

// One unfolded iteration: x <- S_theta(filter(y) + inhibition(x)).
struct LayerParams {
  // M x N filter matrix, or the length M+N-1 kernel of the convolutional
  // observation branch for ConvLista.
  ComplexArray filter;
  // Dense M x M matrix (Lista), ToeplitzVec (1D) or ToeplitzMat2D (2D).
  Inhibition inhibition;
  double theta = 0.0;
};

class UnfoldedNetwork {
 public:
  UnfoldedNetwork(Architecture arch, NetworkDims dims, std::vector<LayerParams> layers);
  /// Network of the given depth with every parameter zero.
  static UnfoldedNetwork zeros(Architecture arch, NetworkDims dims, std::size_t depth);

  Architecture arch() const noexcept { return arch_; }
  const NetworkDims& dims() const noexcept { return dims_; }
  std::size_t depth() const noexcept { return layers_.size(); }
  const std::vector<LayerParams>& layers() const noexcept { return layers_; }
  std::vector<LayerParams>& layers() noexcept { return layers_; }

  /// Every real parameter plane in a fixed order: per layer filter re/im,
  /// inhibition re/im, then theta as a one-element span.
  std::vector<std::span<double>> planes();
  std::vector<std::span<const double>> planes() const;

 private:
  Architecture arch_;
  NetworkDims dims_;
  std::vector<LayerParams> layers_;
};

// Per-layer activations of one forward pass: pre[t] is the argument of the
// threshold in layer t and post[t] its output.
struct ForwardTrace {
  std::vector<ComplexArray> pre;
  std::vector<ComplexArray> post;
};

ComplexArray forward(const UnfoldedNetwork& net, const ComplexArray& y, ForwardTrace* trace = nullptr);

/// Layer t applied to the estimate x, inhibition term included even for t = 0.
ComplexArray layer_step(const UnfoldedNetwork& net, std::size_t t, const ComplexArray& y, const ComplexArray& x);

/// Sum of error norms over sum of truth norms (not squared norms).
double loss_nmse(const UnfoldedNetwork& net, const Dataset& batch);

/// Gradient of loss_nmse over the batch, laid out as a network of the same
/// shape. traces[i] must come from forward() on observation i.
UnfoldedNetwork backward(const UnfoldedNetwork& net, const Dataset& batch,
                         const std::vector<ForwardTrace>& traces);

struct LossAndGradient {
  double loss = 0.0;
  UnfoldedNetwork gradient;
};
LossAndGradient loss_and_gradient(const UnfoldedNetwork& net, const Dataset& batch);

enum class InhibitionInit {
  Zero,         // inhibition generator starts at zero
  IstaMatched,  // generator of I - Phi^H Phi / L, so each layer is one ISTA step
};

struct InitOptions {
  double lambda = 0.1;
  InhibitionInit inhibition = InhibitionInit::Zero;
};

/// Every layer gets filter (1/L) PhiHat^H, the chosen inhibition and theta = lambda / L.
/// PhiHat is the true dictionary unless a dataset is given for estimating it.
UnfoldedNetwork init_network(Architecture arch, const Dictionary& d, std::size_t depth,
                             const InitOptions& opts = {},
                             const Dataset* dataset_for_estimate = nullptr);

/// Least-squares dictionary Y X^H (X X^H)^{-1} from labelled pairs.
ComplexArray estimate_dictionary(const Dataset& ds);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::size_t epochs = 30;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Validation checks without improvement before the learning rate drops 10x.
  std::size_t lr_decay_patience = 5;
  /// Training stops after this many learning-rate drops.
  std::size_t max_lr_decays = 3;
  std::uint64_t seed = 0;
};

struct AdamState {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  std::size_t step = 0;
};

/// One bias-corrected Adam update on every real plane; theta is clamped to >= 0 afterwards.
void adam_step(UnfoldedNetwork& params, const UnfoldedNetwork& grads, AdamState& state,
               const TrainConfig& cfg, double learning_rate);

struct TrainReport {
  std::vector<double> loss_history;  // mean training NMSE per epoch
  std::vector<double> val_history;   // validation NMSE after each epoch
  double initial_val = 0.0;
  std::size_t best_epoch = 0;        // 0 = the initial parameters
  double best_val = 0.0;
};

struct TrainResult {
  UnfoldedNetwork net;
  TrainReport report;
};

using EpochCallback = std::function<void(std::size_t epoch, double train_loss, double val_loss)>;

TrainResult train(const UnfoldedNetwork& net, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct LayerParamCount {
  std::size_t filter = 0;
  std::size_t inhibition = 0;
  std::size_t threshold = 1;
  std::size_t total() const noexcept { return filter + inhibition + threshold; }
};

struct ParamCount {
  std::vector<LayerParamCount> per_layer;
  std::size_t inhibition_total = 0;
  std::size_t total = 0;
};

/// Complex parameter count of one layer for an architecture and problem size.
LayerParamCount layer_param_count(Architecture arch, const NetworkDims& dims);
ParamCount param_count(Architecture arch, const NetworkDims& dims, std::size_t depth);
ParamCount param_count(const UnfoldedNetwork& net);

/// Training-set size from the ten-samples-per-unknown rule, 20 (inhibition params) T.
std::size_t recommended_training_size(Architecture arch, const NetworkDims& dims, std::size_t depth);

}  // namespace toeplista
