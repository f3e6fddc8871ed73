#include "toeplista/unfolded.hpp"

#include <cmath>
#include <stdexcept>

#include "unfolded_internal.hpp"

namespace toeplista {

std::string to_string(Architecture arch) {
  switch (arch) {
    case Architecture::Lista:
      return "LISTA";
    case Architecture::Toeplitz1D:
      return "LISTA-Toeplitz-1D";
    case Architecture::Toeplitz2D:
      return "LISTA-Toeplitz-2D";
    case Architecture::ConvLista:
      return "ConvLISTA";
  }
  throw std::invalid_argument("unknown architecture tag");
}

Architecture architecture_from_string(const std::string& name) {
  if (name == "LISTA" || name == "lista") return Architecture::Lista;
  if (name == "LISTA-Toeplitz-1D" || name == "toeplitz1d") return Architecture::Toeplitz1D;
  if (name == "LISTA-Toeplitz-2D" || name == "toeplitz2d") return Architecture::Toeplitz2D;
  if (name == "ConvLISTA" || name == "convlista") return Architecture::ConvLista;
  throw std::invalid_argument("unknown architecture: " + name);
}

namespace {

void validate_layer(Architecture arch, const NetworkDims& dims, const LayerParams& layer) {
  const std::size_t m = dims.m();
  const std::size_t n = dims.n_obs;
  if (!(layer.theta >= 0.0) || !std::isfinite(layer.theta)) {
    throw std::invalid_argument("layer threshold must be finite and non-negative");
  }
  if (arch == Architecture::ConvLista) {
    if (layer.filter.rank() != 1 || layer.filter.size() != m + n - 1) {
      throw DimensionError("ConvLISTA observation kernel must have length M+N-1");
    }
  } else if (layer.filter.rank() != 2 || layer.filter.rows() != m || layer.filter.cols() != n) {
    throw DimensionError("filter matrix must be M x N");
  }
  switch (arch) {
    case Architecture::Lista: {
      const auto* w = std::get_if<ComplexArray>(&layer.inhibition);
      if (w == nullptr || w->rank() != 2 || w->rows() != m || w->cols() != m) {
        throw DimensionError("LISTA inhibition must be a dense M x M matrix");
      }
      break;
    }
    case Architecture::Toeplitz1D:
    case Architecture::Toeplitz2D:
    case Architecture::ConvLista: {
      if (!dims.grid.is_2d()) {
        const auto* t = std::get_if<ToeplitzVec>(&layer.inhibition);
        if (t == nullptr || t->grid_size() != m) throw DimensionError("inhibition must be a length 2M-1 generator");
      } else {
        const auto* t = std::get_if<ToeplitzMat2D>(&layer.inhibition);
        if (t == nullptr || t->m1() != dims.grid.m1 || t->m2() != dims.grid.m2) {
          throw DimensionError("inhibition must be a (2M1-1) x (2M2-1) generator");
        }
      }
      break;
    }
  }
}

}  // namespace

UnfoldedNetwork::UnfoldedNetwork(Architecture arch, NetworkDims dims, std::vector<LayerParams> layers)
    : arch_(arch), dims_(dims), layers_(std::move(layers)) {
  if (dims_.m() == 0 || dims_.n_obs == 0) throw std::invalid_argument("network dimensions must be positive");
  if (arch_ == Architecture::Toeplitz1D && dims_.grid.is_2d()) {
    throw std::invalid_argument("LISTA-Toeplitz-1D needs a 1D grid");
  }
  if (arch_ == Architecture::Toeplitz2D && !dims_.grid.is_2d()) {
    throw std::invalid_argument("LISTA-Toeplitz-2D needs a 2D grid");
  }
  for (const auto& layer : layers_) validate_layer(arch_, dims_, layer);
}

UnfoldedNetwork UnfoldedNetwork::zeros(Architecture arch, NetworkDims dims, std::size_t depth) {
  const std::size_t m = dims.m();
  const std::size_t n = dims.n_obs;
  std::vector<LayerParams> layers;
  layers.reserve(depth);
  for (std::size_t t = 0; t < depth; ++t) {
    LayerParams p;
    p.filter = arch == Architecture::ConvLista ? ComplexArray(m + n - 1) : ComplexArray(m, n);
    if (arch == Architecture::Lista) {
      p.inhibition = ComplexArray(m, m);
    } else if (dims.grid.is_2d()) {
      p.inhibition = ToeplitzMat2D(dims.grid.m1, dims.grid.m2);
    } else {
      p.inhibition = ToeplitzVec(m);
    }
    layers.push_back(std::move(p));
  }
  return UnfoldedNetwork(arch, dims, std::move(layers));
}

namespace detail {

ComplexArray& inhibition_coeffs(Inhibition& inh) {
  return std::visit(
      [](auto& v) -> ComplexArray& {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, ComplexArray>) {
          return v;
        } else {
          return v.coeffs();
        }
      },
      inh);
}

const ComplexArray& inhibition_coeffs(const Inhibition& inh) {
  return inhibition_coeffs(const_cast<Inhibition&>(inh));
}

ComplexArray apply_filter(Architecture arch, const NetworkDims& dims, const LayerParams& layer,
                          const ComplexArray& y) {
  if (arch == Architecture::ConvLista) return conv_rect(layer.filter, y, dims.m());
  return matvec(layer.filter, y);
}

ComplexArray apply_inhibition(const NetworkDims& dims, const Inhibition& inh, const ComplexArray& x) {
  if (const auto* w = std::get_if<ComplexArray>(&inh)) return matvec(*w, x);
  if (const auto* t = std::get_if<ToeplitzVec>(&inh)) return convolve(*t, x);
  const auto& t2 = std::get<ToeplitzMat2D>(inh);
  return convolve(t2, x.reshaped(dims.grid.m1, dims.grid.m2)).flattened();
}

}  // namespace detail

std::vector<std::span<double>> UnfoldedNetwork::planes() {
  std::vector<std::span<double>> out;
  out.reserve(layers_.size() * 5);
  for (auto& layer : layers_) {
    out.push_back(layer.filter.re());
    out.push_back(layer.filter.im());
    ComplexArray& inh = detail::inhibition_coeffs(layer.inhibition);
    out.push_back(inh.re());
    out.push_back(inh.im());
    out.emplace_back(&layer.theta, 1);
  }
  return out;
}

std::vector<std::span<const double>> UnfoldedNetwork::planes() const {
  auto mut = const_cast<UnfoldedNetwork*>(this)->planes();
  return {mut.begin(), mut.end()};
}

ComplexArray forward(const UnfoldedNetwork& net, const ComplexArray& y, ForwardTrace* trace) {
  const NetworkDims& dims = net.dims();
  if (y.size() != dims.n_obs) throw DimensionError("forward: observation length must equal N");
  if (trace != nullptr) {
    trace->pre.clear();
    trace->post.clear();
  }
  ComplexArray x(dims.m());
  for (std::size_t t = 0; t < net.depth(); ++t) {
    const LayerParams& layer = net.layers()[t];
    ComplexArray z = detail::apply_filter(net.arch(), dims, layer, y);
    // x^(0) = 0, so the first layer has no inhibition term.
    if (t > 0) z = z + detail::apply_inhibition(dims, layer.inhibition, x);
    x = soft_threshold(z, Threshold(layer.theta));
    if (!x.all_finite()) throw NumericError("forward: non-finite activation", t);
    if (trace != nullptr) {
      trace->pre.push_back(std::move(z));
      trace->post.push_back(x);
    }
  }
  return x;
}

ComplexArray layer_step(const UnfoldedNetwork& net, std::size_t t, const ComplexArray& y, const ComplexArray& x) {
  const NetworkDims& dims = net.dims();
  if (t >= net.depth()) throw std::out_of_range("layer_step: layer index out of range");
  if (y.size() != dims.n_obs || x.size() != dims.m()) throw DimensionError("layer_step: operand length");
  const LayerParams& layer = net.layers()[t];
  const ComplexArray z = detail::apply_filter(net.arch(), dims, layer, y) + detail::apply_inhibition(dims, layer.inhibition, x);
  return soft_threshold(z, Threshold(layer.theta));
}

LayerParamCount layer_param_count(Architecture arch, const NetworkDims& dims) {
  const std::size_t m = dims.m();
  const std::size_t n = dims.n_obs;
  const std::size_t toeplitz = dims.grid.is_2d() ? (2 * dims.grid.m1 - 1) * (2 * dims.grid.m2 - 1) : 2 * m - 1;
  LayerParamCount c;
  switch (arch) {
    case Architecture::Lista:
      c.filter = m * n;
      c.inhibition = m * m;
      break;
    case Architecture::Toeplitz1D:
    case Architecture::Toeplitz2D:
      c.filter = m * n;
      c.inhibition = toeplitz;
      break;
    case Architecture::ConvLista:
      c.filter = m + n - 1;
      c.inhibition = toeplitz;
      break;
  }
  return c;
}

ParamCount param_count(Architecture arch, const NetworkDims& dims, std::size_t depth) {
  ParamCount pc;
  const LayerParamCount layer = layer_param_count(arch, dims);
  pc.per_layer.assign(depth, layer);
  pc.inhibition_total = layer.inhibition * depth;
  pc.total = layer.total() * depth;
  return pc;
}

ParamCount param_count(const UnfoldedNetwork& net) {
  return param_count(net.arch(), net.dims(), net.depth());
}

std::size_t recommended_training_size(Architecture arch, const NetworkDims& dims, std::size_t depth) {
  return 20 * layer_param_count(arch, dims).inhibition * depth;
}

}  // namespace toeplista
