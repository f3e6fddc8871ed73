#include <cmath>
#include <stdexcept>

#include "toeplista/unfolded.hpp"
#include "unfolded_internal.hpp"

namespace toeplista {

namespace {

// Gradients are carried as packed complex values g = dL/dRe + j dL/dIm. With
// that packing the adjoint of z = W u is dL/du = W^H g and dL/dW = g u^H.

void add_outer(ComplexArray& acc, const ComplexArray& g, const ComplexArray& u) {
  const std::size_t rows = acc.rows();
  const std::size_t cols = acc.cols();
  auto ar = acc.re();
  auto ai = acc.im();
  for (std::size_t i = 0; i < rows; ++i) {
    const double gr = g.re()[i];
    const double gi = g.im()[i];
    if (gr == 0.0 && gi == 0.0) continue;
    for (std::size_t k = 0; k < cols; ++k) {
      const double ur = u.re()[k];
      const double ui = u.im()[k];
      // g * conj(u)
      ar[i * cols + k] += gr * ur + gi * ui;
      ai[i * cols + k] += gi * ur - gr * ui;
    }
  }
}

void add_into(ComplexArray& acc, const ComplexArray& v) {
  for (std::size_t i = 0; i < acc.size(); ++i) {
    acc.re()[i] += v.re()[i];
    acc.im()[i] += v.im()[i];
  }
}

ToeplitzVec flipped_conj(const ToeplitzVec& t) {
  ToeplitzVec out(t.grid_size());
  const auto m = static_cast<std::ptrdiff_t>(t.grid_size());
  for (std::ptrdiff_t d = -(m - 1); d < m; ++d) out.set(d, std::conj(t.at(-d)));
  return out;
}

ToeplitzMat2D flipped_conj(const ToeplitzMat2D& t) {
  ToeplitzMat2D out(t.m1(), t.m2());
  const auto m1 = static_cast<std::ptrdiff_t>(t.m1());
  const auto m2 = static_cast<std::ptrdiff_t>(t.m2());
  for (std::ptrdiff_t a = -(m1 - 1); a < m1; ++a) {
    for (std::ptrdiff_t b = -(m2 - 1); b < m2; ++b) out.set(a, b, std::conj(t.at(-a, -b)));
  }
  return out;
}

// Backward through x = S_theta(z). The kink |z| = theta is treated as part of
// the dead zone, so its subgradient is zero.
ComplexArray threshold_backward(const ComplexArray& z, double theta, const ComplexArray& g,
                                double& dtheta) {
  ComplexArray gz(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zr = z.re()[i];
    const double zi = z.im()[i];
    const double gr = g.re()[i];
    const double gi = g.im()[i];
    const double r = std::hypot(zr, zi);
    if (theta == 0.0) {
      gz.re()[i] = gr;
      gz.im()[i] = gi;
      if (r > 0.0) dtheta -= (gr * zr + gi * zi) / r;
      continue;
    }
    if (r <= theta) continue;
    const double a = theta / (r * r * r);
    const double cross = a * zr * zi;
    gz.re()[i] = gr * (1.0 - a * zi * zi) + gi * cross;
    gz.im()[i] = gr * cross + gi * (1.0 - a * zr * zr);
    dtheta -= (gr * zr + gi * zi) / r;
  }
  return gz;
}

struct LayerAdjoints {
  std::vector<Inhibition> flipped;  // adjoint kernels of the Toeplitz inhibitions
};

LayerAdjoints prepare_adjoints(const UnfoldedNetwork& net) {
  LayerAdjoints adj;
  adj.flipped.reserve(net.depth());
  for (const auto& layer : net.layers()) {
    if (const auto* t = std::get_if<ToeplitzVec>(&layer.inhibition)) {
      adj.flipped.emplace_back(flipped_conj(*t));
    } else if (const auto* t2 = std::get_if<ToeplitzMat2D>(&layer.inhibition)) {
      adj.flipped.emplace_back(flipped_conj(*t2));
    } else {
      adj.flipped.emplace_back(ComplexArray());
    }
  }
  return adj;
}

// Accumulates one sample's contribution; returns its error norm.
double backward_sample(const UnfoldedNetwork& net, const LayerAdjoints& adj, const ComplexArray& y,
                       const ComplexArray& x_true, const ForwardTrace& trace, double inv_denominator,
                       UnfoldedNetwork& grad) {
  const NetworkDims& dims = net.dims();
  const std::size_t depth = net.depth();
  if (trace.pre.size() != depth || trace.post.size() != depth) {
    throw std::invalid_argument("backward: missing forward activations");
  }
  if (depth == 0) return norm(x_true);

  const ComplexArray err = trace.post.back() - x_true;
  const double err_norm = norm(err);
  ComplexArray gx(dims.m());
  if (err_norm > 0.0) gx = cplx(inv_denominator / err_norm) * err;

  for (std::size_t t = depth; t-- > 0;) {
    const LayerParams& layer = net.layers()[t];
    LayerParams& g = grad.layers()[t];
    const ComplexArray gz = threshold_backward(trace.pre[t], layer.theta, gx, g.theta);

    if (net.arch() == Architecture::ConvLista) {
      add_into(g.filter, cross_correlate(gz, y));
    } else {
      add_outer(g.filter, gz, y);
    }
    if (t == 0) break;

    const ComplexArray& x_in = trace.post[t - 1];
    if (const auto* w = std::get_if<ComplexArray>(&layer.inhibition)) {
      add_outer(std::get<ComplexArray>(g.inhibition), gz, x_in);
      gx = matvec_adjoint(*w, gz);
    } else if (std::holds_alternative<ToeplitzVec>(layer.inhibition)) {
      add_into(std::get<ToeplitzVec>(g.inhibition).coeffs(), cross_correlate(gz, x_in));
      gx = convolve(std::get<ToeplitzVec>(adj.flipped[t]), gz);
    } else {
      const std::size_t m1 = dims.grid.m1;
      const std::size_t m2 = dims.grid.m2;
      const ComplexArray gz_grid = gz.reshaped(m1, m2);
      add_into(std::get<ToeplitzMat2D>(g.inhibition).coeffs(),
               cross_correlate2d(gz_grid, x_in.reshaped(m1, m2)));
      gx = convolve(std::get<ToeplitzMat2D>(adj.flipped[t]), gz_grid).flattened();
    }
  }
  return err_norm;
}

double truth_norm_sum(const Dataset& batch) {
  double s = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) s += norm(batch.truth(i));
  return s;
}

void check_batch(const UnfoldedNetwork& net, const Dataset& batch) {
  if (batch.size() == 0) throw std::invalid_argument("loss: empty batch");
  if (batch.Y.rows() != net.dims().n_obs || batch.X.rows() != net.dims().m()) {
    throw DimensionError("loss: batch dimensions do not match the network");
  }
}

}  // namespace

double loss_nmse(const UnfoldedNetwork& net, const Dataset& batch) {
  check_batch(net, batch);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ComplexArray x = batch.truth(i);
    num += norm(forward(net, batch.observation(i)) - x);
    den += norm(x);
  }
  if (den == 0.0) throw std::domain_error("loss_nmse: all-zero ground truth");
  return num / den;
}

UnfoldedNetwork backward(const UnfoldedNetwork& net, const Dataset& batch,
                         const std::vector<ForwardTrace>& traces) {
  check_batch(net, batch);
  if (traces.size() != batch.size()) throw std::invalid_argument("backward: missing forward activations");
  const double den = truth_norm_sum(batch);
  if (den == 0.0) throw std::domain_error("backward: all-zero ground truth");
  UnfoldedNetwork grad = UnfoldedNetwork::zeros(net.arch(), net.dims(), net.depth());
  const LayerAdjoints adj = prepare_adjoints(net);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    backward_sample(net, adj, batch.observation(i), batch.truth(i), traces[i], 1.0 / den, grad);
  }
  return grad;
}

LossAndGradient loss_and_gradient(const UnfoldedNetwork& net, const Dataset& batch) {
  check_batch(net, batch);
  const double den = truth_norm_sum(batch);
  if (den == 0.0) throw std::domain_error("loss_and_gradient: all-zero ground truth");
  LossAndGradient out{0.0, UnfoldedNetwork::zeros(net.arch(), net.dims(), net.depth())};
  const LayerAdjoints adj = prepare_adjoints(net);
  ForwardTrace trace;
  double num = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ComplexArray y = batch.observation(i);
    forward(net, y, &trace);
    num += backward_sample(net, adj, y, batch.truth(i), trace, 1.0 / den, out.gradient);
  }
  out.loss = num / den;
  return out;
}

}  // namespace toeplista
