#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "toeplista/solvers.hpp"
#include "toeplista/unfolded.hpp"
#include "unfolded_internal.hpp"

namespace toeplista {

namespace {

Eigen::MatrixXcd to_eigen(const ComplexArray& a) {
  Eigen::MatrixXcd m(a.rows(), a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a(r, c);
  }
  return m;
}

ComplexArray from_eigen(const Eigen::MatrixXcd& m) {
  ComplexArray a(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) a.set(static_cast<std::size_t>(r), static_cast<std::size_t>(c), m(r, c));
  }
  return a;
}

// Best Toeplitz approximation (in Frobenius norm) of an M x N matrix:
// average each diagonal i - k = d, d in [-(N-1), M-1].
ComplexArray diagonal_average(const ComplexArray& w) {
  const std::size_t m = w.rows();
  const std::size_t n = w.cols();
  ComplexArray h(m + n - 1);
  std::vector<double> count(m + n - 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = i + n - 1 - k;
      h.set(idx, h[idx] + w(i, k));
      count[idx] += 1.0;
    }
  }
  for (std::size_t i = 0; i < h.size(); ++i) h.set(i, h[i] / count[i]);
  return h;
}

Dataset gather(const Dataset& ds, std::span<const std::size_t> idx) {
  std::vector<ComplexArray> ys;
  std::vector<ComplexArray> xs;
  ys.reserve(idx.size());
  xs.reserve(idx.size());
  for (auto i : idx) {
    ys.push_back(ds.observation(i));
    xs.push_back(ds.truth(i));
  }
  return make_dataset(ys, xs, ds.meta);
}

}  // namespace

ComplexArray estimate_dictionary(const Dataset& ds) {
  const std::size_t m = ds.X.rows();
  if (ds.size() < m) throw ConditioningError("estimate_dictionary: fewer samples than grid points");
  const Eigen::MatrixXcd x = to_eigen(ds.X);
  const Eigen::MatrixXcd y = to_eigen(ds.Y);
  Eigen::MatrixXcd gram = x * x.adjoint();
  const double trace = gram.diagonal().real().sum();
  if (!(trace > 0.0)) throw ConditioningError("estimate_dictionary: all-zero labels");
  // Tiny ridge keeps the factorization stable without visibly biasing the fit.
  gram.diagonal().array() += 1e-12 * trace / static_cast<double>(m);
  Eigen::LLT<Eigen::MatrixXcd> llt(gram);
  if (llt.info() != Eigen::Success) throw ConditioningError("estimate_dictionary: X X^H is not positive definite");
  const Eigen::VectorXd diag = Eigen::MatrixXcd(llt.matrixL()).diagonal().real();
  const double ratio = diag.minCoeff() / diag.maxCoeff();
  if (ratio * ratio < 1e-10) throw ConditioningError("estimate_dictionary: labels do not span every grid point");
  // PhiHat^H = (X X^H)^{-1} X Y^H
  const Eigen::MatrixXcd phi_h = llt.solve(x * y.adjoint());
  return from_eigen(phi_h.adjoint());
}

UnfoldedNetwork init_network(Architecture arch, const Dictionary& d, std::size_t depth, const InitOptions& opts,
                             const Dataset* dataset_for_estimate) {
  if (!(opts.lambda >= 0.0)) throw std::invalid_argument("init_network: lambda must be non-negative");
  const ComplexArray phi = dataset_for_estimate != nullptr ? estimate_dictionary(*dataset_for_estimate) : d.matrix();
  const double lip = lipschitz_constant(phi).value;
  const NetworkDims dims{d.grid(), d.rows()};
  const std::size_t m = dims.m();

  ComplexArray filter = cplx(1.0 / lip) * adjoint(phi);
  if (arch == Architecture::ConvLista) filter = diagonal_average(filter);

  UnfoldedNetwork net = UnfoldedNetwork::zeros(arch, dims, depth);
  std::optional<ComplexArray> ista_matrix;
  if (opts.inhibition == InhibitionInit::IstaMatched) {
    ista_matrix = ComplexArray::identity(m) - cplx(1.0 / lip) * matmul(adjoint(phi), phi);
  }
  for (auto& layer : net.layers()) {
    layer.filter = filter;
    layer.theta = opts.lambda / lip;
    if (!ista_matrix) continue;
    if (std::holds_alternative<ComplexArray>(layer.inhibition)) {
      layer.inhibition = *ista_matrix;
    } else if (std::holds_alternative<ToeplitzVec>(layer.inhibition)) {
      layer.inhibition = toeplitz_generator(*ista_matrix);
    } else {
      layer.inhibition = dbt_generator(*ista_matrix, dims.grid.m1, dims.grid.m2);
    }
  }
  return net;
}

void adam_step(UnfoldedNetwork& params, const UnfoldedNetwork& grads, AdamState& state, const TrainConfig& cfg,
               double learning_rate) {
  auto p = params.planes();
  const auto g = grads.planes();
  if (p.size() != g.size()) throw DimensionError("adam_step: gradient layout differs from parameters");
  if (state.first.empty()) {
    for (const auto& plane : p) {
      state.first.emplace_back(plane.size(), 0.0);
      state.second.emplace_back(plane.size(), 0.0);
    }
  }
  ++state.step;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (g[k].size() != p[k].size()) throw DimensionError("adam_step: plane size mismatch");
    auto& m = state.first[k];
    auto& v = state.second[k];
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double gi = g[k][i];
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[k][i] -= learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
  for (auto& layer : params.layers()) layer.theta = std::max(layer.theta, 0.0);
}

TrainResult train(const UnfoldedNetwork& net, const Dataset& train_ds, const Dataset& val_ds, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  if (cfg.batch_size == 0) throw std::invalid_argument("train: batch size must be positive");
  if (!(cfg.adam_beta1 > 0.0 && cfg.adam_beta1 < 1.0 && cfg.adam_beta2 > 0.0 && cfg.adam_beta2 < 1.0)) {
    throw std::invalid_argument("train: Adam betas must lie in (0, 1)");
  }
  TrainResult result{net, {}};
  if (cfg.epochs == 0) return result;
  if (train_ds.size() == 0 || val_ds.size() == 0) throw std::invalid_argument("train: empty dataset");

  UnfoldedNetwork current = net;
  AdamState adam;
  double lr = cfg.learning_rate;
  std::size_t stale_checks = 0;
  std::size_t decays = 0;

  TrainReport& report = result.report;
  report.initial_val = loss_nmse(current, val_ds);
  report.best_val = report.initial_val;
  report.best_epoch = 0;

  std::vector<std::size_t> order(train_ds.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto rng = make_rng(cfg.seed, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const Dataset batch = gather(train_ds, std::span(order).subspan(start, stop - start));
      const LossAndGradient lg = [&] {
        try {
          return loss_and_gradient(current, batch);
        } catch (const NumericError& e) {
          throw NumericError(std::string("train: epoch ") + std::to_string(epoch) + ", batch " +
                                 std::to_string(start / cfg.batch_size) + ": " + e.what(),
                             e.iteration());
        }
      }();
      weighted += lg.loss * static_cast<double>(stop - start);
      adam_step(current, lg.gradient, adam, cfg, lr);
    }
    const double train_loss = weighted / static_cast<double>(order.size());
    const double val_loss = loss_nmse(current, val_ds);
    report.loss_history.push_back(train_loss);
    report.val_history.push_back(val_loss);
    if (on_epoch) on_epoch(epoch, train_loss, val_loss);

    if (val_loss < report.best_val) {
      report.best_val = val_loss;
      report.best_epoch = epoch;
      result.net = current;
      stale_checks = 0;
    } else if (++stale_checks >= cfg.lr_decay_patience) {
      stale_checks = 0;
      lr *= 0.1;
      if (++decays > cfg.max_lr_decays) break;
    }
  }
  return result;
}

}  // namespace toeplista
