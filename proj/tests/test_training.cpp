#include <cmath>
#include <numbers>

#include "doctest.h"
#include "support.hpp"
#include "toeplista/solvers.hpp"
#include "toeplista/unfolded.hpp"

using namespace toeplista;
using namespace test_support;

namespace {

double column_angle_deg(const ComplexArray& a, const ComplexArray& b, std::size_t col) {
  cplx dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    dot += std::conj(a(r, col)) * b(r, col);
    na += std::norm(a(r, col));
    nb += std::norm(b(r, col));
  }
  const double c = std::min(1.0, std::abs(dot) / std::sqrt(na * nb));
  return std::acos(c) * 180.0 / std::numbers::pi;
}

Dataset identity_dataset(const Dictionary& d) {
  std::vector<ComplexArray> ys;
  std::vector<ComplexArray> xs;
  for (std::size_t m = 0; m < d.cols(); ++m) {
    ComplexArray e(d.cols());
    e.set(m, 1.0);
    ys.push_back(d.apply(e));
    xs.push_back(e);
  }
  DatasetMeta meta;
  meta.grid = d.grid();
  meta.n_obs = d.rows();
  return make_dataset(ys, xs, meta);
}

}  // namespace

TEST_CASE("init_network examples") {
  const Dictionary d(GridShape::one_d(32), draw_sampling(32, 12, 1));
  const double lip = dictionary_lipschitz(d);
  const ComplexArray filter = cplx(1.0 / lip) * adjoint(d.matrix());

  const UnfoldedNetwork zero_lambda = init_network(Architecture::Toeplitz1D, d, 3, {0.0, InhibitionInit::Zero});
  for (const auto& layer : zero_lambda.layers()) {
    CHECK(layer.theta == 0.0);
    CHECK(max_abs_diff(layer.filter, filter) < 1e-15);
    CHECK(max_abs(std::get<ToeplitzVec>(layer.inhibition).coeffs()) == 0.0);
  }
  const UnfoldedNetwork net = init_network(Architecture::Lista, d, 2, {0.6, InhibitionInit::Zero});
  CHECK(net.layers()[1].theta == doctest::Approx(0.6 / lip).epsilon(1e-15));
  CHECK_THROWS(init_network(Architecture::Lista, d, 2, {-1.0, InhibitionInit::Zero}));
}

TEST_CASE("zero inhibition makes every layer the same one-shot estimate") {
  const Dictionary d(GridShape::one_d(32), draw_sampling(32, 12, 2));
  const ComplexArray y = add_noise(d.apply(gen_sparse_signal(32, 3, 3)), 0.1, 4);
  const double lip = dictionary_lipschitz(d);
  // S_{lambda/L}(Phi^H y / L) regardless of depth.
  const ComplexArray want = soft_threshold(cplx(1.0 / lip) * d.apply_adjoint(y), Threshold(0.5 / lip));
  for (std::size_t depth : {1u, 4u}) {
    for (Architecture arch : {Architecture::Lista, Architecture::Toeplitz1D}) {
      const UnfoldedNetwork net = init_network(arch, d, depth, {0.5, InhibitionInit::Zero});
      CHECK(max_abs_diff(forward(net, y), want) < 1e-12);
    }
  }
}

TEST_CASE("ConvLISTA starts from the diagonal averages of the ISTA filter") {
  const Dictionary d(GridShape::one_d(20), draw_sampling(20, 7, 5));
  const double lip = dictionary_lipschitz(d);
  const ComplexArray w = cplx(1.0 / lip) * adjoint(d.matrix());
  const UnfoldedNetwork net = init_network(Architecture::ConvLista, d, 2, {0.1, InhibitionInit::Zero});
  const ComplexArray& h = net.layers()[0].filter;
  REQUIRE(h.size() == 20 + 7 - 1);
  for (long diag = -6; diag <= 19; ++diag) {
    cplx sum = 0.0;
    int count = 0;
    for (long i = 0; i < 20; ++i) {
      const long k = i - diag;
      if (k < 0 || k >= 7) continue;
      sum += w(static_cast<std::size_t>(i), static_cast<std::size_t>(k));
      ++count;
    }
    CHECK(std::abs(h[static_cast<std::size_t>(diag + 6)] - sum / static_cast<double>(count)) < 1e-14);
  }
}

TEST_CASE("estimate_dictionary recovers the sensing matrix") {
  const Dictionary d(GridShape::one_d(32), draw_sampling(32, 12, 6));
  CHECK(max_abs_diff(estimate_dictionary(identity_dataset(d)), d.matrix()) < 1e-10);

  const Dataset clean = gen_dataset(d, 400, 4, 0.0, 7);
  CHECK(max_abs_diff(estimate_dictionary(clean), d.matrix()) < 1e-8);

  const Dataset noisy = gen_dataset(d, 5000, 4, 0.4, 8);
  const ComplexArray est = estimate_dictionary(noisy);
  double worst = 0.0;
  for (std::size_t m = 0; m < 32; ++m) worst = std::max(worst, column_angle_deg(est, d.matrix(), m));
  CHECK(worst < 5.0);

  // Networks built from a noiseless estimate match those built from the truth.
  const UnfoldedNetwork a = init_network(Architecture::Toeplitz1D, d, 2, {0.2, InhibitionInit::IstaMatched});
  const UnfoldedNetwork b = init_network(Architecture::Toeplitz1D, d, 2, {0.2, InhibitionInit::IstaMatched}, &clean);
  CHECK(max_abs_diff(a.layers()[0].filter, b.layers()[0].filter) < 1e-8);
  CHECK(std::abs(a.layers()[0].theta - b.layers()[0].theta) < 1e-9);
}

TEST_CASE("estimate_dictionary rejects labels that do not span the grid") {
  const Dictionary d(GridShape::one_d(16), draw_sampling(16, 6, 9));
  CHECK_THROWS_AS(estimate_dictionary(gen_dataset(d, 10, 2, 0.0, 1)), ConditioningError);

  // Grid point 5 never active.
  Dataset ds = gen_dataset(d, 200, 3, 0.0, 2);
  for (std::size_t i = 0; i < ds.size(); ++i) ds.X.set(5, i, 0.0);
  CHECK_THROWS_AS(estimate_dictionary(ds), ConditioningError);

  Dataset zeros = ds;
  zeros.X = ComplexArray(16, ds.size());
  CHECK_THROWS_AS(estimate_dictionary(zeros), ConditioningError);
}

TEST_CASE("adam_step with zero gradient leaves parameters unchanged") {
  const Dictionary d(GridShape::one_d(16), draw_sampling(16, 6, 1));
  UnfoldedNetwork net = init_network(Architecture::Toeplitz1D, d, 2, {0.3, InhibitionInit::IstaMatched});
  const UnfoldedNetwork before = net;
  const UnfoldedNetwork zero = UnfoldedNetwork::zeros(Architecture::Toeplitz1D, net.dims(), 2);
  AdamState state;
  TrainConfig cfg;
  adam_step(net, zero, state, cfg, 1e-2);
  adam_step(net, zero, state, cfg, 1e-2);
  CHECK(state.step == 2);
  const auto a = net.planes();
  const auto b = before.planes();
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < a[k].size(); ++i) CHECK(a[k][i] == b[k][i]);
  }
  const UnfoldedNetwork other = UnfoldedNetwork::zeros(Architecture::Lista, net.dims(), 2);
  CHECK_THROWS_AS(adam_step(net, other, state, cfg, 1e-2), DimensionError);
}

TEST_CASE("the first Adam step moves every parameter by about the learning rate") {
  auto g = rng(2);
  const NetworkDims dims{GridShape::one_d(8), 4};
  UnfoldedNetwork net = UnfoldedNetwork::zeros(Architecture::Lista, dims, 1);
  UnfoldedNetwork grad = net;
  std::normal_distribution<double> nd(0.0, 1.0);
  for (auto plane : grad.planes()) {
    for (double& v : plane) v = nd(g);
  }
  grad.layers()[0].theta = -0.5;  // negative gradient so theta grows
  AdamState state;
  adam_step(net, grad, state, TrainConfig{}, 1e-3);
  const auto p = net.planes();
  const auto gp = std::as_const(grad).planes();
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      CHECK(std::abs(p[k][i]) == doctest::Approx(1e-3).epsilon(1e-4));
      CHECK(p[k][i] * gp[k][i] < 0.0);
    }
  }
}

TEST_CASE("Adam minimizes a convex quadratic and keeps thresholds non-negative") {
  auto g = rng(3);
  const NetworkDims dims{GridShape::one_d(6), 3};
  UnfoldedNetwork net = UnfoldedNetwork::zeros(Architecture::Toeplitz1D, dims, 2);
  UnfoldedNetwork target = net;
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (auto plane : target.planes()) {
    for (double& v : plane) v = ud(g);
  }
  // theta's target is negative; the clamp must hold it at zero.
  target.layers()[0].theta = -0.3;
  target.layers()[1].theta = 0.4;
  AdamState state;
  TrainConfig cfg;
  for (int step = 0; step < 2000; ++step) {
    UnfoldedNetwork grad = net;
    auto gp = grad.planes();
    const auto tp = std::as_const(target).planes();
    for (std::size_t k = 0; k < gp.size(); ++k) {
      for (std::size_t i = 0; i < gp[k].size(); ++i) gp[k][i] = 2.0 * (gp[k][i] - tp[k][i]);
    }
    adam_step(net, grad, state, cfg, step < 1000 ? 1e-2 : 1e-3);
    for (const auto& layer : net.layers()) REQUIRE(layer.theta >= 0.0);
  }
  CHECK(net.layers()[0].theta == doctest::Approx(0.0).epsilon(1e-3));
  target.layers()[0].theta = 0.0;
  const auto p = std::as_const(net).planes();
  const auto tp = std::as_const(target).planes();
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) CHECK(std::abs(p[k][i] - tp[k][i]) < 1e-3);
  }
}

TEST_CASE("train with zero epochs returns the input network") {
  const Dictionary d(GridShape::one_d(16), draw_sampling(16, 6, 4));
  const UnfoldedNetwork net = init_network(Architecture::Toeplitz1D, d, 2, {0.2, InhibitionInit::Zero});
  const Dataset ds = gen_dataset(d, 20, 2, 0.1, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  const TrainResult r = train(net, ds, ds, cfg);
  CHECK(r.report.loss_history.empty());
  CHECK(r.report.val_history.empty());
  CHECK(r.report.best_epoch == 0);
  CHECK(max_abs_diff(r.net.layers()[1].filter, net.layers()[1].filter) == 0.0);
}

TEST_CASE("training lowers the validation loss and is deterministic") {
  const Dictionary d(GridShape::one_d(32), draw_sampling(32, 12, 5));
  const Dataset tr = gen_dataset(d, 600, 2, 0.05, 10);
  const Dataset val = gen_dataset(d, 100, 2, 0.05, 11);
  const UnfoldedNetwork net = init_network(Architecture::Toeplitz1D, d, 3, {0.1, InhibitionInit::Zero});
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 32;
  cfg.learning_rate = 1e-2;
  cfg.seed = 7;
  std::size_t callbacks = 0;
  const TrainResult a = train(net, tr, val, cfg, [&](std::size_t epoch, double, double) { CHECK(epoch == ++callbacks); });
  CHECK(callbacks == 4);
  CHECK(a.report.best_val < a.report.initial_val);
  CHECK(a.report.best_val == doctest::Approx(loss_nmse(a.net, val)).epsilon(1e-14));
  for (const auto& layer : a.net.layers()) CHECK(layer.theta >= 0.0);

  const TrainResult b = train(net, tr, val, cfg);
  CHECK(a.report.val_history == b.report.val_history);
  const auto pa = std::as_const(a.net).planes();
  const auto pb = std::as_const(b.net).planes();
  for (std::size_t k = 0; k < pa.size(); ++k) {
    CHECK(std::equal(pa[k].begin(), pa[k].end(), pb[k].begin()));
  }
  cfg.seed = 8;
  CHECK(train(net, tr, val, cfg).report.loss_history != a.report.loss_history);
}

TEST_CASE("training stops after the allowed number of learning-rate drops") {
  const Dictionary d(GridShape::one_d(16), draw_sampling(16, 6, 6));
  const Dataset ds = gen_dataset(d, 40, 2, 0.1, 2);
  const UnfoldedNetwork net = init_network(Architecture::Lista, d, 2, {0.2, InhibitionInit::Zero});
  TrainConfig cfg;
  cfg.learning_rate = 0.0;  // validation never improves
  cfg.epochs = 50;
  cfg.lr_decay_patience = 2;
  cfg.max_lr_decays = 2;
  const TrainResult r = train(net, ds, ds, cfg);
  // Drops after epochs 2, 4 and 6; the third exceeds the limit.
  CHECK(r.report.val_history.size() == 6);
  CHECK(r.report.best_epoch == 0);
  cfg.batch_size = 0;
  CHECK_THROWS(train(net, ds, ds, cfg));
}

TEST_CASE("parameter counts") {
  const NetworkDims one_d{GridShape::one_d(512), 64};
  const NetworkDims two_d{GridShape::two_d(8, 64), 64};
  CHECK(param_count(Architecture::Lista, one_d, 10).inhibition_total == 2621440);
  CHECK(layer_param_count(Architecture::Toeplitz1D, one_d).inhibition == 1023);
  CHECK(layer_param_count(Architecture::Toeplitz2D, two_d).inhibition == 1905);
  CHECK(layer_param_count(Architecture::ConvLista, one_d).filter == 575);
  const ParamCount pc = param_count(Architecture::Toeplitz1D, one_d, 10);
  CHECK(pc.per_layer.size() == 10);
  CHECK(pc.total == 10 * (512 * 64 + 1023 + 1));

  const Dictionary d(GridShape::one_d(32), draw_sampling(32, 8, 1));
  const UnfoldedNetwork net = init_network(Architecture::Toeplitz1D, d, 4);
  std::size_t complex_entries = 0;
  for (auto plane : std::as_const(net).planes()) complex_entries += plane.size() == 1 ? 2 : plane.size();
  CHECK(complex_entries / 2 == param_count(net).total);
}

TEST_CASE("recommended training size is twenty samples per complex inhibition parameter") {
  const NetworkDims dims{GridShape::one_d(512), 64};
  CHECK(recommended_training_size(Architecture::Toeplitz1D, dims, 10) == 204600);
  CHECK(recommended_training_size(Architecture::Lista, dims, 10) == 52428800);
}
