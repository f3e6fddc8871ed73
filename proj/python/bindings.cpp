// Python bindings. Complex data crosses the boundary as numpy complex128
// arrays of rank 1 or 2; everything else maps onto plain Python types.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "toeplista/bench.hpp"
#include "toeplista/io.hpp"
#include "toeplista/solvers.hpp"
#include "toeplista/unfolded.hpp"

namespace py = pybind11;
namespace tl = toeplista;

namespace {

using CArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

tl::ComplexArray from_numpy(const CArray& a) {
  if (a.ndim() != 1 && a.ndim() != 2) throw tl::DimensionError("expected a 1D or 2D complex array");
  const auto* p = a.data();
  if (a.ndim() == 1) {
    tl::ComplexArray out(static_cast<std::size_t>(a.shape(0)));
    for (std::size_t i = 0; i < out.size(); ++i) out.set(i, p[i]);
    return out;
  }
  tl::ComplexArray out(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  for (std::size_t i = 0; i < out.size(); ++i) out.set(i, p[i]);
  return out;
}

CArray to_numpy(const tl::ComplexArray& a) {
  std::vector<py::ssize_t> shape;
  for (auto s : a.shape()) shape.push_back(static_cast<py::ssize_t>(s));
  CArray out(shape);
  auto* p = out.mutable_data();
  for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i];
  return out;
}

tl::GridShape grid_from(const py::object& grid) {
  if (py::isinstance<py::int_>(grid)) return tl::GridShape::one_d(grid.cast<std::size_t>());
  const auto t = grid.cast<std::vector<std::size_t>>();
  if (t.size() == 1) return tl::GridShape::one_d(t[0]);
  if (t.size() == 2) return tl::GridShape::two_d(t[0], t[1]);
  throw tl::DimensionError("grid must be M or (M1, M2)");
}

py::object grid_to(const tl::GridShape& g) {
  if (g.is_2d()) return py::make_tuple(g.m1, g.m2);
  return py::int_(g.m1);
}

tl::Architecture arch_from(const std::string& name) { return tl::architecture_from_string(name); }

py::dict solver_result(const tl::SolverResult& r) {
  py::dict d;
  d["x_hat"] = to_numpy(r.x_hat);
  d["iterations"] = r.iterations_run;
  d["converged"] = r.converged;
  d["objective_trace"] = r.objective_trace;
  d["lambda"] = r.lambda;
  d["lipschitz"] = r.lipschitz;
  return d;
}

tl::SolverConfig solver_config(std::optional<double> lambda, std::size_t max_iter, double tol, bool trace) {
  tl::SolverConfig c;
  c.lambda = lambda;
  c.max_iter = max_iter;
  c.tol = tol;
  c.record_trace = trace;
  return c;
}

tl::Dataset dataset_from(const CArray& y, const CArray& x, const tl::Dictionary& d) {
  tl::Dataset ds;
  ds.Y = from_numpy(y);
  ds.X = from_numpy(x);
  if (ds.Y.rank() != 2 || ds.X.rank() != 2 || ds.Y.cols() != ds.X.cols()) {
    throw tl::DimensionError("Y and X must be matrices with one column per sample");
  }
  ds.meta.grid = d.grid();
  ds.meta.n_obs = d.rows();
  ds.meta.n_samples = ds.Y.cols();
  ds.meta.sampling = d.sampling();
  return ds;
}

}  // namespace

PYBIND11_MODULE(_toeplista, m) {
  m.doc() = "Sparse harmonic retrieval with Toeplitz-structured unfolded networks";

  py::register_exception<tl::DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<tl::NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<tl::ConditioningError>(m, "ConditioningError", PyExc_ArithmeticError);
  py::register_exception<tl::FormatError>(m, "FormatError", PyExc_IOError);

  m.def("fourier_matrix", [](std::size_t n) { return to_numpy(tl::fourier_matrix(n)); }, py::arg("m"));
  m.def("draw_sampling", [](std::size_t mm, std::size_t n, std::uint64_t seed) { return tl::draw_sampling(mm, n, seed).omega; },
        py::arg("m"), py::arg("n"), py::arg("seed"));
  m.def("soft_threshold", [](const CArray& x, double theta) { return to_numpy(tl::soft_threshold(from_numpy(x), tl::Threshold(theta))); },
        py::arg("x"), py::arg("theta"));
  m.def("lipschitz_constant", [](const CArray& phi) { return tl::lipschitz_constant(from_numpy(phi)).value; }, py::arg("phi"));

  py::class_<tl::Dictionary>(m, "Dictionary")
      .def(py::init([](const py::object& grid, std::vector<std::size_t> omega, bool materialize) {
             return tl::Dictionary(grid_from(grid), tl::SamplingSet{std::move(omega), 0}, materialize);
           }),
           py::arg("grid"), py::arg("omega"), py::arg("materialize") = true)
      .def_static("random", [](const py::object& grid, std::size_t n, std::uint64_t seed) {
             const auto g = grid_from(grid);
             return tl::build_dictionary(g, tl::draw_sampling(g.total(), n, seed));
           }, py::arg("grid"), py::arg("n"), py::arg("seed"))
      .def_property_readonly("grid", [](const tl::Dictionary& d) { return grid_to(d.grid()); })
      .def_property_readonly("omega", [](const tl::Dictionary& d) { return d.sampling().omega; })
      .def_property_readonly("rows", &tl::Dictionary::rows)
      .def_property_readonly("cols", &tl::Dictionary::cols)
      .def("matrix", [](const tl::Dictionary& d) { return to_numpy(d.matrix()); })
      .def("apply", [](const tl::Dictionary& d, const CArray& x) { return to_numpy(d.apply(from_numpy(x))); })
      .def("apply_adjoint", [](const tl::Dictionary& d, const CArray& r) { return to_numpy(d.apply_adjoint(from_numpy(r))); })
      .def("gram", [](const tl::Dictionary& d) { return to_numpy(tl::gram(d)); })
      .def("lipschitz", &tl::dictionary_lipschitz);

  m.def("gen_sparse_signal", [](std::size_t mm, std::size_t k, std::uint64_t seed) { return to_numpy(tl::gen_sparse_signal(mm, k, seed)); },
        py::arg("m"), py::arg("k"), py::arg("seed"));
  m.def("add_noise", [](const CArray& y, double sigma2, std::uint64_t seed) { return to_numpy(tl::add_noise(from_numpy(y), sigma2, seed)); },
        py::arg("y"), py::arg("sigma2"), py::arg("seed"));
  m.def("synth_offgrid",
        [](const tl::Dictionary& d, std::vector<std::size_t> idx, double frac, const CArray& amps) {
          return to_numpy(tl::synth_offgrid(d, idx, frac, from_numpy(amps)));
        },
        py::arg("dictionary"), py::arg("indices"), py::arg("frac"), py::arg("amplitudes"));
  m.def("gen_dataset",
        [](const tl::Dictionary& d, std::size_t n, std::size_t k, double sigma2, std::uint64_t seed) {
          const tl::Dataset ds = tl::gen_dataset(d, n, k, sigma2, seed);
          return py::make_tuple(to_numpy(ds.Y), to_numpy(ds.X));
        },
        py::arg("dictionary"), py::arg("n_samples"), py::arg("k"), py::arg("sigma2"), py::arg("seed"),
        "Returns (Y, X) with one column per sample.");

  m.def("conv1d", [](const CArray& h, const CArray& x) {
          const tl::ComplexArray xa = from_numpy(x);
          return to_numpy(tl::convolve(tl::ToeplitzVec(xa.size(), from_numpy(h)), xa));
        },
        py::arg("h"), py::arg("x"), "Linear convolution with h_{-(M-1)} .. h_{M-1}, output length M.");
  m.def("conv2d", [](const CArray& h, const CArray& x) {
          const tl::ComplexArray xa = from_numpy(x);
          return to_numpy(tl::convolve(tl::ToeplitzMat2D(xa.rows(), xa.cols(), from_numpy(h)), xa));
        },
        py::arg("h"), py::arg("x"));
  m.def("toeplitz_expand", [](const CArray& h) {
          const tl::ComplexArray ha = from_numpy(h);
          return to_numpy(tl::toeplitz_expand(tl::ToeplitzVec((ha.size() + 1) / 2, ha)));
        },
        py::arg("h"));
  m.def("dbt_expand", [](const CArray& h) {
          const tl::ComplexArray ha = from_numpy(h);
          return to_numpy(tl::dbt_expand(tl::ToeplitzMat2D((ha.rows() + 1) / 2, (ha.cols() + 1) / 2, ha)));
        },
        py::arg("h"));

  m.def("ista",
        [](const tl::Dictionary& d, const CArray& y, std::optional<double> lambda, std::size_t max_iter, double tol, bool trace) {
          return solver_result(tl::ista(d, from_numpy(y), solver_config(lambda, max_iter, tol, trace)));
        },
        py::arg("dictionary"), py::arg("y"), py::arg("lam") = py::none(), py::arg("max_iter") = 1000,
        py::arg("tol") = 1e-10, py::arg("record_trace") = false);
  m.def("fista",
        [](const tl::Dictionary& d, const CArray& y, std::optional<double> lambda, std::size_t max_iter, double tol, bool trace) {
          return solver_result(tl::fista(d, from_numpy(y), solver_config(lambda, max_iter, tol, trace)));
        },
        py::arg("dictionary"), py::arg("y"), py::arg("lam") = py::none(), py::arg("max_iter") = 1000,
        py::arg("tol") = 1e-10, py::arg("record_trace") = false);
  m.def("objective", [](const tl::Dictionary& d, const CArray& x, const CArray& y, double lambda) {
          return tl::objective(d, from_numpy(x), from_numpy(y), lambda);
        },
        py::arg("dictionary"), py::arg("x"), py::arg("y"), py::arg("lam"));

  py::class_<tl::UnfoldedNetwork>(m, "UnfoldedNetwork")
      .def_static("init",
                  [](const std::string& arch, const tl::Dictionary& d, std::size_t depth, double lambda, const std::string& init) {
                    tl::InitOptions o;
                    o.lambda = lambda;
                    if (init == "ista") {
                      o.inhibition = tl::InhibitionInit::IstaMatched;
                    } else if (init != "zero") {
                      throw std::invalid_argument("init must be 'zero' or 'ista'");
                    }
                    return tl::init_network(arch_from(arch), d, depth, o);
                  },
                  py::arg("arch"), py::arg("dictionary"), py::arg("depth"), py::arg("lam") = 0.1, py::arg("init") = "zero")
      .def_static("load", [](const std::filesystem::path& p) { return tl::load_model(p); }, py::arg("path"))
      .def("save", [](const tl::UnfoldedNetwork& n, const std::filesystem::path& p) { tl::save_model(p, n); }, py::arg("path"))
      .def_property_readonly("arch", [](const tl::UnfoldedNetwork& n) { return tl::to_string(n.arch()); })
      .def_property_readonly("depth", &tl::UnfoldedNetwork::depth)
      .def_property_readonly("grid", [](const tl::UnfoldedNetwork& n) { return grid_to(n.dims().grid); })
      .def_property_readonly("n_obs", [](const tl::UnfoldedNetwork& n) { return n.dims().n_obs; })
      .def_property_readonly("thresholds", [](const tl::UnfoldedNetwork& n) {
        std::vector<double> t;
        for (const auto& l : n.layers()) t.push_back(l.theta);
        return t;
      })
      .def("param_count", [](const tl::UnfoldedNetwork& n) { return tl::param_count(n).total; })
      .def("__call__", [](const tl::UnfoldedNetwork& n, const CArray& y) { return to_numpy(tl::forward(n, from_numpy(y))); },
           py::arg("y"))
      .def("loss", [](const tl::UnfoldedNetwork& n, const tl::Dictionary& d, const CArray& y, const CArray& x) {
             return tl::loss_nmse(n, dataset_from(y, x, d));
           },
           py::arg("dictionary"), py::arg("Y"), py::arg("X"));

  m.def("train",
        [](const tl::UnfoldedNetwork& net, const tl::Dictionary& d, const CArray& y_train, const CArray& x_train,
           const CArray& y_val, const CArray& x_val, std::size_t epochs, double lr, std::size_t batch, std::uint64_t seed) {
          tl::TrainConfig cfg;
          cfg.epochs = epochs;
          cfg.learning_rate = lr;
          cfg.batch_size = batch;
          cfg.seed = seed;
          tl::TrainResult r = [&] {
            py::gil_scoped_release release;
            return tl::train(net, dataset_from(y_train, x_train, d), dataset_from(y_val, x_val, d), cfg);
          }();
          py::dict report;
          report["train_loss"] = r.report.loss_history;
          report["val_loss"] = r.report.val_history;
          report["initial_val"] = r.report.initial_val;
          report["best_val"] = r.report.best_val;
          report["best_epoch"] = r.report.best_epoch;
          return py::make_tuple(std::move(r.net), report);
        },
        py::arg("net"), py::arg("dictionary"), py::arg("Y_train"), py::arg("X_train"), py::arg("Y_val"), py::arg("X_val"),
        py::arg("epochs") = 30, py::arg("lr") = 1e-3, py::arg("batch_size") = 128, py::arg("seed") = 0,
        "Returns (best network, report dict).");

  m.def("param_count", [](const std::string& arch, const py::object& grid, std::size_t n, std::size_t depth) {
          const tl::ParamCount pc = tl::param_count(arch_from(arch), tl::NetworkDims{grid_from(grid), n}, depth);
          py::dict d;
          d["total"] = pc.total;
          d["inhibition"] = pc.inhibition_total;
          return d;
        },
        py::arg("arch"), py::arg("grid"), py::arg("n"), py::arg("depth"));

  m.def("nmse", [](const CArray& x_hat, const CArray& x_true) { return tl::nmse_metric(from_numpy(x_hat), from_numpy(x_true)); },
        py::arg("x_hat"), py::arg("x_true"));
  m.def("hit_rate", [](const CArray& x_hat, const CArray& x_true, std::size_t k) {
          return tl::hit_rate_metric(from_numpy(x_hat), from_numpy(x_true), k);
        },
        py::arg("x_hat"), py::arg("x_true"), py::arg("k"));
  m.def("top_k_indices", [](const CArray& x, std::size_t k) { return tl::top_k_indices(from_numpy(x), k); },
        py::arg("x"), py::arg("k"));

  m.def("run_sweep",
        [](const py::object& grid, std::size_t n, std::size_t k, std::vector<double> noise_db, std::vector<std::string> methods,
           std::size_t trials, std::uint64_t seed, std::uint64_t sampling_seed, std::optional<double> lambda) {
          tl::ExperimentConfig cfg;
          cfg.grid = grid_from(grid);
          cfg.n_obs = n;
          cfg.k = k;
          cfg.noise_powers_db = std::move(noise_db);
          cfg.methods.clear();
          for (const auto& s : methods) cfg.methods.push_back(tl::method_from_string(s));
          cfg.trials_per_point = trials;
          cfg.seed = seed;
          cfg.sampling_seed = sampling_seed;
          cfg.lambda = lambda;
          std::vector<tl::MetricRow> rows;
          {
            py::gil_scoped_release release;
            rows = tl::run_sweep(cfg, {});
          }
          py::list out;
          for (const auto& r : rows) {
            py::dict d;
            d["method"] = r.method;
            d["noise_power_db"] = r.noise_power_db;
            d["nmse_db"] = r.nmse_db;
            d["hit_rate"] = r.hit_rate;
            d["trials"] = r.trials;
            out.append(d);
          }
          return out;
        },
        py::arg("grid"), py::arg("n"), py::arg("k"), py::arg("noise_db"), py::arg("methods"), py::arg("trials") = 100,
        py::arg("seed") = 1, py::arg("sampling_seed") = 1, py::arg("lam") = py::none(),
        "Noise sweep for ISTA/FISTA; one dict per (method, noise point).");
}
