#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

#include "toeplista/bench.hpp"
#include "toeplista/io.hpp"
#include "toeplista/solvers.hpp"

namespace toeplista {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_model(Method m, const ExperimentConfig& cfg, const UnfoldedNetwork& net) {
  if (net.arch() != method_architecture(m, cfg.grid)) {
    throw std::invalid_argument(to_string(m) + ": model architecture is " + to_string(net.arch()));
  }
  if (!(net.dims() == NetworkDims{cfg.grid, cfg.n_obs})) {
    throw DimensionError(to_string(m) + ": model dimensions differ from the experiment");
  }
}

struct TrialOutcome {
  std::vector<double> nmse;
  std::vector<double> hit;
  std::vector<double> ms;
};

}  // namespace

std::size_t ExperimentConfig::budget(Method m) const {
  if (const auto it = iteration_budgets.find(m); it != iteration_budgets.end()) return it->second;
  return m == Method::Ista ? 1000 : m == Method::Fista ? 100 : 10;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw std::invalid_argument("experiment: no methods selected");
  if (noise_powers_db.empty()) throw std::invalid_argument("experiment: no noise points");
  if (trials_per_point == 0) throw std::invalid_argument("experiment: trials per point must be positive");
  for (const auto& [m, b] : iteration_budgets) {
    if (b == 0) throw std::invalid_argument("experiment: budget for " + to_string(m) + " must be positive");
  }
  if (grid.total() == 0 || n_obs == 0 || n_obs > grid.total()) throw DimensionError("experiment: need 0 < N <= M");
  if (k > grid.total()) throw std::invalid_argument("experiment: K exceeds M");
  if (threads == 0) throw std::invalid_argument("experiment: threads must be positive");
}

ModelSet load_models(const ExperimentConfig& cfg) {
  ModelSet models;
  const SamplingSet expected = draw_sampling(cfg.grid.total(), cfg.n_obs, cfg.sampling_seed);
  for (Method m : cfg.methods) {
    if (!is_learned(m) || models.contains(m)) continue;
    const auto it = cfg.model_paths.find(m);
    if (it == cfg.model_paths.end()) throw std::invalid_argument("missing model file for " + to_string(m));
    ModelInfo info;
    UnfoldedNetwork net = load_model(it->second, &info);
    check_model(m, cfg, net);
    if (info.sampling && info.sampling->omega != expected.omega) {
      throw DimensionError(to_string(m) + ": model was trained on a different sampling set");
    }
    models.emplace(m, std::move(net));
  }
  return models;
}

Dictionary experiment_dictionary(const ExperimentConfig& cfg) {
  return build_dictionary(cfg.grid, draw_sampling(cfg.grid.total(), cfg.n_obs, cfg.sampling_seed));
}

Instance make_instance(const ExperimentConfig& cfg, const Dictionary& d, double sigma2, std::uint64_t seed) {
  Instance inst;
  inst.x_true = gen_sparse_signal(d.cols(), cfg.k, make_rng(seed, 0)());
  std::vector<cplx> amps;
  for (std::size_t i = 0; i < inst.x_true.size(); ++i) {
    if (inst.x_true[i] != cplx(0.0)) {
      inst.support.push_back(i);
      amps.push_back(inst.x_true[i]);
    }
  }
  inst.y = cfg.offgrid ? synth_offgrid(d, inst.support, cfg.offgrid_frac, ComplexArray::vector(amps))
                       : d.apply(inst.x_true);
  if (sigma2 > 0.0) inst.y = add_noise(inst.y, sigma2, make_rng(seed, 1)());
  return inst;
}

ComplexArray recover(Method m, const ExperimentConfig& cfg, const Dictionary& d, const ModelSet& models,
                     const ComplexArray& y, std::optional<double> lipschitz) {
  if (is_learned(m)) {
    const auto it = models.find(m);
    if (it == models.end()) throw std::invalid_argument("no model loaded for " + to_string(m));
    return forward(it->second, y);
  }
  SolverConfig sc;
  sc.lambda = cfg.lambda;
  sc.max_iter = cfg.budget(m);
  sc.tol = 0.0;
  sc.lipschitz = lipschitz;
  return m == Method::Ista ? ista(d, y, sc).x_hat : fista(d, y, sc).x_hat;
}

std::vector<MetricRow> run_sweep(const ExperimentConfig& cfg, const ModelSet& models) {
  cfg.validate();
  if (cfg.k == 0) throw std::invalid_argument("run_sweep: K must be positive");
  for (Method m : cfg.methods) {
    if (!is_learned(m)) continue;
    const auto it = models.find(m);
    if (it == models.end()) throw std::invalid_argument("missing model for " + to_string(m));
    check_model(m, cfg, it->second);
  }
  const Dictionary d = experiment_dictionary(cfg);
  const double lip = dictionary_lipschitz(d);
  const std::size_t n_methods = cfg.methods.size();
  const std::size_t n_points = cfg.noise_powers_db.size();

  // outcomes[p][trial] holds one entry per method.
  std::vector<std::vector<TrialOutcome>> outcomes(n_points, std::vector<TrialOutcome>(cfg.trials_per_point));
  const std::size_t total = n_points * cfg.trials_per_point;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  const auto worker = [&] {
    for (std::size_t job = next++; job < total && !failed; job = next++) {
      const std::size_t p = job / cfg.trials_per_point;
      const std::size_t t = job % cfg.trials_per_point;
      try {
        const double sigma2 = noise_variance(cfg.noise_powers_db[p]);
        const std::uint64_t seed = make_rng(cfg.seed, (static_cast<std::uint64_t>(p) << 32) | t)();
        const Instance inst = make_instance(cfg, d, sigma2, seed);
        TrialOutcome& out = outcomes[p][t];
        for (Method m : cfg.methods) {
          const auto start = Clock::now();
          const ComplexArray x_hat = recover(m, cfg, d, models, inst.y, lip);
          out.ms.push_back(cfg.timing ? elapsed_ms(start) : 0.0);
          out.nmse.push_back(nmse_metric(x_hat, inst.x_true));
          out.hit.push_back(hit_rate_metric(x_hat, inst.x_true, cfg.k, cfg.grid, cfg.tolerant_hits));
        }
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(cfg.threads, total);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<MetricRow> rows;
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    for (std::size_t p = 0; p < n_points; ++p) {
      double nmse = 0.0;
      double hit = 0.0;
      double ms = 0.0;
      for (const auto& o : outcomes[p]) {
        nmse += o.nmse[mi];
        hit += o.hit[mi];
        ms += o.ms[mi];
      }
      const auto n = static_cast<double>(cfg.trials_per_point);
      rows.push_back({to_string(cfg.methods[mi]), cfg.noise_powers_db[p], 20.0 * std::log10(nmse / n), hit / n,
                      ms / n, cfg.trials_per_point});
    }
  }
  return rows;
}

std::vector<MetricRow> run_sweep(const ExperimentConfig& cfg) { return run_sweep(cfg, load_models(cfg)); }

void write_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << "method,noise_power_db,nmse_db,hit_rate,mean_runtime_ms,trials\n";
  for (const auto& r : rows) {
    out << r.method << ',' << format_number(r.noise_power_db) << ',' << format_number(r.nmse_db) << ','
        << format_number(r.hit_rate) << ',' << format_number(r.mean_runtime_ms) << ',' << r.trials << '\n';
  }
}

RecoveryDump run_single(const ExperimentConfig& cfg, const ModelSet& models) {
  cfg.validate();
  const Dictionary d = experiment_dictionary(cfg);
  const double lip = dictionary_lipschitz(d);
  const Instance inst = make_instance(cfg, d, noise_variance(cfg.noise_powers_db.front()), cfg.seed);
  RecoveryDump dump{cfg.grid, {}, inst.x_true, {}};
  for (Method m : cfg.methods) {
    dump.methods.push_back(to_string(m));
    dump.x_hat.push_back(recover(m, cfg, d, models, inst.y, lip));
  }
  return dump;
}

RecoveryDump run_single(const ExperimentConfig& cfg) { return run_single(cfg, load_models(cfg)); }

void write_csv(std::ostream& out, const RecoveryDump& dump) {
  out << "index,i1,i2,truth";
  for (const auto& m : dump.methods) out << ',' << m;
  out << '\n';
  for (std::size_t i = 0; i < dump.x_true.size(); ++i) {
    out << i << ',' << i / dump.grid.m2 << ',' << i % dump.grid.m2 << ',' << format_number(std::abs(dump.x_true[i]));
    for (const auto& x : dump.x_hat) out << ',' << format_number(std::abs(x[i]));
    out << '\n';
  }
}

double time_layer(Architecture arch, const NetworkDims& dims, std::size_t repetitions, std::uint64_t seed) {
  if (repetitions == 0) throw std::invalid_argument("time_layer: repetitions must be positive");
  UnfoldedNetwork net = UnfoldedNetwork::zeros(arch, dims, 1);
  auto rng = make_rng(seed, 0x54494d45);  // "TIME"
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  for (auto plane : net.planes()) {
    for (double& v : plane) v = u(rng);
  }
  net.layers()[0].theta = 1e-3;
  ComplexArray y(dims.n_obs);
  ComplexArray x(dims.m());
  for (auto* a : {&y, &x}) {
    for (std::size_t i = 0; i < a->size(); ++i) a->set(i, {u(rng), u(rng)});
  }

  // Repeat the layer inside each sample so a sample lasts at least a few milliseconds.
  auto start = Clock::now();
  ComplexArray sink = layer_step(net, 0, y, x);
  const double once = std::max(elapsed_ms(start), 1e-6);
  const auto inner = static_cast<std::size_t>(std::clamp(std::ceil(5.0 / once), 1.0, 1e6));
  std::vector<double> samples;
  for (std::size_t r = 0; r < repetitions; ++r) {
    start = Clock::now();
    for (std::size_t i = 0; i < inner; ++i) sink = layer_step(net, 0, y, x);
    samples.push_back(elapsed_ms(start) / static_cast<double>(inner));
  }
  if (!sink.all_finite()) throw NumericError("time_layer: non-finite output", 0);
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2), samples.end());
  return samples[samples.size() / 2];
}

std::vector<ComplexityRow> complexity_report(const std::vector<std::size_t>& grid_sizes, const ComplexityOptions& opts) {
  std::vector<ComplexityRow> rows;
  for (std::size_t m : grid_sizes) {
    if (m == 0) throw std::invalid_argument("complexity_report: grid size must be positive");
    const NetworkDims dims{GridShape::one_d(m), std::min(opts.n_obs, m)};
    const LayerParamCount dense = layer_param_count(Architecture::Lista, dims);
    const LayerParamCount toep = layer_param_count(Architecture::Toeplitz1D, dims);
    ComplexityRow r;
    r.m = m;
    r.lista_inhibition = dense.inhibition;
    r.toeplitz_inhibition = toep.inhibition;
    r.lista_layer_params = dense.total();
    r.toeplitz_layer_params = toep.total();
    r.storage_ratio = static_cast<double>(toep.inhibition) / static_cast<double>(dense.inhibition);
    if (opts.timing) {
      r.toeplitz_ms = time_layer(Architecture::Toeplitz1D, dims, opts.repetitions, opts.seed);
      if (opts.include_dense) r.lista_ms = time_layer(Architecture::Lista, dims, opts.repetitions, opts.seed);
    }
    rows.push_back(r);
  }
  if (!rows.empty()) {
    const ComplexityRow& base = rows.front();
    for (auto& r : rows) {
      r.lista_time_ratio = base.lista_ms > 0.0 ? r.lista_ms / base.lista_ms : 0.0;
      r.toeplitz_time_ratio = base.toeplitz_ms > 0.0 ? r.toeplitz_ms / base.toeplitz_ms : 0.0;
    }
  }
  return rows;
}

void write_csv(std::ostream& out, const std::vector<ComplexityRow>& rows) {
  out << "M,lista_inhibition,toeplitz_inhibition,lista_layer_params,toeplitz_layer_params,storage_ratio,"
         "lista_ms,toeplitz_ms,lista_time_ratio,toeplitz_time_ratio\n";
  for (const auto& r : rows) {
    out << r.m << ',' << r.lista_inhibition << ',' << r.toeplitz_inhibition << ',' << r.lista_layer_params << ','
        << r.toeplitz_layer_params << ',' << format_number(r.storage_ratio) << ',' << format_number(r.lista_ms) << ','
        << format_number(r.toeplitz_ms) << ',' << format_number(r.lista_time_ratio) << ','
        << format_number(r.toeplitz_time_ratio) << '\n';
  }
}

}  // namespace toeplista
