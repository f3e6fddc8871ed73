// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "toeplista/bench.hpp"
#include "toeplista/solvers.hpp"
#include "toeplista/unfolded.hpp"

using namespace toeplista;
using namespace test_support;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double db(double ratio) { return 20.0 * std::log10(ratio); }

// ---------------------------------------------------------------------------
// Gram structure

Verdict gram_toeplitz_1d() {
  const auto t0 = Clock::now();
  auto g = rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = std::uniform_int_distribution<std::size_t>(2, 64)(g);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, m)(g);
    const Dictionary d(GridShape::one_d(m), draw_sampling(m, n, g()));
    const ComplexArray gm = gram(d);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t k = 0; k < m; ++k) {
        // Constant along diagonals, Hermitian, and equal to the closed-form sum.
        const cplx diag = i >= k ? gm(i - k, 0) : gm(0, k - i);
        cplx closed = 0.0;
        for (auto row : d.sampling().omega) {
          const double ang = 2.0 * std::numbers::pi * static_cast<double>(row) *
                             (static_cast<double>(k) - static_cast<double>(i)) / static_cast<double>(m);
          closed += std::polar(1.0, ang);
        }
        worst = std::max({worst, std::abs(gm(i, k) - diag), std::abs(gm(i, k) - std::conj(gm(k, i))),
                          std::abs(gm(i, k) - closed)});
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-10 && secs < 5.0, fmt("50 dictionaries, max deviation %.3g (< 1e-10), %.2f s (< 5 s)", worst, secs)};
}

Verdict gram_toeplitz_2d() {
  auto g = rng(102);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m1 = std::uniform_int_distribution<std::size_t>(1, 8)(g);
    const std::size_t m2 = std::uniform_int_distribution<std::size_t>(1, 8)(g);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, m1 * m2)(g);
    const Dictionary d(GridShape::two_d(m1, m2), draw_sampling(m1 * m2, n, g()));
    const ComplexArray gm = gram(d);
    worst = std::max(worst, max_abs_diff(dbt_expand(dbt_generator(gm, m1, m2)), gm));
  }
  return {worst < 1e-10, fmt("20 dictionaries, max |dbt_expand(generator) - gram| %.3g (< 1e-10)", worst)};
}

// ---------------------------------------------------------------------------
// Convolution

Verdict convolution_equivalence() {
  auto g = rng(103);
  double dense1 = 0.0;
  double dense2 = 0.0;
  double fft = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 96)(g);
    const ToeplitzVec t(m, random_vector(2 * m - 1, g));
    const ComplexArray x = random_vector(m, g);
    const ComplexArray direct = conv1d(t, x);
    dense1 = std::max(dense1, max_abs_diff(direct, matvec(toeplitz_expand(t), x)));
    fft = std::max(fft, max_abs_diff(conv1d_fft(t, x), direct));

    const std::size_t m1 = std::uniform_int_distribution<std::size_t>(1, 9)(g);
    const std::size_t m2 = std::uniform_int_distribution<std::size_t>(1, 9)(g);
    const ToeplitzMat2D t2(m1, m2, random_matrix(2 * m1 - 1, 2 * m2 - 1, g));
    const ComplexArray x2 = random_matrix(m1, m2, g);
    dense2 = std::max(dense2, max_abs_diff(conv2d(t2, x2).flattened(), matvec(dbt_expand(t2), x2.flattened())));
  }
  const bool ok = dense1 < 1e-10 && dense2 < 1e-10 && fft < 1e-9;
  return {ok, fmt("500 cases: conv1d vs dense %.3g, conv2d vs dense %.3g (< 1e-10), conv1d_fft vs conv1d %.3g (< 1e-9)",
                  dense1, dense2, fft)};
}

// ---------------------------------------------------------------------------
// Iterative solvers

Verdict solver_correctness() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.grid = GridShape::one_d(512);
  cfg.n_obs = 64;
  cfg.k = 5;
  const Dictionary d = experiment_dictionary(cfg);
  const double lip = dictionary_lipschitz(d);
  std::size_t ista_hits = 0;
  std::size_t fista_hits = 0;
  std::size_t reached = 0;
  std::size_t worst_fista = 0;
  double ratio_sum = 0.0;
  const std::size_t trials = 100;
  for (std::size_t t = 0; t < trials; ++t) {
    const Instance inst = make_instance(cfg, d, 0.0, make_rng(1, t)());
    // Noiseless data: lambda a hundredth of ||Phi^H y||_inf keeps weak components.
    SolverConfig sc;
    sc.lambda = 0.01 * max_abs(d.apply_adjoint(inst.y));
    sc.lipschitz = lip;
    sc.tol = 0.0;
    sc.record_trace = true;
    sc.max_iter = 1500;
    const SolverResult ri = ista(d, inst.y, sc);
    sc.max_iter = 110;
    const SolverResult rf = fista(d, inst.y, sc);
    ista_hits += hit_rate_metric(ri.x_hat, inst.x_true, cfg.k) == 1.0;
    fista_hits += hit_rate_metric(rf.x_hat, inst.x_true, cfg.k) == 1.0;

    // Iterations each solver needs to come within 1e-6 of ISTA's converged objective.
    const double target = ri.objective_trace.back() * (1.0 + 1e-6);
    sc.max_iter = 1500 / 5;
    const SolverResult rf_long = fista(d, inst.y, sc);
    const auto first_below = [&](const std::vector<double>& tr) {
      for (std::size_t i = 0; i < tr.size(); ++i) {
        if (tr[i] <= target) return i + 1;
      }
      return tr.size() + 1;
    };
    const std::size_t nf = first_below(rf_long.objective_trace);
    const std::size_t ni = first_below(ri.objective_trace);
    if (nf <= 1500 / 5) ++reached;
    worst_fista = std::max(worst_fista, nf);
    ratio_sum += static_cast<double>(ni) / static_cast<double>(nf);
  }
  const double secs = seconds_since(t0);
  const bool ok = ista_hits == trials && fista_hits == trials && reached == trials && secs < 120.0;
  return {ok, fmt("hit rate 1.0 in %zu/%zu (ISTA 1500) and %zu/%zu (FISTA 110); FISTA within 1e-6 of ISTA's "
                  "objective in <= 300 iterations for %zu/%zu (worst %zu, mean ISTA/FISTA iteration ratio %.2f); %.1f s (< 120 s)",
                  ista_hits, trials, fista_hits, trials, reached, trials, worst_fista, ratio_sum / trials, secs)};
}

// ---------------------------------------------------------------------------
// Unfolded networks

ComplexArray expand_inhibition(const Inhibition& inh) {
  if (const auto* t = std::get_if<ToeplitzVec>(&inh)) return toeplitz_expand(*t);
  if (const auto* t2 = std::get_if<ToeplitzMat2D>(&inh)) return dbt_expand(*t2);
  return std::get<ComplexArray>(inh);
}

UnfoldedNetwork random_network(Architecture arch, const NetworkDims& dims, std::size_t depth, std::mt19937_64& g,
                               double scale) {
  UnfoldedNetwork net = UnfoldedNetwork::zeros(arch, dims, depth);
  std::normal_distribution<double> nd(0.0, scale);
  std::uniform_real_distribution<double> th(0.05, 0.2);
  for (auto& layer : net.layers()) layer.theta = th(g);
  for (auto plane : net.planes()) {
    if (plane.size() == 1) continue;
    for (double& v : plane) v = nd(g);
  }
  return net;
}

Verdict network_equivalence() {
  auto g = rng(104);
  double worst = 0.0;
  for (const auto& [arch, dims] : std::vector<std::pair<Architecture, NetworkDims>>{
           {Architecture::Toeplitz1D, NetworkDims{GridShape::one_d(48), 12}},
           {Architecture::Toeplitz2D, NetworkDims{GridShape::two_d(6, 7), 10}}}) {
    for (int trial = 0; trial < 20; ++trial) {
      const UnfoldedNetwork net = random_network(arch, dims, 5, g, 0.2);
      std::vector<LayerParams> dense_layers;
      for (const auto& layer : net.layers()) dense_layers.push_back({layer.filter, expand_inhibition(layer.inhibition), layer.theta});
      const UnfoldedNetwork dense(Architecture::Lista, dims, dense_layers);
      const ComplexArray y = random_vector(dims.n_obs, g);
      worst = std::max(worst, rel_diff(forward(net, y), forward(dense, y)));
    }
  }
  return {worst < 1e-10, fmt("20 cases each 1D/2D, max relative difference to dense LISTA %.3g (< 1e-10)", worst)};
}

Verdict gradient_check() {
  auto g = rng(105);
  const NetworkDims dims{GridShape::one_d(16), 8};
  auto make_batch = [&] {
    std::vector<ComplexArray> ys;
    std::vector<ComplexArray> xs;
    for (int i = 0; i < 4; ++i) {
      ys.push_back(random_vector(8, g));
      xs.push_back(random_vector(16, g));
    }
    DatasetMeta meta;
    meta.grid = dims.grid;
    meta.n_obs = dims.n_obs;
    return make_dataset(ys, xs, meta);
  };
  auto margin = [](const UnfoldedNetwork& net, const Dataset& batch) {
    double m = 1e300;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ForwardTrace tr;
      forward(net, batch.observation(i), &tr);
      for (std::size_t t = 0; t < net.depth(); ++t) {
        for (std::size_t k = 0; k < tr.pre[t].size(); ++k) {
          m = std::min(m, std::abs(std::abs(tr.pre[t][k]) - net.layers()[t].theta));
        }
      }
    }
    return m;
  };
  UnfoldedNetwork net = random_network(Architecture::Toeplitz1D, dims, 3, g, 0.3);
  Dataset batch = make_batch();
  int redraws = 0;
  while (margin(net, batch) < 1e-2 && redraws < 500) {
    net = random_network(Architecture::Toeplitz1D, dims, 3, g, 0.3);
    batch = make_batch();
    ++redraws;
  }
  if (margin(net, batch) < 1e-2) return {false, "no parameter point found 1e-2 away from every threshold kink"};

  const UnfoldedNetwork grad = loss_and_gradient(net, batch).gradient;
  const auto analytic = grad.planes();
  UnfoldedNetwork probe = net;
  auto planes = probe.planes();
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < planes.size(); ++k) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < planes[k].size(); ++i) {
      const double keep = planes[k][i];
      planes[k][i] = keep + h;
      const double up = loss_nmse(probe, batch);
      planes[k][i] = keep - h;
      const double down = loss_nmse(probe, batch);
      planes[k][i] = keep;
      const double fd = (up - down) / (2.0 * h);
      num += (fd - analytic[k][i]) * (fd - analytic[k][i]);
      den += analytic[k][i] * analytic[k][i];
    }
    worst = std::max(worst, std::sqrt(num / std::max(den, 1e-300)));
  }
  return {worst < 1e-4, fmt("%zu planes of a 3-layer 1D Toeplitz network, worst relative error %.3g (< 1e-4)",
                            planes.size(), worst)};
}

// ---------------------------------------------------------------------------
// Training at desk scale: M = 64, N = 16, K = 2, 5000 / 500 samples, sigma2 = 0.1

struct DeskScale {
  Dictionary d = build_dictionary(GridShape::one_d(64), draw_sampling(64, 16, 1));
  Dataset train = gen_dataset(d, 5000, 2, 0.1, 11);
  Dataset val = gen_dataset(d, 500, 2, 0.1, 12);

  TrainConfig config(std::size_t epochs = 30) const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = 3;
    return cfg;
  }
  ExperimentConfig experiment() const {
    ExperimentConfig cfg;
    cfg.grid = GridShape::one_d(64);
    cfg.n_obs = 16;
    cfg.k = 2;
    cfg.sampling_seed = 1;
    return cfg;
  }
};

const DeskScale& desk() {
  static const DeskScale s;
  return s;
}

const TrainResult& trained(Architecture arch) {
  static std::map<Architecture, TrainResult> cache;
  if (auto it = cache.find(arch); it != cache.end()) return it->second;
  const DeskScale& s = desk();
  return cache.emplace(arch, train(init_network(arch, s.d, 5), s.train, s.val, s.config())).first->second;
}

Verdict training_gain() {
  const auto t0 = Clock::now();
  const DeskScale& s = desk();
  const TrainResult& a = trained(Architecture::Toeplitz1D);
  const double gain = db(a.report.initial_val / a.report.best_val);
  const TrainResult b = train(init_network(Architecture::Toeplitz1D, s.d, 5), s.train, s.val, s.config());
  const bool deterministic = a.report.val_history == b.report.val_history && a.report.best_val == b.report.best_val;

  // Trained 5-layer network against 10-iteration ISTA on fresh instances.
  ExperimentConfig cfg = s.experiment();
  cfg.methods = {Method::ListaToeplitz, Method::Ista};
  cfg.iteration_budgets[Method::Ista] = 10;
  cfg.noise_powers_db = {-20.0, -10.0, -5.0, 0.0};
  cfg.trials_per_point = 200;
  cfg.seed = 77;
  ModelSet models;
  models.emplace(Method::ListaToeplitz, a.net);
  const auto rows = run_sweep(cfg, models);
  bool beats = true;
  std::string ordering;
  for (std::size_t p = 0; p < cfg.noise_powers_db.size(); ++p) {
    const MetricRow& net = rows[p];
    const MetricRow& ista = rows[cfg.noise_powers_db.size() + p];
    beats = beats && net.nmse_db < ista.nmse_db;
    ordering += fmt(" %g dB: %.2f vs %.2f;", net.noise_power_db, net.nmse_db, ista.nmse_db);
  }
  const double secs = seconds_since(t0);
  const bool ok = gain >= 6.0 && deterministic && beats && secs < 600.0;
  return {ok, fmt("validation NMSE %.2f -> %.2f dB, gain %.2f dB (>= 6) at epoch %zu; rerun identical: %s; "
                  "trained vs ISTA-10 NMSE [dB]:%s %.0f s (< 600 s)",
                  db(a.report.initial_val), db(a.report.best_val), gain, a.report.best_epoch,
                  deterministic ? "yes" : "no", ordering.c_str(), secs)};
}

Verdict convlista_inferiority() {
  const DeskScale& s = desk();
  const UnfoldedNetwork& toeplitz = trained(Architecture::Toeplitz1D).net;
  const UnfoldedNetwork& conv = trained(Architecture::ConvLista).net;
  bool ok = true;
  std::string detail = "matched budget (T=5, 30 epochs, same data);";
  std::uint64_t seed = 21;
  for (double sigma2 : {0.1, 0.01, 0.001}) {
    const Dataset test = gen_dataset(s.d, 1000, 2, sigma2, seed++);
    double hit_conv = 0.0;
    double hit_toep = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      hit_conv += hit_rate_metric(forward(conv, test.observation(i)), test.truth(i), 2);
      hit_toep += hit_rate_metric(forward(toeplitz, test.observation(i)), test.truth(i), 2);
    }
    hit_conv /= static_cast<double>(test.size());
    hit_toep /= static_cast<double>(test.size());
    ok = ok && hit_conv < hit_toep;
    detail += fmt(" sigma2=%g: ConvLISTA %.3f < LISTA-Toeplitz %.3f;", sigma2, hit_conv, hit_toep);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// Complexity

Verdict parameter_accounting() {
  const NetworkDims dims{GridShape::one_d(512), 64};
  const std::size_t dense = param_count(Architecture::Lista, dims, 10).inhibition_total;
  const std::size_t toep = param_count(Architecture::Toeplitz1D, dims, 10).inhibition_total;
  const bool ok = dense == 10u * 512u * 512u && dense == 2621440u && toep == 10u * (2u * 512u - 1u) && toep == 10230u;
  return {ok, fmt("T=10, M=512 inhibition parameters: LISTA %zu (= 10 M^2), LISTA-Toeplitz %zu (= 10 (2M-1))", dense,
                  toep)};
}

Verdict scaling() {
  const std::size_t reps = 5;
  const NetworkDims small{GridShape::one_d(512), 64};
  const NetworkDims large{GridShape::one_d(4096), 64};
  const double t_small = time_layer(Architecture::Toeplitz1D, small, reps, 1);
  const double t_large = time_layer(Architecture::Toeplitz1D, large, reps, 1);
  const double d_small = time_layer(Architecture::Lista, small, reps, 1);
  const double d_large = time_layer(Architecture::Lista, large, reps, 1);
  const double toep = t_large / t_small;
  const double dense = d_large / d_small;
  return {toep < 12.0 && dense > 32.0,
          fmt("median of %zu, M 512 -> 4096: Toeplitz layer %.3f -> %.3f ms, ratio %.2f (< 12); dense layer %.3f -> "
              "%.3f ms, ratio %.1f (> 32)",
              reps, t_small, t_large, toep, d_small, d_large, dense)};
}

// ---------------------------------------------------------------------------
// Off-grid robustness

Verdict offgrid_robustness() {
  const DeskScale& s = desk();
  // Ten layers matched to ISTA at initialization, then trained on on-grid data.
  const TrainResult r = train(init_network(Architecture::Toeplitz1D, s.d, 10, {0.1, InhibitionInit::IstaMatched}),
                              s.train, s.val, s.config());
  ExperimentConfig cfg = s.experiment();
  cfg.offgrid = true;
  cfg.offgrid_frac = 0.25;
  const std::size_t m = cfg.grid.total();
  std::size_t good = 0;
  const std::size_t trials = 200;
  for (std::size_t t = 0; t < trials; ++t) {
    const Instance inst = make_instance(cfg, s.d, 0.0, 1000 + t);
    const auto top = top_k_indices(forward(r.net, inst.y), cfg.k);
    bool all_near = true;
    for (std::size_t i : top) {
      bool near = false;
      for (std::size_t sup : inst.support) {
        // Circular distance from cell i to the true frequency sup + frac, in cells.
        double dist = std::abs(static_cast<double>(i) - (static_cast<double>(sup) + cfg.offgrid_frac));
        dist = std::min(dist, static_cast<double>(m) - dist);
        near = near || dist <= 1.0;
      }
      all_near = all_near && near;
    }
    good += all_near;
  }
  const double rate = static_cast<double>(good) / static_cast<double>(trials);
  return {rate >= 0.95, fmt("T=10 LISTA-Toeplitz, frac 0.25, noiseless: every top-%zu entry within one cell of a true "
                            "frequency in %zu/%zu trials (%.1f%%, >= 95%%)",
                            cfg.k, good, trials, 100.0 * rate)};
}

// ---------------------------------------------------------------------------
// CLI reproducibility

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Verdict cli_reproducibility() {
#ifndef TOEPLISTA_CLI_PATH
  return {false, "command-line tool was not built"};
#else
  const fs::path root = fs::temp_directory_path() / ("toeplista_accept_" + std::to_string(std::random_device{}()));
  const std::string cli = TOEPLISTA_CLI_PATH;
  // Each run writes into its own directory; outputs are compared across the two runs.
  const std::vector<std::pair<std::string, std::string>> runs{
      {"gen", "gen-data --kind 2d --M1 8 --M2 8 --N 24 --K 2 --samples 4 --seed 5 --out data.bin --iq-out scene.iq"},
      {"sweep", "sweep --methods ISTA FISTA --noise-db -10 0 --trials 30 --seed 4 --threads 2 --out sweep.csv"},
      {"offgrid", "sweep --methods FISTA --offgrid --frac 0.25 --tolerant --trials 20 --out offgrid.csv"},
      {"single", "single --methods ISTA FISTA --seed 9 --out single.csv"},
      {"complexity", "complexity --sizes 64 128 256 --out complexity.csv"},
      {"train", "train --arch LISTA-Toeplitz --layers 3 --train-size 300 --val-size 60 --epochs 3 --seed 2 "
                "--out model.bin --history history.csv"},
      {"learned", "sweep --methods LISTA-Toeplitz ISTA --model LISTA-Toeplitz=model.bin --trials 20 --out learned.csv"},
      {"ingest", "ingest --input scene.iq --method FISTA --top-k 2 --out ingest.csv"},
  };
  const std::vector<std::string> outputs{"sweep.csv",   "offgrid.csv", "single.csv", "complexity.csv",
                                         "history.csv", "learned.csv", "ingest.csv", "data.bin"};
  for (const char* rep : {"a", "b"}) {
    const fs::path dir = root / rep;
    fs::create_directories(dir);
    for (const auto& [name, args] : runs) {
      const std::string cmd = "cd \"" + dir.string() + "\" && \"" + cli + "\" " + args + " > " + name + ".log 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        const std::string log = slurp(dir / (name + ".log"));
        fs::remove_all(root);
        return {false, "run '" + name + "' failed: " + log.substr(0, 200)};
      }
    }
  }
  bool ok = true;
  std::string detail = fmt("%zu commands run twice;", runs.size());
  for (const auto& out : outputs) {
    const std::string a = slurp(root / "a" / out);
    const std::string b = slurp(root / "b" / out);
    const bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += fmt(" %s %s (%zu bytes);", out.c_str(), same ? "identical" : "DIFFERS", a.size());
  }
  fs::remove_all(root);
  return {ok, detail};
#endif
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gram-toeplitz-1d", gram_toeplitz_1d},
      {"gram-toeplitz-2d", gram_toeplitz_2d},
      {"convolution-equivalence", convolution_equivalence},
      {"ista-fista-correctness", solver_correctness},
      {"network-equivalence", network_equivalence},
      {"gradient-check", gradient_check},
      {"desk-scale-training-gain", training_gain},
      {"convlista-inferiority", convlista_inferiority},
      {"parameter-accounting", parameter_accounting},
      {"scaling", scaling},
      {"offgrid-robustness", offgrid_robustness},
      {"cli-reproducibility", cli_reproducibility},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
