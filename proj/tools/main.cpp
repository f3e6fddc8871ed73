// Command-line runner: dataset generation, training, noise sweeps, single
// recoveries, complexity tables and IQ-grid ingestion.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "toeplista/bench.hpp"
#include "toeplista/io.hpp"
#include "toeplista/solvers.hpp"
#include "toeplista/unfolded.hpp"

#ifndef TOEPLISTA_VERSION
#define TOEPLISTA_VERSION "0.1.0"
#endif

namespace {

using nlohmann::json;
namespace tl = toeplista;

// Reads a flat JSON object into CLI11 config items for one subcommand.
// Keys may use '_' or '-'.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::string section) : section_(std::move(section)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config", e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config", "top level must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {section_}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const json& obj, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : obj.items()) {
      std::string name = key;
      std::replace(name.begin(), name.end(), '_', '-');
      if (value.is_object()) {
        auto p = parents;
        p.push_back(name);
        collect(value, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = name;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      out.push_back(std::move(item));
    }
  }

  std::string section_;
};

struct ProblemOptions {
  std::string kind = "1d";
  std::size_t m = 64;
  std::size_t m1 = 8;
  std::size_t m2 = 8;
  std::size_t n = 16;
  std::size_t k = 2;
  std::uint64_t seed = 1;
  std::uint64_t sampling_seed = 1;

  tl::GridShape grid() const {
    if (kind == "2d" || kind == "2D") return tl::GridShape::two_d(m1, m2);
    if (kind == "1d" || kind == "1D") return tl::GridShape::one_d(m);
    throw std::invalid_argument("--kind must be 1d or 2d");
  }
  tl::Dictionary dictionary() const {
    const auto g = grid();
    return tl::build_dictionary(g, tl::draw_sampling(g.total(), n, sampling_seed));
  }
};

void add_problem_options(CLI::App* sub, ProblemOptions& p) {
  sub->add_option("--kind", p.kind, "Problem dimension: 1d or 2d")->capture_default_str();
  sub->add_option("--M", p.m, "Grid size (1D)")->capture_default_str();
  sub->add_option("--M1", p.m1, "Grid size along axis 1 (2D)")->capture_default_str();
  sub->add_option("--M2", p.m2, "Grid size along axis 2 (2D)")->capture_default_str();
  sub->add_option("--N", p.n, "Number of observed samples")->capture_default_str();
  sub->add_option("--K", p.k, "Number of spectral components")->capture_default_str();
  sub->add_option("--seed", p.seed, "Random seed")->capture_default_str();
  sub->add_option("--sampling-seed", p.sampling_seed, "Seed of the sampling set")->capture_default_str();
}

// Options shared by sweep and single.
struct ExperimentOptions {
  ProblemOptions problem;
  std::vector<double> noise_db{-10.0};
  std::vector<std::string> methods{"ISTA"};
  std::vector<std::string> budgets;
  std::vector<std::string> models;
  std::size_t trials = 100;
  double lambda = -1.0;
  bool offgrid = false;
  double frac = 0.25;
  bool tolerant = false;
  bool timing = false;
  std::size_t threads = 1;
  std::string out;
  std::string manifest;

  tl::ExperimentConfig config() const {
    tl::ExperimentConfig c;
    c.grid = problem.grid();
    c.n_obs = problem.n;
    c.k = problem.k;
    c.seed = problem.seed;
    c.sampling_seed = problem.sampling_seed;
    c.noise_powers_db = noise_db;
    c.methods.clear();
    for (const auto& m : methods) c.methods.push_back(tl::method_from_string(m));
    for (const auto& [m, v] : pairs(budgets, "--budget")) c.iteration_budgets[tl::method_from_string(m)] = std::stoul(v);
    for (const auto& [m, v] : pairs(models, "--model")) c.model_paths[tl::method_from_string(m)] = v;
    c.trials_per_point = trials;
    if (lambda >= 0.0) c.lambda = lambda;
    c.offgrid = offgrid;
    c.offgrid_frac = frac;
    c.tolerant_hits = tolerant;
    c.timing = timing;
    c.threads = threads;
    return c;
  }

  static std::vector<std::pair<std::string, std::string>> pairs(const std::vector<std::string>& items,
                                                                const char* flag) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& s : items) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw std::invalid_argument(std::string(flag) + " expects METHOD=VALUE");
      out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return out;
  }
};

void add_experiment_options(CLI::App* sub, ExperimentOptions& e, bool sweep) {
  add_problem_options(sub, e.problem);
  sub->add_option("--noise-db", e.noise_db, "Noise powers in dB, sigma2 = 10^(dB/10)")->capture_default_str();
  sub->add_option("--methods", e.methods, "ISTA, FISTA, LISTA, ConvLISTA, LISTA-Toeplitz")->capture_default_str();
  sub->add_option("--budget", e.budgets, "Iteration budget per method, METHOD=N");
  sub->add_option("--model", e.models, "Trained model per learned method, METHOD=PATH");
  sub->add_option("--lambda", e.lambda, "ISTA/FISTA regularization (default 0.1 ||Phi^H y||_inf)");
  sub->add_flag("--offgrid", e.offgrid, "Shift true frequencies off the grid");
  sub->add_option("--frac", e.frac, "Off-grid shift in cells")->capture_default_str();
  sub->add_option("--out", e.out, "Output CSV (stdout when omitted)");
  sub->add_option("--manifest", e.manifest, "Write a JSON run manifest");
  if (sweep) {
    sub->add_option("--trials", e.trials, "Trials per noise point")->capture_default_str();
    sub->add_flag("--tolerant", e.tolerant, "Count hits within one grid cell");
    sub->add_flag("--timing", e.timing, "Record wall-clock runtime (output is then not reproducible)");
    sub->add_option("--threads", e.threads, "Worker threads")->capture_default_str();
  }
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

json option_values(const CLI::App* app) {
  json j = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      j[name] = res.size() == 1 && opt->get_expected_max() <= 1 ? json(res.front()) : json(res);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

void write_manifest(const std::string& path, const CLI::App* sub) {
  if (path.empty()) return;
  const json j{{"tool", "toeplista"}, {"version", TOEPLISTA_VERSION}, {"command", sub->get_name()},
               {"config", option_values(sub)}};
  emit(path, j.dump(2) + "\n");
}

int cmd_gen_data(const ProblemOptions& p, std::size_t samples, double sigma2, const std::string& out,
                 const std::string& iq_out) {
  const tl::Dictionary d = p.dictionary();
  const tl::Dataset ds = tl::gen_dataset(d, samples, p.k, sigma2, p.seed);
  tl::save_dataset(out, ds);
  if (!iq_out.empty()) {
    if (!d.grid().is_2d()) throw std::invalid_argument("--iq-out needs a 2D problem");
    if (ds.size() == 0) throw std::invalid_argument("--iq-out needs at least one sample");
    tl::save_iq_grid(iq_out, {d.grid().m1, d.grid().m2, d.sampling().omega, ds.observation(0)});
  }
  return 0;
}

struct TrainOptions {
  ProblemOptions problem;
  std::string arch = "toeplitz";
  std::size_t layers = 10;
  std::string train_data;
  std::string val_data;
  std::size_t train_size = 0;
  std::size_t max_train_size = 50000;
  std::size_t val_size = 500;
  double sigma2 = 0.1;
  double lambda = 0.1;
  std::string init = "zero";
  bool estimate = false;
  tl::TrainConfig train;
  std::string out;
  std::string history;
  std::string manifest;
};

tl::Architecture train_architecture(const std::string& name, const tl::GridShape& grid) {
  try {
    const tl::Method m = tl::method_from_string(name);
    if (tl::is_learned(m)) return tl::method_architecture(m, grid);
  } catch (const std::invalid_argument&) {
  }
  return tl::architecture_from_string(name);
}

int cmd_train(const TrainOptions& o, const CLI::App* sub) {
  tl::Dataset train_ds;
  tl::Dataset val_ds;
  std::optional<tl::Dictionary> dict;
  if (!o.train_data.empty()) {
    if (o.val_data.empty()) throw std::invalid_argument("--train-data needs --val-data");
    train_ds = tl::load_dataset(o.train_data);
    val_ds = tl::load_dataset(o.val_data);
    if (train_ds.meta.sampling.omega.empty()) throw std::invalid_argument("training data has no sampling sidecar");
    dict.emplace(train_ds.meta.grid, train_ds.meta.sampling);
  } else {
    dict.emplace(o.problem.dictionary());
  }
  const tl::Architecture arch = train_architecture(o.arch, dict->grid());
  const tl::NetworkDims dims{dict->grid(), dict->rows()};
  if (o.train_data.empty()) {
    std::size_t n_train = o.train_size;
    if (n_train == 0) n_train = std::min(tl::recommended_training_size(arch, dims, o.layers), o.max_train_size);
    train_ds = tl::gen_dataset(*dict, n_train, o.problem.k, o.sigma2, tl::make_rng(o.problem.seed, 1)());
    val_ds = tl::gen_dataset(*dict, o.val_size, o.problem.k, o.sigma2, tl::make_rng(o.problem.seed, 2)());
  }

  tl::InitOptions init;
  init.lambda = o.lambda;
  if (o.init == "ista") {
    init.inhibition = tl::InhibitionInit::IstaMatched;
  } else if (o.init != "zero") {
    throw std::invalid_argument("--init must be zero or ista");
  }
  const tl::UnfoldedNetwork net0 = tl::init_network(arch, *dict, o.layers, init, o.estimate ? &train_ds : nullptr);
  tl::TrainConfig cfg = o.train;
  cfg.seed = o.problem.seed;
  const tl::TrainResult res = tl::train(net0, train_ds, val_ds, cfg);

  tl::save_model(o.out, res.net, {dict->sampling(), cfg, res.report});
  std::ostringstream csv;
  csv << "epoch,train_nmse,val_nmse\n";
  csv << 0 << ",," << tl::format_number(res.report.initial_val) << '\n';
  for (std::size_t e = 0; e < res.report.val_history.size(); ++e) {
    csv << e + 1 << ',' << tl::format_number(res.report.loss_history[e]) << ','
        << tl::format_number(res.report.val_history[e]) << '\n';
  }
  emit(o.history, csv.str());
  write_manifest(o.manifest, sub);
  return 0;
}

int cmd_sweep(const ExperimentOptions& e, const CLI::App* sub) {
  const auto rows = tl::run_sweep(e.config());
  std::ostringstream csv;
  tl::write_csv(csv, rows);
  emit(e.out, csv.str());
  write_manifest(e.manifest, sub);
  return 0;
}

int cmd_single(const ExperimentOptions& e, const CLI::App* sub) {
  tl::ExperimentConfig cfg = e.config();
  cfg.noise_powers_db.resize(1);
  const auto dump = tl::run_single(cfg);
  std::ostringstream csv;
  tl::write_csv(csv, dump);
  emit(e.out, csv.str());
  write_manifest(e.manifest, sub);
  return 0;
}

struct IngestOptions {
  std::string input;
  std::string method = "ISTA";
  std::string model;
  std::size_t budget = 0;
  double lambda = -1.0;
  std::size_t top_k = 0;
  std::size_t m1 = 0;
  std::size_t m2 = 0;
  std::vector<std::size_t> omega;
  std::string out;
};

int cmd_ingest(const IngestOptions& o) {
  const tl::IqObservation obs =
      o.m1 > 0 ? tl::ingest_iq_grid(o.input, o.m1, o.m2, o.omega) : tl::ingest_iq_grid(o.input);
  tl::ExperimentConfig cfg;
  cfg.grid = obs.dictionary.grid();
  cfg.n_obs = obs.dictionary.rows();
  const tl::Method m = tl::method_from_string(o.method);
  cfg.methods = {m};
  if (o.budget > 0) cfg.iteration_budgets[m] = o.budget;
  if (o.lambda >= 0.0) cfg.lambda = o.lambda;
  tl::ModelSet models;
  if (tl::is_learned(m)) {
    if (o.model.empty()) throw std::invalid_argument("--model is required for " + o.method);
    tl::UnfoldedNetwork net = tl::load_model(o.model);
    if (!(net.dims() == tl::NetworkDims{cfg.grid, cfg.n_obs})) {
      throw tl::DimensionError("model dimensions differ from the IQ grid");
    }
    models.emplace(m, std::move(net));
  }
  const tl::ComplexArray x = tl::recover(m, cfg, obs.dictionary, models, obs.y);
  std::vector<std::size_t> top;
  if (o.top_k > 0) top = tl::top_k_indices(x, o.top_k);
  std::ostringstream csv;
  csv << "index,range,doppler,magnitude,top\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool is_top = std::binary_search(top.begin(), top.end(), i);
    csv << i << ',' << i / cfg.grid.m2 << ',' << i % cfg.grid.m2 << ',' << tl::format_number(std::abs(x[i])) << ','
        << (is_top ? 1 : 0) << '\n';
  }
  emit(o.out, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse harmonic retrieval with unfolded Toeplitz networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TOEPLISTA_VERSION);
  app.fallthrough();
  app.set_config("--config", "", "JSON file with default option values");
  // Flat config keys belong to the subcommand named on the command line.
  std::string section;
  for (int i = 1; i < argc && section.empty(); ++i) {
    const std::string a = argv[i];
    for (const char* name : {"gen-data", "train", "sweep", "single", "complexity", "ingest"}) {
      if (a == name) section = a;
    }
  }
  app.config_formatter(std::make_shared<JsonConfig>(section));
  app.allow_config_extras(CLI::config_extras_mode::error);

  ProblemOptions gen;
  std::size_t gen_samples = 1000;
  double gen_sigma2 = 0.0;
  double gen_noise_db = 0.0;
  std::string gen_out;
  std::string gen_iq;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  add_problem_options(gen_cmd, gen);
  gen_cmd->add_option("--samples", gen_samples, "Number of samples")->capture_default_str();
  auto* sigma_opt = gen_cmd->add_option("--sigma2", gen_sigma2, "Noise variance")->capture_default_str();
  gen_cmd->add_option("--noise-db", gen_noise_db, "Noise power in dB")->excludes(sigma_opt);
  gen_cmd->add_option("--out", gen_out, "Output dataset file")->required();
  gen_cmd->add_option("--iq-out", gen_iq, "Also write sample 0 as an IQ grid (2D only)");

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train an unfolded network");
  add_problem_options(train_cmd, tr.problem);
  train_cmd->add_option("--arch", tr.arch, "LISTA, LISTA-Toeplitz or ConvLISTA")->capture_default_str();
  train_cmd->add_option("--layers", tr.layers, "Network depth T")->capture_default_str();
  train_cmd->add_option("--train-data", tr.train_data, "Training dataset file");
  train_cmd->add_option("--val-data", tr.val_data, "Validation dataset file");
  train_cmd->add_option("--train-size", tr.train_size, "Generated training samples (0: 20 x params x T)");
  train_cmd->add_option("--max-train-size", tr.max_train_size, "Cap on the default training size")
      ->capture_default_str();
  train_cmd->add_option("--val-size", tr.val_size, "Generated validation samples")->capture_default_str();
  train_cmd->add_option("--sigma2", tr.sigma2, "Noise variance of generated data")->capture_default_str();
  train_cmd->add_option("--lambda", tr.lambda, "Threshold initialization, theta = lambda / L")->capture_default_str();
  train_cmd->add_option("--init", tr.init, "Inhibition initialization: zero or ista")->capture_default_str();
  train_cmd->add_flag("--estimate-dictionary", tr.estimate, "Initialize from a least-squares dictionary estimate");
  train_cmd->add_option("--lr", tr.train.learning_rate, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--batch", tr.train.batch_size, "Mini-batch size")->capture_default_str();
  train_cmd->add_option("--epochs", tr.train.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--beta1", tr.train.adam_beta1, "Adam beta1")->capture_default_str();
  train_cmd->add_option("--beta2", tr.train.adam_beta2, "Adam beta2")->capture_default_str();
  train_cmd->add_option("--eps", tr.train.adam_eps, "Adam epsilon")->capture_default_str();
  train_cmd->add_option("--patience", tr.train.lr_decay_patience, "Checks without improvement before LR decay")
      ->capture_default_str();
  train_cmd->add_option("--max-lr-decays", tr.train.max_lr_decays, "Stop after this many LR decays")
      ->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Output model file")->required();
  train_cmd->add_option("--history", tr.history, "Per-epoch NMSE CSV (stdout when omitted)");
  train_cmd->add_option("--manifest", tr.manifest, "Write a JSON run manifest");

  ExperimentOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "NMSE and hit rate over noise powers");
  add_experiment_options(sweep_cmd, sw, true);

  ExperimentOptions sg;
  auto* single_cmd = app.add_subcommand("single", "Recovery dump of one instance");
  add_experiment_options(single_cmd, sg, false);

  std::vector<std::size_t> sizes{512, 1024, 2048, 4096};
  tl::ComplexityOptions cx;
  cx.timing = false;
  bool no_dense = false;
  std::string cx_out;
  auto* cx_cmd = app.add_subcommand("complexity", "Parameter counts and per-layer timing");
  cx_cmd->add_option("--sizes", sizes, "Grid sizes M")->capture_default_str();
  cx_cmd->add_option("--N", cx.n_obs, "Observed samples")->capture_default_str();
  cx_cmd->add_option("--reps", cx.repetitions, "Timing repetitions (median)")->capture_default_str();
  cx_cmd->add_flag("--timing", cx.timing, "Measure per-layer forward time");
  cx_cmd->add_flag("--no-dense", no_dense, "Skip dense LISTA timing");
  cx_cmd->add_option("--seed", cx.seed, "Random seed")->capture_default_str();
  cx_cmd->add_option("--out", cx_out, "Output CSV (stdout when omitted)");

  IngestOptions ig;
  auto* ig_cmd = app.add_subcommand("ingest", "Recover a 2D spectrum from an IQ grid file");
  ig_cmd->add_option("--input", ig.input, "HIQ1 file")->required();
  ig_cmd->add_option("--method", ig.method, "Recovery method")->capture_default_str();
  ig_cmd->add_option("--model", ig.model, "Trained model for learned methods");
  ig_cmd->add_option("--budget", ig.budget, "Iterations for ISTA/FISTA");
  ig_cmd->add_option("--lambda", ig.lambda, "ISTA/FISTA regularization");
  ig_cmd->add_option("--top-k", ig.top_k, "Mark the K largest cells");
  ig_cmd->add_option("--M1", ig.m1, "Declared grid size along axis 1");
  ig_cmd->add_option("--M2", ig.m2, "Declared grid size along axis 2");
  ig_cmd->add_option("--omega", ig.omega, "Declared sampling set");
  ig_cmd->add_option("--out", ig.out, "Output CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen_cmd->parsed()) {
      const double sigma2 = gen_cmd->count("--noise-db") > 0 ? tl::noise_variance(gen_noise_db) : gen_sigma2;
      return cmd_gen_data(gen, gen_samples, sigma2, gen_out, gen_iq);
    }
    if (train_cmd->parsed()) return cmd_train(tr, train_cmd);
    if (sweep_cmd->parsed()) return cmd_sweep(sw, sweep_cmd);
    if (single_cmd->parsed()) return cmd_single(sg, single_cmd);
    if (cx_cmd->parsed()) {
      cx.include_dense = !no_dense;
      std::ostringstream csv;
      tl::write_csv(csv, tl::complexity_report(sizes, cx));
      emit(cx_out, csv.str());
      return 0;
    }
    if (ig_cmd->parsed()) return cmd_ingest(ig);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
