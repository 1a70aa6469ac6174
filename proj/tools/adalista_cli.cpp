// adalista: command-line front end for data generation, training,
// evaluation, theory checks, inpainting and plotting.

#include "adalista/datagen.hpp"
#include "adalista/experiment.hpp"
#include "adalista/inpainting.hpp"
#include "adalista/theory.hpp"
#include "adalista/training.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

using namespace adalista;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct GenDataArgs {
  std::string config, out, kind = "permuted";
  Index n = 50, m = 70, s = 4, train = 2000, test = 500;
  std::uint64_t seed = 0;
  std::optional<double> dict_snr, signal_snr;
};

struct TrainArgs {
  std::string data, variant = "ada_lista", out, history, init = "identity", optimizer = "adam";
  int K = 10, epochs = 50, batch = 128;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct EvalArgs {
  std::string config, out_dir, data, params, out;
  std::vector<int> K;
  bool retrain = false;
};

struct TheoryArgs {
  std::string theorem = "1", out, form = "printed";
  Index n = 20, m = 30;
  int K = 30, harnesses = 1;
  double sigma = 0.05;
  std::optional<double> tau_od, tau_d;
  long draws = 20000;
  std::uint64_t seed = 0;
};

struct InpaintArgs {
  std::string image, dict, params, solver = "fista", out, corrupt_out;
  double ratio = 0.5, lambda = kInpaintLambda;
  int K = 20;
  std::uint64_t seed = 0;
};

struct PlotArgs {
  std::string csv, out;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig load_config(const std::string& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  return experiment_config_from_json(j);
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty())
    std::cout << text;
  else
    write_text_atomic(path, text);
}

int gen_data(const GenDataArgs& a) {
  Scenario sc;
  if (!a.config.empty()) {
    sc = load_config(a.config).scenario;
  } else {
    sc.kind = dictionary_model_from_string(a.kind);
    sc.n = a.n;
    sc.m = a.m;
    sc.s = a.s;
    sc.train_size = a.train;
    sc.test_size = a.test;
    sc.seed = a.seed;
    sc.dict_snr_db = a.dict_snr;
    sc.signal_snr_db = a.signal_snr;
    try {
      sc.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  const Dataset ds = make_dataset(sc);
  save_dataset(ds, a.out);
  std::cout << "wrote " << ds.train.size() << " train and " << ds.test.size() << " test samples to " << a.out
            << "\n";
  return 0;
}

int train_cmd(const TrainArgs& a) {
  const Dataset ds = load_dataset(a.data);
  TrainConfig cfg;
  cfg.batch_size = a.batch;
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.lr;
  cfg.seed = a.seed;
  cfg.optimizer = a.optimizer == "sgd" ? OptimizerKind::Sgd : OptimizerKind::Adam;
  const InitScheme init = a.init == "ista" ? InitScheme::Ista : InitScheme::Identity;
  const std::string solver = a.variant == "oracle_lista" ? "lista" : a.variant;
  Model model;
  try {
    model = initial_model(solver, ds, a.K, init);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const TrainResult tr = train(ds.train, std::move(model), cfg, ds.test);
  save_params(a.out, tr.model);
  if (!a.history.empty()) write_text_atomic(a.history, history_csv(tr.history));
  std::cout << "final val_mse " << tr.history.back().val_mse << "\n";
  return 0;
}

int eval_cmd(const EvalArgs& a) {
  if (!a.config.empty()) {
    ExperimentConfig cfg = load_config(a.config);
    if (a.retrain) cfg.retrain_per_k = true;
    if (!a.out_dir.empty()) cfg.output_dir = a.out_dir;
    const ExperimentOutput out = run_experiment(cfg);
    write_experiment(out, cfg);
    std::cout << to_csv(out.table);
    return 0;
  }
  if (a.data.empty() || a.params.empty()) throw ConfigError("eval needs --config, or --data with --params");
  const Dataset ds = load_dataset(a.data);
  const Model model = load_params(a.params);
  ResultTable t;
  std::vector<int> ks = a.K.empty() ? std::vector<int>{model.depth()} : a.K;
  for (int K : ks) t.rows.push_back({std::string(to_string(model.variant)), K, mean_squared_error(ds.test, model, K)});
  emit(a.out, to_csv(t));
  return 0;
}

int theory_cmd(const TheoryArgs& a) {
  ExperimentConfig cfg;
  if (a.theorem == "1")
    cfg.experiment = ExperimentKind::Theorem1;
  else if (a.theorem == "2")
    cfg.experiment = ExperimentKind::Theorem2;
  else if (a.theorem == "cantelli")
    cfg.experiment = ExperimentKind::Cantelli;
  else
    throw ConfigError("--theorem must be 1, 2 or cantelli");
  cfg.seed = a.seed;
  cfg.theory.n = a.n;
  cfg.theory.m = a.m;
  cfg.theory.K = a.K;
  cfg.theory.harnesses = a.harnesses;
  cfg.theory.sigma = a.sigma;
  cfg.theory.draws = a.draws;
  cfg.theory.form = a.form == "textbook" ? CantelliForm::Textbook : CantelliForm::Printed;
  if (cfg.experiment == ExperimentKind::Cantelli) {
    if (!a.tau_od || !a.tau_d) throw ConfigError("cantelli needs --tau-od and --tau-d");
    cfg.theory.tau_od = {*a.tau_od};
    cfg.theory.tau_d = {*a.tau_d};
  }
  const ExperimentOutput out = run_experiment(cfg);
  emit(a.out, out.report.dump(2) + "\n");
  return 0;
}

int inpaint_cmd(const InpaintArgs& a) {
  const ImageGray img = read_image(a.image);
  const Dictionary D = a.dict.empty() ? dct_dictionary() : Dictionary(matrix_from_json(read_json_file(a.dict)));
  InpaintOptions opt;
  opt.solver = inpaint_solver_from_string(a.solver);
  opt.K = a.K;
  opt.lambda = a.lambda;
  std::optional<InpaintParams> params;
  if (opt.solver == InpaintSolver::AdaLfista) {
    if (a.params.empty()) throw ConfigError("--solver ada-lfista needs --params");
    const Model m = load_params(a.params);
    if (m.variant != Variant::Inpaint) throw ConfigError("--params must hold an inpaint network");
    params = std::get<InpaintParams>(m.params);
    opt.params = &*params;
  }
  const InpaintResult res = inpaint_image(img, a.seed, a.ratio, D, opt);
  if (!a.out.empty()) write_pgm(a.out, res.reconstruction);
  if (!a.corrupt_out.empty()) write_pgm(a.corrupt_out, res.corrupted);
  std::cout << "solver,K,psnr\n" << a.solver << ',' << a.K << ',' << res.psnr_db << "\n";
  return 0;
}

int plot_cmd(const PlotArgs& a) {
  ResultTable t;
  try {
    t = table_from_csv(read_text(a.csv), a.csv);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  emit_plot(t, a.out);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive learned ISTA toolkit"};
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset directory");
  gen->add_option("--config", gd.config, "Experiment config JSON (uses its scenario)");
  gen->add_option("--kind", gd.kind, "fixed | permuted | noisy_dict | random_dict");
  gen->add_option("--n", gd.n);
  gen->add_option("--m", gd.m);
  gen->add_option("--s", gd.s);
  gen->add_option("--train", gd.train, "Training samples");
  gen->add_option("--test", gd.test, "Test samples");
  gen->add_option("--seed", gd.seed);
  gen->add_option("--dict-snr", gd.dict_snr, "Dictionary SNR in dB");
  gen->add_option("--signal-snr", gd.signal_snr, "Signal SNR in dB");
  gen->add_option("--out", gd.out, "Output directory")->required();

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train an unrolled network on a dataset directory");
  trn->add_option("--data", ta.data)->required();
  trn->add_option("--variant", ta.variant, "ada_lista | ada_lfista | lista");
  trn->add_option("--K", ta.K, "Unfoldings");
  trn->add_option("--epochs", ta.epochs);
  trn->add_option("--batch", ta.batch);
  trn->add_option("--lr", ta.lr);
  trn->add_option("--optimizer", ta.optimizer)->check(CLI::IsMember({"adam", "sgd"}));
  trn->add_option("--init", ta.init)->check(CLI::IsMember({"ista", "identity"}));
  trn->add_option("--seed", ta.seed);
  trn->add_option("--out", ta.out, "Parameter file")->required();
  trn->add_option("--history", ta.history, "Training history CSV");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Run an experiment config, or evaluate saved parameters");
  ev->add_option("--config", ea.config);
  ev->add_option("--out-dir", ea.out_dir, "Overrides output_dir of the config");
  ev->add_flag("--retrain-per-k", ea.retrain, "Train a separate network for every K");
  ev->add_option("--data", ea.data);
  ev->add_option("--params", ea.params);
  ev->add_option("--K", ea.K)->delimiter(',');
  ev->add_option("--out", ea.out, "CSV output (stdout by default)");

  TheoryArgs th;
  auto* thc = app.add_subcommand("theory-check", "Build a harness and evaluate a convergence guarantee");
  thc->add_option("--theorem", th.theorem, "1 | 2 | cantelli");
  thc->add_option("--n", th.n);
  thc->add_option("--m", th.m);
  thc->add_option("--K", th.K);
  thc->add_option("--harnesses", th.harnesses);
  thc->add_option("--sigma", th.sigma);
  thc->add_option("--tau-od", th.tau_od);
  thc->add_option("--tau-d", th.tau_d);
  thc->add_option("--draws", th.draws);
  thc->add_option("--form", th.form)->check(CLI::IsMember({"printed", "textbook"}));
  thc->add_option("--seed", th.seed);
  thc->add_option("--out", th.out, "Report JSON (stdout by default)");

  InpaintArgs ia;
  auto* inp = app.add_subcommand("inpaint", "Inpaint a grayscale image");
  inp->add_option("--image", ia.image)->required();
  inp->add_option("--mask-ratio", ia.ratio);
  inp->add_option("--dict", ia.dict, "JSON dictionary (overcomplete DCT when omitted)");
  inp->add_option("--params", ia.params, "Trained inpaint network");
  inp->add_option("--solver", ia.solver)->check(CLI::IsMember({"ista", "fista", "ada-lfista"}));
  inp->add_option("--unfoldings", ia.K);
  inp->add_option("--lambda", ia.lambda);
  inp->add_option("--seed", ia.seed, "Mask seed");
  inp->add_option("--out", ia.out, "Reconstruction PGM");
  inp->add_option("--corrupt-out", ia.corrupt_out, "Corrupted image PGM");

  PlotArgs pa;
  auto* plt = app.add_subcommand("plot", "Render a results CSV as SVG");
  plt->add_option("--csv", pa.csv)->required();
  plt->add_option("--out", pa.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return gen_data(gd);
    if (*trn) return train_cmd(ta);
    if (*ev) return eval_cmd(ea);
    if (*thc) return theory_cmd(th);
    if (*inp) return inpaint_cmd(ia);
    if (*plt) return plot_cmd(pa);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
