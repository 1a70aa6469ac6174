#include "adalista/experiment.hpp"

#include "adalista/parallel.hpp"
#include "adalista/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace adalista {

namespace {

const std::set<std::string> kSyntheticSolvers = {"ista", "fista", "ada_lista", "ada_lfista", "lista", "oracle_lista"};
const std::set<std::string> kInpaintSolvers = {"ista", "fista", "ada_lfista"};

bool is_synthetic(ExperimentKind k) {
  return k == ExperimentKind::Permuted || k == ExperimentKind::NoisyDict || k == ExperimentKind::RandomDict ||
         k == ExperimentKind::NoisySignal;
}

bool is_learned(const std::string& solver) { return solver != "ista" && solver != "fista"; }

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

} // namespace

std::string_view to_string(ExperimentKind k) {
  switch (k) {
  case ExperimentKind::Permuted: return "permuted";
  case ExperimentKind::NoisyDict: return "noisy_dict";
  case ExperimentKind::RandomDict: return "random_dict";
  case ExperimentKind::NoisySignal: return "noisy_signal";
  case ExperimentKind::Inpaint: return "inpaint";
  case ExperimentKind::Theorem1: return "theorem1";
  case ExperimentKind::Theorem2: return "theorem2";
  case ExperimentKind::Cantelli: return "cantelli";
  }
  return "permuted";
}

ExperimentKind experiment_kind_from_string(std::string_view name) {
  for (auto k : {ExperimentKind::Permuted, ExperimentKind::NoisyDict, ExperimentKind::RandomDict,
                 ExperimentKind::NoisySignal, ExperimentKind::Inpaint, ExperimentKind::Theorem1,
                 ExperimentKind::Theorem2, ExperimentKind::Cantelli})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  try {
    scenario.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (train.batch_size < 1) fail("train.batch_size must be >= 1");
  if (!(train.learning_rate > 0.0)) fail("train.learning_rate must be positive");
  if (train.epochs < 0) fail("train.epochs must be >= 0");
  if (is_synthetic(experiment) || experiment == ExperimentKind::Inpaint) {
    if (solvers.empty()) fail("solvers must not be empty");
    if (K_sweep.empty()) fail("K sweep must not be empty");
    for (std::size_t i = 0; i < K_sweep.size(); ++i) {
      if (K_sweep[i] < 1) fail("K values must be >= 1");
      if (i > 0 && K_sweep[i] <= K_sweep[i - 1]) fail("K sweep must be strictly increasing");
    }
    const auto& allowed = experiment == ExperimentKind::Inpaint ? kInpaintSolvers : kSyntheticSolvers;
    for (const auto& s : solvers)
      if (!allowed.count(s)) fail("unknown solver '" + s + "' for experiment " + std::string(to_string(experiment)));
  }
  if (experiment == ExperimentKind::NoisyDict && !scenario.dict_snr_db) fail("noisy_dict needs scenario.dict_snr_db");
  if (experiment == ExperimentKind::NoisySignal && !scenario.signal_snr_db)
    fail("noisy_signal needs scenario.signal_snr_db");
  if (experiment == ExperimentKind::Inpaint) {
    if (inpaint.images.empty()) fail("inpaint.images must not be empty");
    if (inpaint.train_images.empty() && std::count(solvers.begin(), solvers.end(), "ada_lfista"))
      fail("inpaint.train_images must not be empty when training ada_lfista");
    if (inpaint.p < 0.0 || inpaint.p > 1.0) fail("inpaint.p must lie in [0, 1]");
  }
  if (experiment == ExperimentKind::Theorem1 || experiment == ExperimentKind::Theorem2 ||
      experiment == ExperimentKind::Cantelli) {
    if (theory.n < 1 || theory.m < 1 || theory.K < 1 || theory.harnesses < 1) fail("theory dimensions must be >= 1");
    if (theory.sigma < 0.0) fail("theory.sigma must be >= 0");
  }
  if (experiment == ExperimentKind::Cantelli) {
    if (theory.tau_od.empty() || theory.tau_od.size() != theory.tau_d.size())
      fail("cantelli needs theory.tau_od and theory.tau_d lists of equal, nonzero length");
    for (std::size_t i = 0; i < theory.tau_od.size(); ++i)
      if (!(theory.tau_od[i] > 0.0) || !(theory.tau_d[i] > 0.0)) fail("tau values must be positive");
    if (theory.draws < 1) fail("theory.draws must be >= 1");
  }
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig cfg;
    if (!j.contains("experiment")) throw ConfigError("config: missing 'experiment'");
    cfg.experiment = experiment_kind_from_string(j.at("experiment").get<std::string>());
    cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
    cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
    cfg.solvers = get_or<std::vector<std::string>>(j, "solvers", {});
    cfg.K_sweep = get_or<std::vector<int>>(j, "K", {});
    cfg.retrain_per_k = get_or<bool>(j, "retrain_per_k", false);
    const std::string init = get_or<std::string>(j, "init", "identity");
    if (init == "ista")
      cfg.init = InitScheme::Ista;
    else if (init == "identity")
      cfg.init = InitScheme::Identity;
    else
      throw ConfigError("config: init must be 'identity' or 'ista'");

    Json sc = j.value("scenario", Json::object());
    if (!sc.contains("seed")) sc["seed"] = cfg.seed;
    if (!sc.contains("kind")) {
      switch (cfg.experiment) {
      case ExperimentKind::NoisyDict: sc["kind"] = "noisy_dict"; break;
      case ExperimentKind::RandomDict: sc["kind"] = "random_dict"; break;
      case ExperimentKind::NoisySignal: sc["kind"] = "fixed"; break;
      default: sc["kind"] = "permuted"; break;
      }
    }
    cfg.scenario = scenario_from_json(sc);

    const Json tr = j.value("train", Json::object());
    cfg.train.batch_size = get_or<int>(tr, "batch_size", cfg.train.batch_size);
    cfg.train.epochs = get_or<int>(tr, "epochs", cfg.train.epochs);
    const double default_lr = cfg.experiment == ExperimentKind::Inpaint ? 1e-4 : 1e-3;
    cfg.train.learning_rate = get_or<double>(tr, "learning_rate", default_lr);
    const std::string opt = get_or<std::string>(tr, "optimizer", "adam");
    if (opt == "adam")
      cfg.train.optimizer = OptimizerKind::Adam;
    else if (opt == "sgd")
      cfg.train.optimizer = OptimizerKind::Sgd;
    else
      throw ConfigError("config: train.optimizer must be 'adam' or 'sgd'");
    cfg.train.adam.beta1 = get_or<double>(tr, "beta1", cfg.train.adam.beta1);
    cfg.train.adam.beta2 = get_or<double>(tr, "beta2", cfg.train.adam.beta2);
    cfg.train.adam.epsilon = get_or<double>(tr, "epsilon", cfg.train.adam.epsilon);
    cfg.train.seed = get_or<std::uint64_t>(tr, "seed", cfg.seed);

    const Json ip = j.value("inpaint", Json::object());
    auto& in = cfg.inpaint;
    in.images = get_or<std::vector<std::string>>(ip, "images", {});
    in.train_images = get_or<std::vector<std::string>>(ip, "train_images", {});
    in.dictionary = get_or<std::string>(ip, "dictionary", "");
    in.dict_atoms = get_or<Index>(ip, "dict_atoms", in.dict_atoms);
    in.p = get_or<double>(ip, "p", in.p);
    in.train_patches = get_or<Index>(ip, "train_patches", in.train_patches);
    in.val_patches = get_or<Index>(ip, "val_patches", in.val_patches);
    in.lambda = get_or<double>(ip, "lambda", in.lambda);
    in.label_iterations = get_or<int>(ip, "label_iterations", in.label_iterations);

    const Json th = j.value("theory", Json::object());
    auto& t = cfg.theory;
    t.n = get_or<Index>(th, "n", t.n);
    t.m = get_or<Index>(th, "m", t.m);
    t.K = get_or<int>(th, "K", t.K);
    t.harnesses = get_or<int>(th, "harnesses", t.harnesses);
    t.sigma = get_or<double>(th, "sigma", t.sigma);
    t.tau_od = get_or<std::vector<double>>(th, "tau_od", {});
    t.tau_d = get_or<std::vector<double>>(th, "tau_d", {});
    t.draws = get_or<long>(th, "draws", t.draws);
    const std::string form = get_or<std::string>(th, "form", "printed");
    if (form == "printed")
      t.form = CantelliForm::Printed;
    else if (form == "textbook")
      t.form = CantelliForm::Textbook;
    else
      throw ConfigError("config: theory.form must be 'printed' or 'textbook'");

    cfg.validate();
    return cfg;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

Json to_json(const ExperimentConfig& cfg) {
  Json tr{{"batch_size", cfg.train.batch_size},
          {"epochs", cfg.train.epochs},
          {"learning_rate", cfg.train.learning_rate},
          {"optimizer", cfg.train.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
          {"beta1", cfg.train.adam.beta1},
          {"beta2", cfg.train.adam.beta2},
          {"epsilon", cfg.train.adam.epsilon},
          {"seed", cfg.train.seed}};
  const auto& in = cfg.inpaint;
  Json ip{{"images", in.images},
          {"train_images", in.train_images},
          {"dictionary", in.dictionary},
          {"dict_atoms", in.dict_atoms},
          {"p", in.p},
          {"train_patches", in.train_patches},
          {"val_patches", in.val_patches},
          {"lambda", in.lambda},
          {"label_iterations", in.label_iterations}};
  const auto& t = cfg.theory;
  Json th{{"n", t.n},
          {"m", t.m},
          {"K", t.K},
          {"harnesses", t.harnesses},
          {"sigma", t.sigma},
          {"tau_od", t.tau_od},
          {"tau_d", t.tau_d},
          {"draws", t.draws},
          {"form", t.form == CantelliForm::Printed ? "printed" : "textbook"}};
  return Json{{"experiment", std::string(to_string(cfg.experiment))},
              {"seed", cfg.seed},
              {"output_dir", cfg.output_dir},
              {"solvers", cfg.solvers},
              {"K", cfg.K_sweep},
              {"retrain_per_k", cfg.retrain_per_k},
              {"init", cfg.init == InitScheme::Ista ? "ista" : "identity"},
              {"scenario", to_json(cfg.scenario)},
              {"train", tr},
              {"inpaint", ip},
              {"theory", th}};
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(cfg).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string to_csv(const ResultTable& t) {
  std::ostringstream os;
  os << "solver,K," << t.metric << "\n";
  for (const auto& r : t.rows) os << r.solver << ',' << r.K << ',' << format_double(r.value) << "\n";
  return os.str();
}

ResultTable table_from_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  ResultTable t;
  if (!std::getline(in, line)) throw std::runtime_error(origin + ": empty CSV");
  const auto c1 = line.find(',');
  const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos || line.substr(0, c2) != "solver,K")
    throw std::runtime_error(origin + ":1: expected header solver,K,<metric>");
  t.metric = line.substr(c2 + 1);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ResultRow r;
    std::string k, v;
    if (!std::getline(ls, r.solver, ',') || !std::getline(ls, k, ',') || !std::getline(ls, v))
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected 3 fields");
    try {
      r.K = std::stoi(k);
      r.value = std::stod(v);
    } catch (const std::exception&) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": bad number");
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

double classic_mse(std::span<const TrainingTriple> data, const std::string& solver, int K, double lambda) {
  require(!data.empty(), "classic_mse: empty set");
  require(solver == "ista" || solver == "fista", "classic_mse: unknown solver '" + solver + "'");
  std::vector<double> per(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const auto& t = data[i];
    if (!t.dictionary) throw std::invalid_argument("classic_mse: sample without dictionary");
    ClassicConfig c;
    c.lambda = lambda;
    c.iterations = K;
    c.record_objectives = false;
    const SparseCode x = solver == "ista" ? ista(t.y, *t.dictionary, c).final_code()
                                          : fista(t.y, *t.dictionary, c).final_code();
    per[i] = (x - t.x_ref).squaredNorm();
  });
  return std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(data.size());
}

Model initial_model(const std::string& solver, const Dataset& ds, int K, InitScheme init) {
  const double lambda = ds.scenario.label_lambda;
  if (solver == "ada_lista" || solver == "ada_lfista") {
    const Index n = ds.scenario.n;
    AdaListaParams p = init == InitScheme::Identity ? ada_lista_identity_init(n, K)
                                                    : ada_lista_ista_init(n, K, spectral_norm_sq(*ds.base), lambda);
    return Model{solver == "ada_lista" ? Variant::AdaLista : Variant::AdaLfista, std::move(p)};
  }
  if (solver == "lista" || solver == "oracle_lista") {
    const double step = init == InitScheme::Identity ? 1.0 : 1.0 / spectral_norm_sq(*ds.base);
    return Model{Variant::Lista, lista_step_init(*ds.base, K, lambda, step)};
  }
  throw std::invalid_argument("initial_model: '" + solver + "' is not a learned solver");
}

namespace {

// Trains `solver` at depth K on the given data and returns the model and
// its history.
TrainResult train_solver(const std::string& solver, const Dataset& ds, int K, const ExperimentConfig& cfg) {
  return train(ds.train, initial_model(solver, ds, K, cfg.init), cfg.train, ds.test);
}

void run_synthetic(const ExperimentConfig& cfg, ExperimentOutput& out) {
  out.table.metric = "mse";
  const Dataset ds = make_dataset(cfg.scenario);
  std::optional<Dataset> fixed;
  if (std::count(cfg.solvers.begin(), cfg.solvers.end(), "oracle_lista")) {
    Scenario sc = cfg.scenario;
    sc.kind = DictionaryModel::Fixed;
    sc.dict_snr_db.reset();
    fixed = make_dataset(sc);
  }
  const int Kmax = cfg.K_sweep.back();
  Json histories = Json::object();
  for (const auto& solver : cfg.solvers) {
    const Dataset& data = solver == "oracle_lista" ? *fixed : ds;
    if (!is_learned(solver)) {
      for (int K : cfg.K_sweep)
        out.table.rows.push_back({solver, K, classic_mse(data.test, solver, K, cfg.scenario.label_lambda)});
      continue;
    }
    if (cfg.retrain_per_k) {
      for (int K : cfg.K_sweep) {
        TrainResult tr = train_solver(solver, data, K, cfg);
        out.table.rows.push_back({solver, K, mean_squared_error(data.test, tr.model)});
        histories[solver + "_K" + std::to_string(K)] = history_csv(tr.history);
        out.models.emplace(solver + "_K" + std::to_string(K), std::move(tr.model));
      }
    } else {
      TrainResult tr = train_solver(solver, data, Kmax, cfg);
      for (int K : cfg.K_sweep)
        out.table.rows.push_back({solver, K, mean_squared_error(data.test, tr.model, K)});
      histories[solver] = history_csv(tr.history);
      out.models.emplace(solver, std::move(tr.model));
    }
  }
  out.report["training_history"] = histories;
  out.report["train_size"] = ds.train.size();
  out.report["test_size"] = ds.test.size();
}

void run_theorem(const ExperimentConfig& cfg, ExperimentOutput& out, int theorem) {
  out.table.metric = "linf_error";
  const auto& t = cfg.theory;
  Json runs = Json::array();
  int passed = 0;
  for (int h = 0; h < t.harnesses; ++h) {
    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(h));
    const TheoremHarness hs =
        theorem == 1 ? theorem1_harness(t.n, t.m, t.K, seed) : theorem2_harness(t.n, t.m, t.K, t.sigma, seed);
    const TheoremReport rep = theorem == 1 ? theorem1_check(hs.D, hs.W, hs.x_star, hs.e, hs.sched)
                                           : theorem2_check(hs.D, hs.W, hs.x_star, hs.e, hs.sched);
    const SolverTrace trace = run_harness(hs);
    const RateReport rate = verify_linear_rate(trace, hs.x_star, hs.sched);
    Json run{{"check", to_json(rep)}, {"rate", to_json(rate)}, {"resamples", hs.resamples}};
    try {
      run["gamma_hat"] = fit_empirical_rate(rate.errors);
    } catch (const std::invalid_argument&) {
      run["gamma_hat"] = nullptr;
    }
    if (rep.satisfied && rate.support_contained_all_k && rate.error_bound_all_k) ++passed;
    if (h == 0) {
      for (std::size_t k = 0; k < rate.errors.size(); ++k) {
        out.table.rows.push_back({"ada_lista_single", static_cast<int>(k), rate.errors[k]});
      }
      for (std::size_t k = 0; k < rate.errors.size(); ++k)
        out.table.rows.push_back({"bound", static_cast<int>(k), 2.0 * hs.sched.theta(static_cast<int>(k))});
    }
    runs.push_back(std::move(run));
  }
  out.report["theorem"] = theorem;
  out.report["harnesses"] = runs;
  out.report["passed"] = passed;
  out.report["satisfied"] = passed == t.harnesses;
}

void run_cantelli(const ExperimentConfig& cfg, ExperimentOutput& out) {
  out.table.metric = "probability";
  const auto& t = cfg.theory;
  const Dictionary D = random_dictionary(t.n, t.n, derive_seed(cfg.seed, 0));
  const Matrix W = analytic_weight(D);
  Json settings = Json::array();
  for (std::size_t i = 0; i < t.tau_od.size(); ++i) {
    const CantelliReport rep = cantelli_bounds(W, D, t.sigma, t.tau_od[i], t.tau_d[i], t.form);
    const CantelliFrequencies f =
        cantelli_monte_carlo(W, D, t.sigma, t.tau_od[i], t.tau_d[i], t.draws, derive_seed(cfg.seed, i + 1));
    const double se = std::sqrt(rep.p1 * (1.0 - rep.p1) / static_cast<double>(f.draws));
    const int idx = static_cast<int>(i);
    out.table.rows.push_back({"p1", idx, rep.p1});
    out.table.rows.push_back({"empirical_off_diagonal", idx, f.off_diagonal});
    out.table.rows.push_back({"p2", idx, rep.p2});
    out.table.rows.push_back({"empirical_diagonal", idx, f.diagonal});
    settings.push_back(Json{{"bounds", to_json(rep)},
                            {"empirical_off_diagonal", f.off_diagonal},
                            {"empirical_diagonal", f.diagonal},
                            {"draws", f.draws},
                            {"off_diagonal_consistent", f.off_diagonal <= rep.p1 + 3.0 * se}});
  }
  out.report["settings"] = settings;
}

void run_inpaint(const ExperimentConfig& cfg, ExperimentOutput& out) {
  out.table.metric = "psnr";
  const auto& in = cfg.inpaint;
  auto D = std::make_shared<const Dictionary>(
      in.dictionary.empty() ? dct_dictionary(kPatchSize * kPatchSize, in.dict_atoms)
                            : Dictionary(matrix_from_json(read_json_file(in.dictionary))));
  std::vector<ImageGray> test;
  for (const auto& p : in.images) test.push_back(read_image(p));
  const int Kmax = cfg.K_sweep.back();

  std::optional<InpaintParams> trained;
  if (std::count(cfg.solvers.begin(), cfg.solvers.end(), "ada_lfista")) {
    std::vector<ImageGray> train_imgs;
    for (const auto& p : in.train_images) train_imgs.push_back(read_image(p));
    InpaintTrainingOptions topt;
    topt.patches = in.train_patches;
    topt.p = in.p;
    topt.lambda = in.lambda;
    topt.label_iterations = in.label_iterations;
    topt.seed = derive_seed(cfg.seed, 10);
    const auto train_set = inpaint_training_set(train_imgs, D, topt);
    topt.patches = in.val_patches;
    topt.seed = derive_seed(cfg.seed, 11);
    const auto val_set = inpaint_training_set(train_imgs, D, topt);
    Model init{Variant::Inpaint, inpaint_dictionary_init(*D, Kmax, in.lambda, true)};
    TrainResult tr = train(train_set, std::move(init), cfg.train, val_set);
    out.report["training_history"] = history_csv(tr.history);
    trained = std::get<InpaintParams>(tr.model.params);
    out.models.emplace("ada_lfista", std::move(tr.model));
  }

  Json per_image = Json::array();
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Matrix observed = random_image_mask(test[i].rows(), test[i].cols(), in.p, derive_seed(cfg.seed, 100 + i));
    Json img{{"image", in.images[i]}};
    for (const auto& solver : cfg.solvers) {
      Json series = Json::array();
      for (int K : cfg.K_sweep) {
        InpaintOptions opt;
        opt.solver = inpaint_solver_from_string(solver);
        opt.K = K;
        opt.lambda = in.lambda;
        opt.params = trained ? &*trained : nullptr;
        series.push_back(inpaint_image(test[i], observed, *D, opt).psnr_db);
      }
      img[solver] = series;
    }
    per_image.push_back(std::move(img));
  }
  for (const auto& solver : cfg.solvers) {
    for (std::size_t k = 0; k < cfg.K_sweep.size(); ++k) {
      double sum = 0.0;
      for (const auto& img : per_image) sum += img.at(solver).at(k).get<double>();
      out.table.rows.push_back({solver, cfg.K_sweep[k], sum / static_cast<double>(per_image.size())});
    }
  }
  out.report["per_image_psnr"] = per_image;
}

} // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentOutput out;
  switch (cfg.experiment) {
  case ExperimentKind::Permuted:
  case ExperimentKind::NoisyDict:
  case ExperimentKind::RandomDict:
  case ExperimentKind::NoisySignal: run_synthetic(cfg, out); break;
  case ExperimentKind::Inpaint: run_inpaint(cfg, out); break;
  case ExperimentKind::Theorem1: run_theorem(cfg, out, 1); break;
  case ExperimentKind::Theorem2: run_theorem(cfg, out, 2); break;
  case ExperimentKind::Cantelli: run_cantelli(cfg, out); break;
  }
  out.table.metadata = Json{{"config", to_json(cfg)}, {"config_hash", config_hash(cfg)}};
  return out;
}

void write_experiment(const ExperimentOutput& out, const ExperimentConfig& cfg) {
  const std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  write_text_atomic(dir / "results.csv", to_csv(out.table));
  write_text_atomic(dir / "report.json", out.report.dump(2) + "\n");
  Json meta = out.table.metadata;
  meta["timestamp"] = utc_timestamp();
  meta["threads"] = worker_threads();
  write_text_atomic(dir / "meta.json", meta.dump(2) + "\n");
  for (const auto& [name, model] : out.models) save_params(dir / ("params_" + name + ".json"), model);
  if (!out.table.rows.empty()) emit_plot(out.table, dir / "plot.svg");
}

void save_params(const std::filesystem::path& path, const Model& model) {
  Json j{{"format", "adalista-params"}, {"version", kParamsVersion}, {"model", to_json(model)}};
  write_text_atomic(path, j.dump(1) + "\n");
}

Model load_params(const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  if (!j.is_object() || !j.contains("version") || !j.contains("model"))
    throw std::invalid_argument(path.string() + ": not a parameter file (missing version or model)");
  if (!j.at("version").is_number_integer() || j.at("version").get<int>() != kParamsVersion)
    throw std::invalid_argument(path.string() + ": unsupported parameter file version " + j.at("version").dump());
  return model_from_json(j.at("model"));
}

} // namespace adalista
