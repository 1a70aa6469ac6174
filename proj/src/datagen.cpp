#include "adalista/datagen.hpp"

#include "adalista/parallel.hpp"
#include "adalista/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace adalista {

namespace {

Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix M(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) M(r, c) = normal(rng);
  return M;
}

double noise_scale(double signal_norm, double noise_norm, double snr_db) {
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("SNR must be finite");
  const double snr = std::min(snr_db, kMaxSnrDb);
  if (noise_norm == 0.0) return 0.0;
  return signal_norm * std::pow(10.0, -snr / 20.0) / noise_norm;
}

std::uint64_t split_seed(std::uint64_t seed, bool test) { return derive_seed(seed, test ? 2 : 1); }

struct SampleDraw {
  std::shared_ptr<const Dictionary> dictionary;
  TrainingTriple triple;
};

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over a combination of both inputs.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Dictionary random_dictionary(Index n, Index m, std::uint64_t seed) {
  require(n >= 1 && m >= 1, "random_dictionary: dimensions must be >= 1");
  return Dictionary(normalize_columns(gaussian_matrix(n, m, seed)), true);
}

SparseCode sparse_code(Index m, Index s, std::uint64_t seed) {
  require(m >= 1, "sparse_code: m must be >= 1");
  require(s >= 1 && s <= m, "sparse_code: cardinality must satisfy 1 <= s <= m");
  std::mt19937_64 rng(seed);
  std::vector<Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first s slots are a uniform subset.
  for (Index i = 0; i < s; ++i) {
    std::uniform_int_distribution<Index> pick(i, m - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  SparseCode x = SparseCode::Zero(m);
  for (Index i = 0; i < s; ++i) {
    double v = 0.0;
    while (v == 0.0) v = normal(rng);
    x[idx[static_cast<std::size_t>(i)]] = v;
  }
  return x;
}

std::pair<Dictionary, Permutation> permute_dictionary(const Dictionary& D, std::uint64_t seed) {
  Permutation perm(static_cast<std::size_t>(D.code_dim()));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  return {apply_permutation(D, perm), perm};
}

Dictionary apply_permutation(const Dictionary& D, const Permutation& perm) {
  require_same_size(static_cast<Index>(perm.size()), D.code_dim(), "apply_permutation");
  Matrix out(D.signal_dim(), D.code_dim());
  for (std::size_t j = 0; j < perm.size(); ++j) out.col(static_cast<Index>(j)) = D.matrix().col(perm[j]);
  return Dictionary(std::move(out), D.column_normalized());
}

SparseCode permute_code(const SparseCode& x, const Permutation& perm) {
  require_same_size(static_cast<Index>(perm.size()), x.size(), "permute_code");
  SparseCode out(x.size());
  for (std::size_t j = 0; j < perm.size(); ++j) out[static_cast<Index>(j)] = x[perm[j]];
  return out;
}

Dictionary unpermute_dictionary(const Dictionary& Dp, const Permutation& perm) {
  require_same_size(static_cast<Index>(perm.size()), Dp.code_dim(), "unpermute_dictionary");
  Matrix out(Dp.signal_dim(), Dp.code_dim());
  for (std::size_t j = 0; j < perm.size(); ++j) out.col(perm[j]) = Dp.matrix().col(static_cast<Index>(j));
  return Dictionary(std::move(out), Dp.column_normalized());
}

Dictionary perturb_dictionary(const Dictionary& D, double snr_db, std::uint64_t seed, bool renormalize) {
  Matrix E = gaussian_matrix(D.signal_dim(), D.code_dim(), seed);
  E *= noise_scale(D.matrix().norm(), E.norm(), snr_db);
  Matrix out = D.matrix() + E;
  if (renormalize) return Dictionary(normalize_columns(out), true);
  return Dictionary(std::move(out));
}

Signal add_signal_noise(const Signal& y, double snr_db, std::uint64_t seed) {
  Vector e = gaussian_matrix(y.size(), 1, seed).col(0);
  e *= noise_scale(y.norm(), e.norm(), snr_db);
  return y + e;
}

std::string_view to_string(DictionaryModel kind) {
  switch (kind) {
  case DictionaryModel::Fixed: return "fixed";
  case DictionaryModel::Permuted: return "permuted";
  case DictionaryModel::NoisyDict: return "noisy_dict";
  case DictionaryModel::RandomDict: return "random_dict";
  }
  return "fixed";
}

DictionaryModel dictionary_model_from_string(std::string_view name) {
  if (name == "fixed") return DictionaryModel::Fixed;
  if (name == "permuted") return DictionaryModel::Permuted;
  if (name == "noisy_dict") return DictionaryModel::NoisyDict;
  if (name == "random_dict") return DictionaryModel::RandomDict;
  throw std::invalid_argument("unknown scenario kind '" + std::string(name) + "'");
}

void Scenario::validate() const {
  require(n >= 1 && m >= 1, "scenario: n and m must be >= 1");
  require(s >= 1 && s <= m, "scenario: cardinality must satisfy 1 <= s <= m");
  require(train_size >= 0 && test_size >= 0, "scenario: negative sample count");
  require(label_iterations >= 1, "scenario: label_iterations must be >= 1");
  require(label_lambda >= 0.0, "scenario: label_lambda must be >= 0");
  if (kind == DictionaryModel::NoisyDict)
    require(dict_snr_db.has_value(), "scenario: noisy_dict needs dict_snr_db");
  if (dict_snr_db) require(!std::isnan(*dict_snr_db), "scenario: dict_snr_db must be a number");
  if (signal_snr_db) require(!std::isnan(*signal_snr_db), "scenario: signal_snr_db must be a number");
}

Json to_json(const Scenario& sc) {
  Json j{{"kind", std::string(to_string(sc.kind))},
         {"n", sc.n},
         {"m", sc.m},
         {"s", sc.s},
         {"train_size", sc.train_size},
         {"test_size", sc.test_size},
         {"seed", sc.seed},
         {"renormalize", sc.renormalize},
         {"label_iterations", sc.label_iterations},
         {"label_lambda", sc.label_lambda}};
  j["dict_snr_db"] = sc.dict_snr_db ? Json(*sc.dict_snr_db) : Json(nullptr);
  j["signal_snr_db"] = sc.signal_snr_db ? Json(*sc.signal_snr_db) : Json(nullptr);
  return j;
}

Scenario scenario_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("scenario must be a JSON object");
  Scenario sc;
  if (j.contains("kind")) sc.kind = dictionary_model_from_string(j.at("kind").get<std::string>());
  sc.n = j.value("n", sc.n);
  sc.m = j.value("m", sc.m);
  sc.s = j.value("s", sc.s);
  sc.train_size = j.value("train_size", sc.train_size);
  sc.test_size = j.value("test_size", sc.test_size);
  sc.seed = j.value("seed", sc.seed);
  sc.renormalize = j.value("renormalize", sc.renormalize);
  sc.label_iterations = j.value("label_iterations", sc.label_iterations);
  sc.label_lambda = j.value("label_lambda", sc.label_lambda);
  if (j.contains("dict_snr_db") && !j.at("dict_snr_db").is_null()) sc.dict_snr_db = j.at("dict_snr_db").get<double>();
  if (j.contains("signal_snr_db") && !j.at("signal_snr_db").is_null())
    sc.signal_snr_db = j.at("signal_snr_db").get<double>();
  sc.validate();
  return sc;
}

SparseCode label_code(const Signal& y, const Dictionary& D, int iterations, double lambda,
                      std::optional<double> lipschitz) {
  ClassicConfig cfg;
  cfg.lambda = lambda;
  cfg.iterations = iterations;
  cfg.lipschitz = lipschitz;
  cfg.record_objectives = false;
  return fista(y, D, cfg).final_code();
}

Dataset make_dataset(const Scenario& sc) {
  sc.validate();
  Dataset ds;
  ds.scenario = sc;
  ds.base = std::make_shared<const Dictionary>(random_dictionary(sc.n, sc.m, derive_seed(sc.seed, 0)));
  const double base_L = spectral_norm_sq(*ds.base);

  auto draw = [&](std::uint64_t sample_seed) {
    std::shared_ptr<const Dictionary> dict;
    std::optional<double> L;
    std::optional<Permutation> perm;
    switch (sc.kind) {
    case DictionaryModel::Fixed:
      dict = ds.base;
      L = base_L;
      break;
    case DictionaryModel::Permuted: {
      auto [Dp, p] = permute_dictionary(*ds.base, derive_seed(sample_seed, 0));
      dict = std::make_shared<const Dictionary>(std::move(Dp));
      perm = std::move(p);
      L = base_L;
      break;
    }
    case DictionaryModel::NoisyDict:
      dict = std::make_shared<const Dictionary>(
          perturb_dictionary(*ds.base, *sc.dict_snr_db, derive_seed(sample_seed, 0), sc.renormalize));
      break;
    case DictionaryModel::RandomDict:
      dict = std::make_shared<const Dictionary>(random_dictionary(sc.n, sc.m, derive_seed(sample_seed, 0)));
      break;
    }
    TrainingTriple t;
    t.dictionary = dict;
    // Codes are drawn in base atom order so a permuted sample carries the
    // same signal as the fixed sample with the same seed.
    const SparseCode x = sparse_code(sc.m, sc.s, derive_seed(sample_seed, 1));
    t.x_star = perm ? permute_code(x, *perm) : x;
    t.y = dict->matrix() * *t.x_star;
    if (sc.signal_snr_db) t.y = add_signal_noise(t.y, *sc.signal_snr_db, derive_seed(sample_seed, 2));
    t.x_ref = label_code(t.y, *dict, sc.label_iterations, sc.label_lambda, L);
    return t;
  };

  auto fill = [&](Index count, bool test) {
    std::vector<TrainingTriple> out(static_cast<std::size_t>(count));
    const std::uint64_t root = split_seed(sc.seed, test);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = draw(derive_seed(root, i)); });
    return out;
  };
  ds.train = fill(sc.train_size, false);
  ds.test = fill(sc.test_size, true);
  return ds;
}

namespace {

Json triple_json(const TrainingTriple& t, const char* split, bool with_dictionary) {
  Json j{{"split", split}, {"y", to_json(t.y)}, {"x_ref", to_json(t.x_ref)}};
  if (t.x_star) j["x_star"] = to_json(*t.x_star);
  if (with_dictionary) j["D"] = to_json(t.dictionary->matrix());
  return j;
}

} // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json meta{{"format", "adalista-dataset"},
            {"version", 1},
            {"scenario", to_json(ds.scenario)},
            {"base_dictionary", to_json(ds.base->matrix())}};
  write_text_atomic(dir / "meta.json", meta.dump(1) + "\n");
  const bool shared = ds.scenario.kind == DictionaryModel::Fixed;
  std::string lines;
  for (const auto& t : ds.train) lines += triple_json(t, "train", !shared).dump() + "\n";
  for (const auto& t : ds.test) lines += triple_json(t, "test", !shared).dump() + "\n";
  write_text_atomic(dir / "samples.jsonl", lines);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const Json meta = read_json_file(dir / "meta.json");
  if (meta.value("version", 0) != 1) throw std::invalid_argument("dataset: unsupported version");
  Dataset ds;
  ds.scenario = scenario_from_json(meta.at("scenario"));
  ds.base = std::make_shared<const Dictionary>(matrix_from_json(meta.at("base_dictionary")), true);

  std::ifstream in(dir / "samples.jsonl", std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + (dir / "samples.jsonl").string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const Json j = parse_json_text(line, (dir / "samples.jsonl").string() + ":" + std::to_string(lineno));
    TrainingTriple t;
    t.y = vector_from_json(j.at("y"));
    t.x_ref = vector_from_json(j.at("x_ref"));
    if (j.contains("x_star")) t.x_star = vector_from_json(j.at("x_star"));
    t.dictionary = j.contains("D") ? std::make_shared<const Dictionary>(matrix_from_json(j.at("D"))) : ds.base;
    const std::string split = j.at("split").get<std::string>();
    if (split == "train")
      ds.train.push_back(std::move(t));
    else if (split == "test")
      ds.test.push_back(std::move(t));
    else
      throw std::invalid_argument("dataset: unknown split '" + split + "'");
  }
  return ds;
}

} // namespace adalista
