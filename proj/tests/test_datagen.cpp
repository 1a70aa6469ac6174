#include "adalista/datagen.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <set>

using namespace adalista;

namespace {

double frobenius_snr_db(const Matrix& clean, const Matrix& noisy) {
  return 20.0 * std::log10(clean.norm() / (noisy - clean).norm());
}

Scenario small_scenario(DictionaryModel kind) {
  Scenario sc;
  sc.kind = kind;
  sc.n = 20;
  sc.m = 30;
  sc.s = 3;
  sc.train_size = 40;
  sc.test_size = 10;
  sc.seed = 5;
  if (kind == DictionaryModel::NoisyDict) sc.dict_snr_db = 20.0;
  return sc;
}

bool same_triple(const TrainingTriple& a, const TrainingTriple& b) {
  return a.y == b.y && a.x_ref == b.x_ref && a.dictionary->matrix() == b.dictionary->matrix() &&
         a.x_star.has_value() == b.x_star.has_value() && (!a.x_star || *a.x_star == *b.x_star);
}

} // namespace

TEST(RandomDictionary, ShapeUnitColumnsAndDeterminism) {
  const Dictionary D = random_dictionary(50, 70, 11);
  EXPECT_EQ(D.signal_dim(), 50);
  EXPECT_EQ(D.code_dim(), 70);
  EXPECT_LE((D.matrix().colwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_EQ(random_dictionary(50, 70, 11).matrix(), D.matrix());
  EXPECT_NE(random_dictionary(50, 70, 12).matrix(), D.matrix());
}

TEST(SparseCode, Cardinality) {
  EXPECT_EQ((sparse_code(70, 4, 3).array() != 0.0).count(), 4);
  EXPECT_EQ((sparse_code(9, 9, 3).array() != 0.0).count(), 9);
  EXPECT_EQ(sparse_code(70, 4, 3), sparse_code(70, 4, 3));
  EXPECT_THROW(sparse_code(5, 6, 0), std::invalid_argument);
  EXPECT_THROW(sparse_code(5, 0, 0), std::invalid_argument);
}

TEST(SparseCode, UniformSupport) {
  const Index m = 70, s = 4;
  const int draws = 100000;
  std::vector<int> hits(static_cast<std::size_t>(m), 0);
  for (int t = 0; t < draws; ++t) {
    const SparseCode x = sparse_code(m, s, derive_seed(17, static_cast<std::uint64_t>(t)));
    for (Index i = 0; i < m; ++i)
      if (x[i] != 0.0) ++hits[static_cast<std::size_t>(i)];
  }
  const double p = static_cast<double>(s) / static_cast<double>(m);
  const double mean = draws * p, sd = std::sqrt(draws * p * (1.0 - p));
  for (int h : hits) EXPECT_LE(std::abs(h - mean), 5.0 * sd);
}

TEST(PermuteDictionary, IdentityPermutation) {
  const Dictionary D = random_dictionary(6, 9, 1);
  Permutation id(9);
  std::iota(id.begin(), id.end(), Index{0});
  EXPECT_EQ(apply_permutation(D, id).matrix(), D.matrix());
}

TEST(PermuteDictionary, ColumnMultisetAndExactInverse) {
  const Dictionary D = random_dictionary(8, 12, 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [Dp, perm] = permute_dictionary(D, seed);
    std::set<Index> seen(perm.begin(), perm.end());
    ASSERT_EQ(seen.size(), 12u);
    for (Index j = 0; j < 12; ++j) EXPECT_EQ(Dp.matrix().col(j), D.matrix().col(perm[static_cast<std::size_t>(j)]));
    EXPECT_EQ(unpermute_dictionary(Dp, perm).matrix(), D.matrix());
    std::mt19937_64 rng(seed);
    const SparseCode x = testutil::sparse_vec(12, 3, rng);
    EXPECT_LE(testutil::max_abs_diff(Dp.matrix() * permute_code(x, perm), D.matrix() * x), 1e-14);
  }
}

TEST(PerturbDictionary, ExactSnr) {
  const Dictionary D = random_dictionary(50, 70, 3);
  for (double snr : {25.0, 10.0, 0.0, -5.0, 40.0}) {
    const Dictionary Dt = perturb_dictionary(D, snr, 4);
    EXPECT_NEAR(frobenius_snr_db(D.matrix(), Dt.matrix()), snr, 1e-9);
  }
}

TEST(PerturbDictionary, NoiselessCap) {
  const Dictionary D = random_dictionary(50, 70, 3);
  EXPECT_LE(testutil::max_abs_diff(perturb_dictionary(D, kMaxSnrDb, 4).matrix(), D.matrix()), 1e-12);
  EXPECT_EQ(perturb_dictionary(D, 1e6, 4).matrix(), perturb_dictionary(D, kMaxSnrDb, 4).matrix());
  EXPECT_EQ(perturb_dictionary(D, std::numeric_limits<double>::infinity(), 4).matrix(),
            perturb_dictionary(D, kMaxSnrDb, 4).matrix());
}

TEST(PerturbDictionary, IndependentAcrossSeeds) {
  const Dictionary D = random_dictionary(100, 100, 3);
  const Matrix e1 = perturb_dictionary(D, 10.0, 1).matrix() - D.matrix();
  const Matrix e2 = perturb_dictionary(D, 10.0, 2).matrix() - D.matrix();
  const double corr = (e1.array() * e2.array()).sum() / (e1.norm() * e2.norm());
  EXPECT_LT(std::abs(corr), 0.05);
}

TEST(PerturbDictionary, RenormalizeFlag) {
  const Dictionary D = random_dictionary(20, 30, 3);
  const Dictionary raw = perturb_dictionary(D, 5.0, 1);
  EXPECT_GT((raw.matrix().colwise().norm().array() - 1.0).abs().maxCoeff(), 1e-3);
  const Dictionary unit = perturb_dictionary(D, 5.0, 1, true);
  EXPECT_LE((unit.matrix().colwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(SignalNoise, ExactRatioCapAndDeterminism) {
  std::mt19937_64 rng(9);
  const Signal y = testutil::gaussian_vec(50, rng);
  for (double snr : {10.0, 20.0, 30.0}) {
    const Signal z = add_signal_noise(y, snr, 3);
    EXPECT_NEAR((z - y).norm() / y.norm(), std::pow(10.0, -snr / 20.0), 1e-9);
    EXPECT_EQ(add_signal_noise(y, snr, 3), z);
  }
  EXPECT_LE(testutil::max_abs_diff(add_signal_noise(y, 1e9, 3), y), 1e-12);
}

TEST(MakeDataset, FixedSharesDictionaryObject) {
  const Dataset ds = make_dataset(small_scenario(DictionaryModel::Fixed));
  ASSERT_EQ(ds.train.size(), 40u);
  ASSERT_EQ(ds.test.size(), 10u);
  for (const auto& t : ds.train) EXPECT_EQ(t.dictionary.get(), ds.train[0].dictionary.get());
  for (const auto& t : ds.test) EXPECT_EQ(t.dictionary.get(), ds.train[0].dictionary.get());
}

TEST(MakeDataset, PaperDimensions) {
  Scenario sc;
  sc.train_size = 20000;
  sc.test_size = 1000;
  const Dataset ds = make_dataset(sc);
  ASSERT_EQ(ds.train.size(), 20000u);
  ASSERT_EQ(ds.test.size(), 1000u);
  const TrainingTriple& t = ds.train.back();
  EXPECT_EQ(t.y.size(), 50);
  EXPECT_EQ(t.x_ref.size(), 70);
  EXPECT_EQ((t.x_star->array() != 0.0).count(), 4);
}

TEST(MakeDataset, LabelsMatchLongFistaRun) {
  for (auto kind : {DictionaryModel::Fixed, DictionaryModel::NoisyDict, DictionaryModel::RandomDict}) {
    Scenario sc = small_scenario(kind);
    sc.n = 50;
    sc.m = 70;
    sc.s = 4;
    const Dataset ds = make_dataset(sc);
    ClassicConfig long_run;
    long_run.iterations = 1000;
    long_run.record_objectives = false;
    for (const auto& t : ds.train) {
      const double best = lasso_objective(t.y, *t.dictionary, fista(t.y, *t.dictionary, long_run).final_code(), 1.0);
      const double label = lasso_objective(t.y, *t.dictionary, t.x_ref, 1.0);
      EXPECT_LE(label - best, 1e-6) << to_string(kind);
      EXPECT_LE(label, lasso_objective(t.y, *t.dictionary, SparseCode::Zero(70), 1.0));
    }
  }
}

TEST(MakeDataset, BitwiseDeterministic) {
  for (auto kind : {DictionaryModel::Fixed, DictionaryModel::Permuted, DictionaryModel::NoisyDict,
                    DictionaryModel::RandomDict}) {
    Scenario sc = small_scenario(kind);
    sc.signal_snr_db = 20.0;
    const Dataset a = make_dataset(sc), b = make_dataset(sc);
    ASSERT_EQ(a.train.size(), b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_TRUE(same_triple(a.train[i], b.train[i]));
    for (std::size_t i = 0; i < a.test.size(); ++i) EXPECT_TRUE(same_triple(a.test[i], b.test[i]));
  }
}

TEST(MakeDataset, RandomDictionariesDifferPerSample) {
  Scenario sc = small_scenario(DictionaryModel::RandomDict);
  sc.n = 50;
  sc.m = 70;
  const Dataset ds = make_dataset(sc);
  for (std::size_t i = 1; i < ds.train.size(); ++i)
    EXPECT_GT((ds.train[i].dictionary->matrix() - ds.train[i - 1].dictionary->matrix()).norm(), 0.1);
}

TEST(MakeDataset, PermutedSamplesPairWithFixedSignals) {
  const Dataset fixed = make_dataset(small_scenario(DictionaryModel::Fixed));
  const Dataset perm = make_dataset(small_scenario(DictionaryModel::Permuted));
  for (std::size_t i = 0; i < fixed.train.size(); ++i) {
    EXPECT_LE(testutil::max_abs_diff(fixed.train[i].y, perm.train[i].y), 1e-12);
    EXPECT_NE(perm.train[i].dictionary.get(), perm.base.get());
    EXPECT_LE(testutil::max_abs_diff(perm.train[i].dictionary->matrix() * *perm.train[i].x_star, perm.train[i].y),
              1e-12);
  }
}

TEST(MakeDataset, NoisyDictionaryAndSignal) {
  Scenario sc = small_scenario(DictionaryModel::NoisyDict);
  sc.signal_snr_db = 10.0;
  const Dataset ds = make_dataset(sc);
  for (const auto& t : ds.train) {
    EXPECT_NEAR(frobenius_snr_db(ds.base->matrix(), t.dictionary->matrix()), 20.0, 1e-9);
    const Signal clean = t.dictionary->matrix() * *t.x_star;
    EXPECT_NEAR((t.y - clean).norm() / clean.norm(), std::pow(10.0, -0.5), 1e-9);
  }
}

TEST(MakeDataset, InvalidScenarios) {
  Scenario sc = small_scenario(DictionaryModel::Fixed);
  sc.s = 31;
  EXPECT_THROW(make_dataset(sc), std::invalid_argument);
  sc = small_scenario(DictionaryModel::NoisyDict);
  sc.dict_snr_db.reset();
  EXPECT_THROW(make_dataset(sc), std::invalid_argument);
  sc = small_scenario(DictionaryModel::Fixed);
  sc.signal_snr_db = std::nan("");
  EXPECT_THROW(make_dataset(sc), std::invalid_argument);
  EXPECT_THROW(dictionary_model_from_string("shuffled"), std::invalid_argument);
}

TEST(ScenarioJson, RoundTrip) {
  Scenario sc = small_scenario(DictionaryModel::NoisyDict);
  sc.signal_snr_db = 30.0;
  sc.renormalize = true;
  const Scenario back = scenario_from_json(to_json(sc));
  EXPECT_EQ(to_json(back), to_json(sc));
}

TEST(DatasetIo, SaveLoadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "adalista_test_dataset";
  std::filesystem::remove_all(dir);
  for (auto kind : {DictionaryModel::Fixed, DictionaryModel::Permuted}) {
    const Dataset ds = make_dataset(small_scenario(kind));
    save_dataset(ds, dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "meta.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "samples.jsonl"));
    const Dataset back = load_dataset(dir);
    EXPECT_EQ(to_json(back.scenario), to_json(ds.scenario));
    EXPECT_EQ(back.base->matrix(), ds.base->matrix());
    ASSERT_EQ(back.train.size(), ds.train.size());
    ASSERT_EQ(back.test.size(), ds.test.size());
    for (std::size_t i = 0; i < ds.train.size(); ++i) EXPECT_TRUE(same_triple(back.train[i], ds.train[i]));
    for (std::size_t i = 0; i < ds.test.size(); ++i) EXPECT_TRUE(same_triple(back.test[i], ds.test[i]));
  }
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_dataset(dir), std::exception);
}
