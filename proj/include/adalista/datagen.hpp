// Synthetic sparse-coding scenarios with per-sample deterministic seeding.

#pragma once

#include "adalista/core.hpp"
#include "adalista/serialization.hpp"
#include "adalista/solvers.hpp"
#include "adalista/training.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace adalista {

/// SNR values at or above this are treated as noiseless.
inline constexpr double kMaxSnrDb = 300.0;

/// Stable 64-bit mix of (seed, index); used to derive independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// i.i.d. N(0,1) entries, columns normalized.
Dictionary random_dictionary(Index n, Index m, std::uint64_t seed);

/// Exactly s nonzeros on a uniformly drawn support, N(0,1) values.
SparseCode sparse_code(Index m, Index s, std::uint64_t seed);

/// Column order of a permuted dictionary: column j of D P is column perm[j] of D.
using Permutation = std::vector<Index>;

std::pair<Dictionary, Permutation> permute_dictionary(const Dictionary& D, std::uint64_t seed);
/// D P for an explicit permutation.
Dictionary apply_permutation(const Dictionary& D, const Permutation& perm);
/// P^T x, so that (D P)(P^T x) = D x.
SparseCode permute_code(const SparseCode& x, const Permutation& perm);
/// D P P^T = D: undoes apply_permutation.
Dictionary unpermute_dictionary(const Dictionary& Dp, const Permutation& perm);

/// D + E with E Gaussian, rescaled so that 20 log10(||D||_F / ||E||_F) equals
/// snr_db exactly. snr_db >= kMaxSnrDb is clamped to kMaxSnrDb.
Dictionary perturb_dictionary(const Dictionary& D, double snr_db, std::uint64_t seed, bool renormalize = false);

/// y + e with ||e|| = ||y|| 10^(-snr/20).
Signal add_signal_noise(const Signal& y, double snr_db, std::uint64_t seed);

enum class DictionaryModel { Fixed, Permuted, NoisyDict, RandomDict };

std::string_view to_string(DictionaryModel kind);
DictionaryModel dictionary_model_from_string(std::string_view name);

struct Scenario {
  DictionaryModel kind = DictionaryModel::Fixed;
  /// Required for NoisyDict.
  std::optional<double> dict_snr_db;
  /// Additive signal noise, combinable with every kind.
  std::optional<double> signal_snr_db;
  Index n = 50;
  Index m = 70;
  Index s = 4;
  Index train_size = 2000;
  Index test_size = 500;
  std::uint64_t seed = 0;
  bool renormalize = false;
  int label_iterations = kSyntheticLabelIterations;
  double label_lambda = kSyntheticLabelLambda;

  void validate() const;
};

Json to_json(const Scenario& sc);
Scenario scenario_from_json(const Json& j);

struct Dataset {
  Scenario scenario;
  /// The clean dictionary every per-sample model is derived from (also the
  /// one a vanilla LISTA baseline is initialized from).
  std::shared_ptr<const Dictionary> base;
  std::vector<TrainingTriple> train;
  std::vector<TrainingTriple> test;
};

Dataset make_dataset(const Scenario& sc);

/// Lasso label by FISTA with the scenario's iteration count and lambda.
SparseCode label_code(const Signal& y, const Dictionary& D, int iterations, double lambda,
                      std::optional<double> lipschitz = std::nullopt);

/// Directory with meta.json (scenario and base dictionary) and
/// samples.jsonl, one triple per line tagged with its split.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

} // namespace adalista
