// Config-driven experiment runs, result tables, parameter files and plots.

#pragma once

#include "adalista/datagen.hpp"
#include "adalista/inpainting.hpp"
#include "adalista/serialization.hpp"
#include "adalista/theory.hpp"
#include "adalista/training.hpp"
#include "adalista/unrolled.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace adalista {

/// Raised for invalid experiment or CLI configuration.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind { Permuted, NoisyDict, RandomDict, NoisySignal, Inpaint, Theorem1, Theorem2, Cantelli };

std::string_view to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(std::string_view name);

/// How learned synthetic networks start. Identity: Ada-LISTA with
/// W1 = W2 = I and unit theta_k, gamma_k; LISTA as ISTA with unit step on the
/// clean dictionary. Ista: the same with step 1/L and theta_k = lambda/L.
enum class InitScheme { Identity, Ista };

struct InpaintExperiment {
  std::vector<std::string> images;
  std::vector<std::string> train_images;
  /// Optional JSON dictionary; the overcomplete DCT otherwise.
  std::string dictionary;
  Index dict_atoms = 256;
  double p = 0.5;
  Index train_patches = 5000;
  Index val_patches = 500;
  double lambda = kInpaintLambda;
  int label_iterations = kInpaintLabelIterations;
};

struct TheoryExperiment {
  Index n = 20;
  Index m = 30;
  int K = 30;
  int harnesses = 1;
  double sigma = 0.05;
  std::vector<double> tau_od;
  std::vector<double> tau_d;
  long draws = 20000;
  CantelliForm form = CantelliForm::Printed;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Permuted;
  Scenario scenario;
  std::vector<std::string> solvers;
  std::vector<int> K_sweep;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  TrainConfig train;
  InitScheme init = InitScheme::Identity;
  bool retrain_per_k = false;
  InpaintExperiment inpaint;
  TheoryExperiment theory;

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const Json& j);
/// Every field, defaults included.
Json to_json(const ExperimentConfig& cfg);
/// 16 hex digits (FNV-1a over the canonical JSON dump).
std::string config_hash(const ExperimentConfig& cfg);

struct ResultRow {
  std::string solver;
  int K = 0;
  double value = 0.0;
};

struct ResultTable {
  std::string metric = "mse";
  std::vector<ResultRow> rows;
  Json metadata = Json::object();
};

/// `solver,K,<metric>` with a header row; values printed with 17 digits.
std::string to_csv(const ResultTable& t);
ResultTable table_from_csv(const std::string& text, const std::string& origin);

struct ExperimentOutput {
  ResultTable table;
  /// Experiment-specific details (theory reports, training histories, ...).
  Json report = Json::object();
  std::map<std::string, Model> models;
};

/// Runs without touching the file system except to read configured inputs.
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

/// results.csv, report.json, meta.json, plot.svg and one params file per
/// trained model, all under cfg.output_dir.
void write_experiment(const ExperimentOutput& out, const ExperimentConfig& cfg);

/// Self-contained SVG: log10 y axis, one polyline per solver, legend.
std::string plot_svg(const ResultTable& table);
void emit_plot(const ResultTable& table, const std::filesystem::path& out);

inline constexpr int kParamsVersion = 1;
void save_params(const std::filesystem::path& path, const Model& model);
Model load_params(const std::filesystem::path& path);

/// Mean ||x_K - x_ref||^2 over the set for a classic solver ("ista"/"fista").
double classic_mse(std::span<const TrainingTriple> data, const std::string& solver, int K, double lambda);

/// Initial network for a learned solver on a synthetic dataset.
Model initial_model(const std::string& solver, const Dataset& ds, int K, InitScheme init);

} // namespace adalista
