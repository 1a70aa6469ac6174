// Supervised training of unrolled networks: squared-error loss against
// reference codes, exact reverse-mode gradients through every layer, and
// minibatch SGD/Adam.

#pragma once

#include "adalista/core.hpp"
#include "adalista/mask.hpp"
#include "adalista/unrolled.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adalista {

/// One supervised sample. Which model input is used depends on the variant:
/// dictionary-driven networks read `dictionary`, the inpainting network reads
/// `mask`, and LISTA reads neither.
struct TrainingTriple {
  Signal y;
  std::shared_ptr<const Dictionary> dictionary;
  std::optional<Mask> mask;
  SparseCode x_ref;
  /// Generating code, when known. Diagnostics only; never a training target.
  std::optional<SparseCode> x_star;

  ModelInput input() const { return {dictionary.get(), mask ? &*mask : nullptr}; }
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  int batch_size = 128;
  int epochs = 50;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  AdamSettings adam;
  std::uint64_t seed = 0;
};

/// Gradient buffers: a Model of the same variant whose tensors hold dL/dparam.
using GradientSet = Model;

struct AdamState {
  Model first_moment;
  Model second_moment;
  long step = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochRecord> history;
};

/// ||F_K(y; params) - x_ref||^2 for one sample.
double sample_loss(const TrainingTriple& triple, const Model& model);
/// Sum of per-sample losses.
double loss(std::span<const TrainingTriple> batch, const Model& model);

/// Exact gradient of sample_loss with respect to every learnable tensor.
GradientSet backward(const TrainingTriple& triple, const Model& model);
/// Sum of per-sample gradients, reduced in a fixed order.
GradientSet batch_gradient(std::span<const TrainingTriple> batch, const Model& model);

/// Central differences of sample_loss, one entry at a time.
GradientSet finite_diff_grad(const TrainingTriple& triple, const Model& model, double h);

AdamState adam_init(const Model& model);
/// One bias-corrected Adam update; thresholds are projected onto >= 0.
void adam_step(Model& model, const GradientSet& grads, AdamState& state, const TrainConfig& cfg);
void sgd_step(Model& model, const GradientSet& grads, const TrainConfig& cfg);

/// Mean over samples of ||F(y) - x_ref||^2, optionally at a truncated depth.
double mean_squared_error(std::span<const TrainingTriple> data, const Model& model,
                          std::optional<int> layers = std::nullopt);

/// Minibatch training from `init`. Epoch 0 of the history evaluates the
/// initial parameters; epoch e >= 1 reports the mean batch loss seen during
/// that epoch and the validation MSE after it.
TrainResult train(std::span<const TrainingTriple> dataset, Model init, const TrainConfig& cfg,
                  std::span<const TrainingTriple> validation);

/// `epoch,train_loss,val_mse` with a header row.
std::string history_csv(const std::vector<EpochRecord>& history);

} // namespace adalista
