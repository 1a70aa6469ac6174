// Unrolled (learned) sparse-coding networks.
//
// All variants share the same skeleton: K layers, each an affine map of the
// previous iterate followed by a soft threshold with a per-layer threshold.
// Weight matrices are tied across layers; thresholds and steps are per layer.
//
//   ada_lista   u = (I - g_k D^T W1^T W1 D) z + g_k D^T W2^T y
//   ada_lfista  same affine map, z extrapolated with FISTA momentum
//   single      u = z + D^T W^T (y - D z)
//   lista       u = W1 y + W2 z                    (no dictionary input)
//   inpaint     u = z - g_k W1^T M W1 z + g_k W2^T M y   (W1, W2 are n x m)
//
// Naming follows the layer definition above: W1 sits inside the Gram term
// and W2 multiplies the signal. Some presentations of the inference loop
// swap the two names; the structure is the same.

#pragma once

#include "adalista/core.hpp"
#include "adalista/mask.hpp"
#include "adalista/serialization.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace adalista {

enum class Variant { AdaLista, AdaLfista, Single, Lista, Inpaint };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view name);

struct AdaListaParams {
  Matrix W1; // n x n, Gram wrapper
  Matrix W2; // n x n, signal wrapper
  Vector theta;
  Vector gamma;
  int depth() const noexcept { return static_cast<int>(theta.size()); }
};

struct SingleMatrixParams {
  Matrix W; // n x n
  Vector theta;
  int depth() const noexcept { return static_cast<int>(theta.size()); }
};

struct ListaParams {
  Matrix W1; // m x n
  Matrix W2; // m x m
  /// Either one shared threshold or one per layer.
  Vector theta;
  /// Unfolding depth K.
  int layers = 0;
  int depth() const noexcept { return layers; }
  double threshold(int layer) const { return theta.size() == 1 ? theta[0] : theta[layer]; }
};

struct InpaintParams {
  Matrix W1; // n x m
  Matrix W2; // n x m
  Vector theta;
  Vector gamma;
  bool momentum = true;
  int depth() const noexcept { return static_cast<int>(theta.size()); }
};

/// What a network consumes besides the signal.
struct ModelInput {
  const Dictionary* dictionary = nullptr;
  const Mask* mask = nullptr;
};

SparseCode ada_lista_forward(const Signal& y, const Dictionary& D, const AdaListaParams& p,
                             std::optional<int> layers = std::nullopt);
SolverTrace ada_lista_forward_trace(const Signal& y, const Dictionary& D, const AdaListaParams& p,
                                    std::optional<int> layers = std::nullopt);

SparseCode ada_lfista_forward(const Signal& y, const Dictionary& D, const AdaListaParams& p,
                              std::optional<int> layers = std::nullopt);
SolverTrace ada_lfista_forward_trace(const Signal& y, const Dictionary& D, const AdaListaParams& p,
                                     std::optional<int> layers = std::nullopt);

SparseCode ada_lista_single_forward(const Signal& y, const Dictionary& D, const SingleMatrixParams& p,
                                    std::optional<int> layers = std::nullopt);
SolverTrace ada_lista_single_forward_trace(const Signal& y, const Dictionary& D,
                                           const SingleMatrixParams& p,
                                           std::optional<int> layers = std::nullopt);

/// LISTA runs `layers` iterations (default p.layers). With a shared
/// threshold any depth is allowed, otherwise layers <= theta.size().
SparseCode lista_forward(const Signal& y, const ListaParams& p, std::optional<int> layers = std::nullopt);
SolverTrace lista_forward_trace(const Signal& y, const ListaParams& p,
                                std::optional<int> layers = std::nullopt);

SparseCode inpaint_forward(const Signal& y, const Mask& M, const InpaintParams& p,
                           std::optional<int> layers = std::nullopt);
SolverTrace inpaint_forward_trace(const Signal& y, const Mask& M, const InpaintParams& p,
                                  std::optional<int> layers = std::nullopt);

/// A network of any variant. Ada-LISTA and Ada-LFISTA share AdaListaParams.
struct Model {
  Variant variant = Variant::AdaLista;
  std::variant<AdaListaParams, SingleMatrixParams, ListaParams, InpaintParams> params;

  int depth() const;
};

/// Checks that the parameter shapes agree with the variant and depth.
void validate(const Model& model);

SparseCode forward(const Model& model, const Signal& y, const ModelInput& in,
                   std::optional<int> layers = std::nullopt);

/// Learnable tensors in a fixed order: matrices first, then theta, then
/// gamma (when the variant has one).
std::vector<std::span<double>> tensors(Model& model);
std::vector<std::span<const double>> tensors(const Model& model);
std::vector<std::string> tensor_names(const Model& model);
/// Index into tensors() of the threshold vector.
std::size_t threshold_tensor(const Model& model);

/// Same variant and shapes, every entry zero.
Model zeros_like(const Model& model);

/// Parameter JSON: {"variant", "K", "W1", "W2" | "W", "theta", "gamma", ...}
Json to_json(const Model& model);
Model model_from_json(const Json& j);

// Initializers.

/// W1 = W2 = I (n x n), every theta_k and gamma_k = 1.
AdaListaParams ada_lista_identity_init(Index n, int depth);
/// W1 = W2 = I, gamma_k = 1/L, theta_k = lambda/L: reproduces ISTA on a
/// dictionary with Lipschitz constant L.
AdaListaParams ada_lista_ista_init(Index n, int depth, double lipschitz, double lambda);
/// W = I, theta_k = theta.
SingleMatrixParams single_identity_init(Index n, int depth, double theta);
/// W1 = step D^T, W2 = I - step D^T D, theta_k = lambda step.
ListaParams lista_step_init(const Dictionary& D, int depth, double lambda, double step);
/// lista_step_init with step 1/L.
ListaParams lista_ista_init(const Dictionary& D, int depth, double lambda);
/// W1 = W2 = D, gamma_k = 1/L, theta_k = lambda/L.
InpaintParams inpaint_dictionary_init(const Dictionary& D, int depth, double lambda, bool momentum);

} // namespace adalista
