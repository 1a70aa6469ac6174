// ISTA and FISTA for the Lasso  min_x 0.5 ||y - D x||^2 + lambda ||x||_1.

#pragma once

#include "adalista/core.hpp"

#include <optional>

namespace adalista {

struct ClassicConfig {
  double lambda = 1.0;
  int iterations = 100;
  /// Fixed step; when empty the step is 1/L with L = spectral_norm_sq(D).
  std::optional<double> fixed_step;
  /// Precomputed L, skipping the power iteration. Ignored with fixed_step.
  std::optional<double> lipschitz;
  /// Record the Lasso objective at every iterate (costs one extra D x).
  bool record_objectives = true;
};

/// Labeling conventions for reference codes.
inline constexpr int kSyntheticLabelIterations = 100;
inline constexpr double kSyntheticLabelLambda = 1.0;
inline constexpr int kInpaintLabelIterations = 300;

/// x_{k+1} = S_{lambda*step}(x_k + step * D^T (y - D x_k)), x_0 = 0.
SolverTrace ista(const Signal& y, const Dictionary& D, const ClassicConfig& cfg);

/// Same proximal step taken from the extrapolated point z_k, with
/// t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2 and
/// z_{k+1} = x_{k+1} + (t_k - 1) / t_{k+1} * (x_{k+1} - x_k); z_0 = 0, t_0 = 1.
SolverTrace fista(const Signal& y, const Dictionary& D, const ClassicConfig& cfg);

/// Next momentum scalar of the FISTA recursion.
double fista_next_t(double t);

} // namespace adalista
