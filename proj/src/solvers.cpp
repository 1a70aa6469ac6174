#include "adalista/solvers.hpp"

#include <cmath>

namespace adalista {
namespace {

double resolve_step(const Dictionary& D, const ClassicConfig& cfg) {
  require(cfg.iterations >= 1, "classic solver: iteration count must be >= 1");
  require(cfg.lambda >= 0.0, "classic solver: lambda must be nonnegative");
  if (cfg.fixed_step) {
    require(*cfg.fixed_step > 0.0, "classic solver: fixed step must be positive");
    return *cfg.fixed_step;
  }
  const double L = cfg.lipschitz ? *cfg.lipschitz : spectral_norm_sq(D);
  if (!(L > 0.0)) throw NumericError("classic solver: dictionary has zero spectral norm");
  return 1.0 / L;
}

SolverTrace run(const Signal& y, const Dictionary& D, const ClassicConfig& cfg, bool momentum) {
  require_same_size(y.size(), D.signal_dim(), "classic solver: signal");
  const double step = resolve_step(D, cfg);
  const double theta = cfg.lambda * step;
  const Matrix& A = D.matrix();
  const Vector Aty = A.transpose() * y;

  SolverTrace trace;
  trace.codes.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  trace.objectives.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  Vector x = Vector::Zero(D.code_dim());
  Vector z = x;
  double t = 1.0;
  trace.codes.push_back(x);
  if (cfg.record_objectives) trace.objectives.push_back(lasso_objective(y, D, x, cfg.lambda));

  for (int k = 0; k < cfg.iterations; ++k) {
    const Vector& base = momentum ? z : x;
    Vector next = soft_threshold(base + step * (Aty - A.transpose() * (A * base)), theta);
    if (momentum) {
      const double t_next = fista_next_t(t);
      z = next + ((t - 1.0) / t_next) * (next - x);
      t = t_next;
    }
    x = std::move(next);
    trace.codes.push_back(x);
    if (cfg.record_objectives) trace.objectives.push_back(lasso_objective(y, D, x, cfg.lambda));
  }
  return trace;
}

} // namespace

double fista_next_t(double t) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t)); }

SolverTrace ista(const Signal& y, const Dictionary& D, const ClassicConfig& cfg) {
  return run(y, D, cfg, false);
}

SolverTrace fista(const Signal& y, const Dictionary& D, const ClassicConfig& cfg) {
  return run(y, D, cfg, true);
}

} // namespace adalista
