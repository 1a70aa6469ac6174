// Executable versions of the convergence guarantees for single-matrix
// Ada-LISTA: coherence measures, condition checkers, constructed harnesses,
// rate verification and the noisy-model probability bounds.

#pragma once

#include "adalista/core.hpp"
#include "adalista/serialization.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace adalista {

/// max_{i != j} |a_i^T b_j|. Requires diag(A^T B) = 1 within 1e-8.
double mutual_coherence(const Matrix& A, const Matrix& B);

/// Deviations of G = D^T W^T D from the identity.
struct GramStats {
  double eps_d = 0.0;  // max_i |G_ii - 1|
  double mu_bar = 0.0; // max_{i != j} |G_ij|
};

GramStats gram_stats(const Matrix& W, const Dictionary& D);

/// n x n weight minimizing ||(W D)^T D||_F^2 subject to d_i^T W^T d_i = 1.
/// With S = D D^T and Q = D^T S^-1 D, the solution is
/// W = S^-1 D diag(c) D^T S^-1 where (Q o Q) c = 1.
Matrix analytic_weight(const Dictionary& D);

/// n x m weight with columns w_i = S^-1 d_i / (d_i^T S^-1 d_i), the
/// column-separable minimizer of ||W^T D||_F^2 subject to w_i^T d_i = 1.
Matrix analytic_weight_columns(const Dictionary& D);

/// theta_k = theta_max * gamma^-k for k = 1..K.
struct ThresholdSchedule {
  double theta_max = 1.0;
  double gamma = 2.0;
  int K = 0;

  void validate() const;
  double theta(int k) const;
  Vector thetas() const;
};

struct TheoremReport {
  int theorem = 1;
  bool satisfied = false;
  Index s = 0;
  double mu_tilde = 0.0; // Theorem 1 coherence of (W D, D)
  double eps_d = 0.0;
  double mu_bar = 0.0;
  double gamma = 0.0;
  /// Upper end of the admissible gamma interval (infinite when mu*s = 0).
  double gamma_limit = 0.0;
  double theta_max = 0.0;
  /// ||A^T y||_inf, the smallest admissible theta_max.
  double theta_max_required = 0.0;
  double theta_min = 0.0;
  /// Smallest scheduled threshold theta_max * gamma^-K.
  double theta_last = 0.0;
  bool degenerate_denominator = false;
  /// Names from: unit_diagonal, sparsity, gamma_range, theta_max, theta_min.
  std::vector<std::string> violated_conditions;
};

Json to_json(const TheoremReport& r);

/// Evaluates every hypothesis of the fixed-model guarantee with A = W D and
/// y = D x* + e. Failures are reported, never thrown.
TheoremReport theorem1_check(const Dictionary& D, const Matrix& W, const SparseCode& x_star, const Signal& e,
                             const ThresholdSchedule& sched);

/// Same with the relaxed Gram conditions (eps_d, mu_bar) and denominator
/// 1 - 2 gamma eps_d - 2 gamma mu_bar s.
TheoremReport theorem2_check(const Dictionary& D, const Matrix& W, const SparseCode& x_star, const Signal& e,
                             const ThresholdSchedule& sched);

struct RateReport {
  bool support_contained_all_k = true;
  bool error_bound_all_k = true;
  double max_ratio = 0.0;
  /// Per-iterate ||x_k - x*||_inf, k = 0..K.
  std::vector<double> errors;
  int first_violation = -1;
};

Json to_json(const RateReport& r);

/// Checks supp(x_k) within supp(x*) (exact zeros) and
/// ||x_k - x*||_inf <= 2 theta_max gamma^-k for every iterate of the trace.
RateReport verify_linear_rate(const SolverTrace& trace, const SparseCode& x_star, const ThresholdSchedule& sched);

/// gamma_hat = exp(-slope) of the least-squares fit of log ||x_k - x*||_inf
/// against k, over iterates with error above 1e-12. Needs >= 3 such points.
double fit_empirical_rate(const SolverTrace& trace, const SparseCode& x_star);
double fit_empirical_rate(const std::vector<double>& errors);

enum class CantelliForm {
  /// 2 v^2 / (v^2 + tau^2), as written in the derivation.
  Printed,
  /// 2 v / (v + tau^2), Cantelli with variance v.
  Textbook,
};

struct CantelliReport {
  double sigma = 0.0;
  double tau_od = 0.0;
  double tau_d = 0.0;
  double w_d = 0.0;
  double v_od = 0.0;
  double v_d = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double success_prob_lower_bound = 1.0;
  bool off_diagonal_vacuous = false;
  bool diagonal_vacuous = false;
  CantelliForm form = CantelliForm::Printed;
};

Json to_json(const CantelliReport& r);

/// Bounds on the deviation of D~^T W^T D~ from D^T W^T D when
/// D~ = D + E, E_ij ~ N(0, sigma^2 / n).
CantelliReport cantelli_bounds(const Matrix& W, const Dictionary& D, double sigma, double tau_od, double tau_d,
                               CantelliForm form = CantelliForm::Printed);

/// Fraction of `draws` noise samples for which max_{i != j} |Gbar_ij| >= tau_od
/// and max_i |Gbar_ii - w_d| >= tau_d respectively.
struct CantelliFrequencies {
  double off_diagonal = 0.0;
  double diagonal = 0.0;
  long draws = 0;
};

CantelliFrequencies cantelli_monte_carlo(const Matrix& W, const Dictionary& D, double sigma, double tau_od,
                                         double tau_d, long draws, std::uint64_t seed);

/// A self-contained instance for the fixed- or perturbed-model guarantee.
struct TheoremHarness {
  Dictionary D;       // dictionary the network sees (D~ for Theorem 2)
  Dictionary D_clean; // dictionary W was built from
  Matrix W;
  SparseCode x_star;
  Signal e;
  Signal y;
  ThresholdSchedule sched;
  int resamples = 0;
};

/// Gaussian unit-norm D (n x m), W = analytic_weight(D), resampled until the
/// coherence admits s >= 1. Then s = max(1, floor(1/(2 mu)) - 1) unless
/// overridden, gamma is the midpoint of (1, 1/(2 mu s)), and the noise is
/// scaled so theta_min sits well below theta_max gamma^-K.
TheoremHarness theorem1_harness(Index n, Index m, int K, std::uint64_t seed,
                                std::optional<Index> s_override = std::nullopt);

/// As theorem1_harness, but the network sees D~ = D + E with
/// E_ij ~ N(0, sigma^2 / n) while W stays built from the clean D; gamma is
/// the midpoint of (1, 1/(2 (eps_d + mu_bar s))).
TheoremHarness theorem2_harness(Index n, Index m, int K, double sigma, std::uint64_t seed);

/// Runs single-matrix Ada-LISTA with the harness schedule.
SolverTrace run_harness(const TheoremHarness& h);

} // namespace adalista
