#include "adalista/theory.hpp"

#include "adalista/datagen.hpp"
#include "adalista/parallel.hpp"
#include "adalista/unrolled.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace adalista {

namespace {

constexpr double kUnitDiagonalTol = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

Index support_size(const SparseCode& x) { return (x.array() != 0.0).count(); }

double max_off_diagonal(const Matrix& G) {
  double worst = 0.0;
  for (Index j = 0; j < G.cols(); ++j)
    for (Index i = 0; i < G.rows(); ++i)
      if (i != j) worst = std::max(worst, std::abs(G(i, j)));
  return worst;
}

double max_diagonal_deviation(const Matrix& G) {
  return (G.diagonal().array() - 1.0).abs().maxCoeff();
}

void check_gram_conditioning(const Dictionary& D) {
  const Matrix S = D.matrix() * D.matrix().transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo >= 1e12) throw NumericError("analytic_weight: D D^T is singular or ill-conditioned");
}

// (D D^T)^-1 D through a thin QR of D^T, which avoids squaring the
// condition number.
Matrix gram_inverse_times_d(const Dictionary& D) {
  check_gram_conditioning(D);
  const Index n = D.signal_dim(), m = D.code_dim();
  const Eigen::HouseholderQR<Matrix> qr(D.matrix().transpose());
  const Matrix Qthin = qr.householderQ() * Matrix::Identity(m, n);
  const auto R = qr.matrixQR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
  return R.solve(Qthin.transpose());
}

// Shared condition evaluation. `mu` is mu_tilde or mu_bar, `eps` is 0 for
// Theorem 1.
void evaluate_conditions(TheoremReport& r, const Dictionary& D, const Matrix& W, const SparseCode& x_star,
                         const Signal& e, const ThresholdSchedule& sched, double mu, double eps) {
  require_same_size(x_star.size(), D.code_dim(), "theorem check: x*");
  require_same_size(e.size(), D.signal_dim(), "theorem check: e");
  require(W.rows() == D.signal_dim() && W.cols() == D.signal_dim(), "theorem check: W must be n x n");
  sched.validate();

  const Matrix A = W * D.matrix();
  const Signal y = D.matrix() * x_star + e;
  r.s = support_size(x_star);
  r.gamma = sched.gamma;
  r.theta_max = sched.theta_max;
  r.theta_last = sched.theta(sched.K);
  r.theta_max_required = (A.transpose() * y).cwiseAbs().maxCoeff();
  const double s = static_cast<double>(r.s);
  const double Ate = (A.transpose() * e).cwiseAbs().maxCoeff();

  if (!(mu * s < 0.5)) r.violated_conditions.emplace_back("sparsity");
  r.gamma_limit = mu * s > 0.0 ? 1.0 / (2.0 * mu * s) : kInf;
  if (!(sched.gamma > 1.0 && sched.gamma < r.gamma_limit)) r.violated_conditions.emplace_back("gamma_range");
  if (!(sched.theta_max >= r.theta_max_required)) r.violated_conditions.emplace_back("theta_max");

  const double denominator = 1.0 - 2.0 * sched.gamma * eps - 2.0 * sched.gamma * mu * s;
  if (denominator <= 0.0) {
    r.degenerate_denominator = true;
    r.theta_min = kInf;
  } else {
    r.theta_min = Ate / denominator;
  }
  // theta_k decreases in k, so the last layer is the binding one.
  if (!(r.theta_last > r.theta_min)) r.violated_conditions.emplace_back("theta_min");
  r.satisfied = r.violated_conditions.empty();
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

} // namespace

double mutual_coherence(const Matrix& A, const Matrix& B) {
  require(A.rows() == B.rows() && A.cols() == B.cols(), "mutual_coherence: A and B must have the same shape");
  const Matrix G = A.transpose() * B;
  Index worst = 0;
  const double dev = (G.diagonal().array() - 1.0).abs().maxCoeff(&worst);
  if (dev > kUnitDiagonalTol) {
    std::ostringstream os;
    os << "mutual_coherence: diag(A^T B) is not 1 at index " << worst << " (value " << G(worst, worst) << ")";
    throw std::invalid_argument(os.str());
  }
  return max_off_diagonal(G);
}

GramStats gram_stats(const Matrix& W, const Dictionary& D) {
  require(W.rows() == D.signal_dim() && W.cols() == D.signal_dim(), "gram_stats: W must be n x n");
  const Matrix G = D.matrix().transpose() * W.transpose() * D.matrix();
  return {max_diagonal_deviation(G), max_off_diagonal(G)};
}

Matrix analytic_weight(const Dictionary& D) {
  const Matrix SinvD = gram_inverse_times_d(D);
  const Matrix Q = D.matrix().transpose() * SinvD;
  const Matrix H = Q.cwiseProduct(Q);
  Eigen::ColPivHouseholderQR<Matrix> qr(H);
  Vector c = qr.solve(Vector::Ones(H.rows()));
  for (int it = 0; it < 3; ++it) c += qr.solve(Vector::Ones(H.rows()) - H * c);
  if (!c.allFinite() || (H * c - Vector::Ones(H.rows())).cwiseAbs().maxCoeff() > 1e-8)
    throw NumericError("analytic_weight: unit-diagonal constraints cannot be met for this dictionary");
  return SinvD * c.asDiagonal() * SinvD.transpose();
}

Matrix analytic_weight_columns(const Dictionary& D) {
  Matrix W = gram_inverse_times_d(D);
  for (Index i = 0; i < W.cols(); ++i) W.col(i) /= D.matrix().col(i).dot(W.col(i));
  return W;
}

void ThresholdSchedule::validate() const {
  require(std::isfinite(theta_max) && theta_max > 0.0, "threshold schedule: theta_max must be positive");
  require(std::isfinite(gamma) && gamma > 1.0, "threshold schedule: gamma must exceed 1");
  require(K >= 0, "threshold schedule: K must be >= 0");
}

double ThresholdSchedule::theta(int k) const { return theta_max * std::pow(gamma, -static_cast<double>(k)); }

Vector ThresholdSchedule::thetas() const {
  Vector t(K);
  for (int k = 1; k <= K; ++k) t[k - 1] = theta(k);
  return t;
}

Json to_json(const TheoremReport& r) {
  Json j{{"theorem", r.theorem},
         {"satisfied", r.satisfied},
         {"s", r.s},
         {"gamma", r.gamma},
         {"gamma_limit", finite_or_null(r.gamma_limit)},
         {"theta_max", r.theta_max},
         {"theta_max_required", r.theta_max_required},
         {"theta_min", finite_or_null(r.theta_min)},
         {"theta_last", r.theta_last},
         {"degenerate_denominator", r.degenerate_denominator},
         {"violated_conditions", r.violated_conditions}};
  if (r.theorem == 1) {
    j["mu_tilde"] = r.mu_tilde;
  } else {
    j["eps_d"] = r.eps_d;
    j["mu_bar"] = r.mu_bar;
  }
  return j;
}

TheoremReport theorem1_check(const Dictionary& D, const Matrix& W, const SparseCode& x_star, const Signal& e,
                             const ThresholdSchedule& sched) {
  TheoremReport r;
  r.theorem = 1;
  const GramStats g = gram_stats(W, D);
  r.eps_d = g.eps_d;
  r.mu_bar = g.mu_bar;
  r.mu_tilde = g.mu_bar;
  if (g.eps_d > kUnitDiagonalTol) r.violated_conditions.emplace_back("unit_diagonal");
  evaluate_conditions(r, D, W, x_star, e, sched, r.mu_tilde, 0.0);
  return r;
}

TheoremReport theorem2_check(const Dictionary& D, const Matrix& W, const SparseCode& x_star, const Signal& e,
                             const ThresholdSchedule& sched) {
  TheoremReport r;
  r.theorem = 2;
  const GramStats g = gram_stats(W, D);
  r.eps_d = g.eps_d;
  r.mu_bar = g.mu_bar;
  r.mu_tilde = g.mu_bar;
  evaluate_conditions(r, D, W, x_star, e, sched, r.mu_bar, r.eps_d);
  return r;
}

Json to_json(const RateReport& r) {
  return Json{{"support_contained_all_k", r.support_contained_all_k},
              {"error_bound_all_k", r.error_bound_all_k},
              {"max_ratio", r.max_ratio},
              {"first_violation", r.first_violation},
              {"errors", r.errors}};
}

RateReport verify_linear_rate(const SolverTrace& trace, const SparseCode& x_star, const ThresholdSchedule& sched) {
  sched.validate();
  require(!trace.codes.empty(), "verify_linear_rate: empty trace");
  RateReport r;
  const int last = std::min(trace.iterations(), sched.K);
  for (int k = 0; k <= last; ++k) {
    const SparseCode& x = trace.codes[static_cast<std::size_t>(k)];
    require_same_size(x.size(), x_star.size(), "verify_linear_rate: code");
    bool contained = true;
    for (Index i = 0; i < x.size(); ++i)
      if (x[i] != 0.0 && x_star[i] == 0.0) contained = false;
    const double err = (x - x_star).cwiseAbs().maxCoeff();
    const double ratio = err / (2.0 * sched.theta(k));
    r.errors.push_back(err);
    r.max_ratio = std::max(r.max_ratio, ratio);
    const bool bounded = ratio <= 1.0;
    r.support_contained_all_k = r.support_contained_all_k && contained;
    r.error_bound_all_k = r.error_bound_all_k && bounded;
    if ((!contained || !bounded) && r.first_violation < 0) r.first_violation = k;
  }
  return r;
}

double fit_empirical_rate(const std::vector<double>& errors) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < errors.size(); ++k)
    if (errors[k] > 1e-12) pts.emplace_back(static_cast<double>(k), std::log(errors[k]));
  if (pts.size() < 3) throw std::invalid_argument("fit_empirical_rate: need at least 3 iterates with error > 1e-12");
  double mk = 0.0, ml = 0.0;
  for (const auto& [k, l] : pts) {
    mk += k;
    ml += l;
  }
  mk /= static_cast<double>(pts.size());
  ml /= static_cast<double>(pts.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [k, l] : pts) {
    sxy += (k - mk) * (l - ml);
    sxx += (k - mk) * (k - mk);
  }
  return std::exp(-sxy / sxx);
}

double fit_empirical_rate(const SolverTrace& trace, const SparseCode& x_star) {
  std::vector<double> errors;
  for (const auto& x : trace.codes) {
    require_same_size(x.size(), x_star.size(), "fit_empirical_rate: code");
    errors.push_back((x - x_star).cwiseAbs().maxCoeff());
  }
  return fit_empirical_rate(errors);
}

Json to_json(const CantelliReport& r) {
  return Json{{"sigma", r.sigma},
              {"tau_od", r.tau_od},
              {"tau_d", r.tau_d},
              {"w_d", r.w_d},
              {"v_od", r.v_od},
              {"v_d", r.v_d},
              {"p1", r.p1},
              {"p2", r.p2},
              {"success_prob_lower_bound", r.success_prob_lower_bound},
              {"off_diagonal_vacuous", r.off_diagonal_vacuous},
              {"diagonal_vacuous", r.diagonal_vacuous},
              {"form", r.form == CantelliForm::Printed ? "printed" : "textbook"}};
}

CantelliReport cantelli_bounds(const Matrix& W, const Dictionary& D, double sigma, double tau_od, double tau_d,
                               CantelliForm form) {
  require(W.rows() == D.signal_dim() && W.cols() == D.signal_dim(), "cantelli_bounds: W must be n x n");
  require(std::isfinite(sigma) && sigma >= 0.0, "cantelli_bounds: sigma must be >= 0");
  require(tau_od > 0.0 && tau_d > 0.0, "cantelli_bounds: tau values must be positive");
  const double n = static_cast<double>(D.signal_dim());
  const Index m = D.code_dim();
  const double s2n = sigma * sigma / n;
  const double s4n2 = s2n * s2n;

  const Matrix WD = W * D.matrix();
  const Matrix WtD = W.transpose() * D.matrix();
  const Vector Ca = WD.colwise().squaredNorm().transpose();
  const Vector Cb = WtD.colwise().squaredNorm().transpose();
  const double Cc = W.squaredNorm();
  double Cd = 0.0;
  for (Index k = 0; k < W.rows(); ++k) {
    for (Index l = 0; l < W.rows(); ++l) {
      if (l == k) continue;
      Cd += W(l, k) * W(l, k) + W(l, k) * W(k, l);
    }
    Cd += 2.0 * W(k, k) * W(k, k);
  }

  CantelliReport r;
  r.sigma = sigma;
  r.tau_od = tau_od;
  r.tau_d = tau_d;
  r.form = form;
  r.w_d = s2n * W.trace();

  double best_od = 0.0;
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      if (i != j) best_od = std::max(best_od, Ca[i] + Cb[j]);
  r.v_od = m > 1 ? s2n * best_od + s4n2 * Cc : 0.0;
  double best_d = -kInf;
  for (Index i = 0; i < m; ++i) best_d = std::max(best_d, Ca[i] + Cb[i] + 2.0 * WD.col(i).dot(WtD.col(i)));
  r.v_d = s2n * best_d + s4n2 * Cd;

  auto failure = [&](double v, double tau, double exponent, bool& vacuous) {
    const double vv = form == CantelliForm::Printed ? v * v : v;
    const double t2 = tau * tau;
    if (t2 <= vv) {
      vacuous = true;
      return 1.0;
    }
    return std::clamp(1.0 - std::pow((t2 - vv) / (vv + t2), exponent), 0.0, 1.0);
  };
  r.p1 = failure(r.v_od, tau_od, n * (n - 1.0), r.off_diagonal_vacuous);
  r.p2 = failure(r.v_d, tau_d, n, r.diagonal_vacuous);
  r.success_prob_lower_bound = std::clamp(1.0 - r.p1 * r.p2, 0.0, 1.0);
  return r;
}

CantelliFrequencies cantelli_monte_carlo(const Matrix& W, const Dictionary& D, double sigma, double tau_od,
                                         double tau_d, long draws, std::uint64_t seed) {
  require(draws > 0, "cantelli_monte_carlo: draws must be positive");
  const Index n = D.signal_dim();
  const Index m = D.code_dim();
  const double sd = sigma / std::sqrt(static_cast<double>(n));
  const double w_d = sigma * sigma / static_cast<double>(n) * W.trace();
  const Matrix& Dm = D.matrix();
  const Matrix G0 = Dm.transpose() * W.transpose() * Dm;

  constexpr long kBlock = 256;
  const auto blocks = static_cast<std::size_t>((draws + kBlock - 1) / kBlock);
  std::vector<long> hits_od(blocks, 0), hits_d(blocks, 0);
  parallel_for(blocks, [&](std::size_t b) {
    std::mt19937_64 rng(derive_seed(seed, b));
    std::normal_distribution<double> normal(0.0, sd);
    Matrix E(n, m);
    const long end = std::min<long>(draws, static_cast<long>(b + 1) * kBlock);
    for (long d = static_cast<long>(b) * kBlock; d < end; ++d) {
      for (Index c = 0; c < m; ++c)
        for (Index r = 0; r < n; ++r) E(r, c) = normal(rng);
      const Matrix Dt = Dm + E;
      const Matrix Gbar = Dt.transpose() * W.transpose() * Dt - G0;
      if (max_off_diagonal(Gbar) >= tau_od) ++hits_od[b];
      if ((Gbar.diagonal().array() - w_d).abs().maxCoeff() >= tau_d) ++hits_d[b];
    }
  });
  CantelliFrequencies f;
  f.draws = draws;
  long od = 0, dd = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    od += hits_od[b];
    dd += hits_d[b];
  }
  f.off_diagonal = static_cast<double>(od) / static_cast<double>(draws);
  f.diagonal = static_cast<double>(dd) / static_cast<double>(draws);
  return f;
}

namespace {

constexpr int kMaxResamples = 1000;

// Scales a random noise direction so that ||A^T e||_inf / denominator equals
// a quarter of the smallest scheduled threshold computed on the clean signal.
Signal harness_noise(const Matrix& A, const Signal& clean, double denominator, double gamma, int K,
                     std::uint64_t seed) {
  const Index n = clean.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Signal e(n);
  for (Index i = 0; i < n; ++i) e[i] = normal(rng);
  if (denominator <= 0.0) return Signal::Zero(n);
  const double clean_max = (A.transpose() * clean).cwiseAbs().maxCoeff();
  const double target = 0.25 * clean_max * std::pow(gamma, -static_cast<double>(K)) * denominator;
  const double current = (A.transpose() * e).cwiseAbs().maxCoeff();
  return current > 0.0 ? Signal(e * (target / current)) : Signal::Zero(n);
}

void finish_harness(TheoremHarness& h, Index s, double gamma, double denominator, int K, std::uint64_t seed) {
  const Matrix A = h.W * h.D.matrix();
  h.x_star = sparse_code(h.D.code_dim(), s, derive_seed(seed, 1));
  const Signal clean = h.D.matrix() * h.x_star;
  h.e = harness_noise(A, clean, denominator, gamma, K, derive_seed(seed, 2));
  h.y = clean + h.e;
  h.sched.gamma = gamma;
  h.sched.K = K;
  h.sched.theta_max = (A.transpose() * h.y).cwiseAbs().maxCoeff();
}

} // namespace

TheoremHarness theorem1_harness(Index n, Index m, int K, std::uint64_t seed, std::optional<Index> s_override) {
  require(K >= 1, "theorem1_harness: K must be >= 1");
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    const std::uint64_t trial = derive_seed(seed, static_cast<std::uint64_t>(attempt));
    Dictionary D = random_dictionary(n, m, derive_seed(trial, 0));
    Matrix W = analytic_weight(D);
    const double mu = gram_stats(W, D).mu_bar;
    if (!(mu < 0.5) && !s_override) continue;
    const Index s = s_override ? *s_override
                               : std::max<Index>(1, static_cast<Index>(std::floor(1.0 / (2.0 * mu))) - 1);
    require(s >= 1 && s <= m, "theorem1_harness: sparsity out of range");
    const double limit = 1.0 / (2.0 * mu * static_cast<double>(s));
    const double gamma = limit > 1.0 ? 0.5 * (1.0 + limit) : 1.05;
    const double denominator = 1.0 - 2.0 * gamma * mu * static_cast<double>(s);
    TheoremHarness h{D, D, std::move(W), {}, {}, {}, {}, attempt};
    finish_harness(h, s, gamma, denominator, K, trial);
    return h;
  }
  throw NumericError("theorem1_harness: no dictionary with coherence below 1/2 found");
}

TheoremHarness theorem2_harness(Index n, Index m, int K, double sigma, std::uint64_t seed) {
  require(K >= 1, "theorem2_harness: K must be >= 1");
  require(sigma >= 0.0, "theorem2_harness: sigma must be >= 0");
  const double sd = sigma / std::sqrt(static_cast<double>(n));
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    const std::uint64_t trial = derive_seed(seed, static_cast<std::uint64_t>(attempt));
    Dictionary clean = random_dictionary(n, m, derive_seed(trial, 0));
    Matrix W = analytic_weight(clean);
    std::mt19937_64 rng(derive_seed(trial, 3));
    std::normal_distribution<double> normal(0.0, sd);
    Matrix Dt = clean.matrix();
    for (Index c = 0; c < m; ++c)
      for (Index r = 0; r < n; ++r) Dt(r, c) += normal(rng);
    Dictionary D(std::move(Dt));
    const GramStats g = gram_stats(W, D);
    if (!(g.eps_d + g.mu_bar < 0.5)) continue;
    const Index s = std::max<Index>(1, static_cast<Index>(std::floor((0.5 - g.eps_d) / g.mu_bar)) - 1);
    const double load = g.eps_d + g.mu_bar * static_cast<double>(s);
    if (!(load < 0.5)) continue;
    const double gamma = 0.5 * (1.0 + 1.0 / (2.0 * load));
    const double denominator = 1.0 - 2.0 * gamma * load;
    TheoremHarness h{std::move(D), std::move(clean), std::move(W), {}, {}, {}, {}, attempt};
    finish_harness(h, s, gamma, denominator, K, trial);
    return h;
  }
  throw NumericError("theorem2_harness: perturbation too strong for the Gram conditions");
}

SolverTrace run_harness(const TheoremHarness& h) {
  return ada_lista_single_forward_trace(h.y, h.D, SingleMatrixParams{h.W, h.sched.thetas()});
}

} // namespace adalista
