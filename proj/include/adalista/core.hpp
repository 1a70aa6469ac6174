// Shared numeric types and primitives for sparse coding.
//
// Everything here is double precision. Signals live in R^n, codes in R^m,
// and a dictionary is an n x m matrix whose columns are the atoms.

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace adalista {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Length-n observation y.
using Signal = Vector;
/// Length-m representation x.
using SparseCode = Vector;

/// Raised when a computation produces non-finite values or cannot proceed
/// numerically (singular systems, divergence). Shape and argument problems
/// use std::invalid_argument instead.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Dense n x m dictionary. Entries are always finite; when constructed with
/// `column_normalized = true` every column norm is verified to be 1 +- 1e-10.
class Dictionary {
public:
  Dictionary() = default;
  explicit Dictionary(Matrix data, bool column_normalized = false);

  const Matrix& matrix() const noexcept { return data_; }
  Index signal_dim() const noexcept { return data_.rows(); }
  Index code_dim() const noexcept { return data_.cols(); }
  bool column_normalized() const noexcept { return normalized_; }

private:
  Matrix data_;
  bool normalized_ = false;
};

/// Per-iteration record of an iterative solver. codes[0] is the zero vector
/// and codes.size() == iterations() + 1. `objectives` is either empty (the
/// solver has no objective, e.g. learned networks) or parallel to `codes`.
struct SolverTrace {
  std::vector<SparseCode> codes;
  std::vector<double> objectives;

  int iterations() const noexcept { return static_cast<int>(codes.size()) - 1; }
  const SparseCode& final_code() const { return codes.back(); }
};

/// Elementwise sign(v) * max(|v| - theta, 0). Exactly zero at |v| == theta.
Vector soft_threshold(const Vector& v, double theta);

/// 0.5 * ||y - D x||^2 + lambda * ||x||_1
double lasso_objective(const Signal& y, const Dictionary& D, const SparseCode& x, double lambda);

/// Largest eigenvalue of D^T D by power iteration on the smaller Gram matrix.
/// Starts from the normalized all-ones vector; stops when the Rayleigh
/// quotient moves by less than 1e-10 relative, or after 1000 iterations.
double spectral_norm_sq(const Matrix& D);
inline double spectral_norm_sq(const Dictionary& D) { return spectral_norm_sq(D.matrix()); }

/// Scales every column to unit L2 norm. Throws on a zero column.
Dictionary normalize_columns(const Dictionary& D);
Matrix normalize_columns(const Matrix& D);

// Shape guards shared by every module. They throw std::invalid_argument
// with `what` prefixed to the message.
void require_same_size(Index a, Index b, const char* what);
void require(bool condition, const std::string& message);

bool all_finite(const Matrix& m);

} // namespace adalista
