#include "adalista/core.hpp"

#include <cmath>
#include <sstream>

namespace adalista {

Dictionary::Dictionary(Matrix data, bool column_normalized)
    : data_(std::move(data)), normalized_(column_normalized) {
  require(data_.size() > 0, "dictionary must be nonempty");
  if (!all_finite(data_))
    throw std::invalid_argument("dictionary has non-finite entries");
  if (normalized_) {
    for (Index j = 0; j < data_.cols(); ++j) {
      const double norm = data_.col(j).norm();
      if (std::abs(norm - 1.0) > 1e-10) {
        std::ostringstream os;
        os << "dictionary flagged column-normalized but column " << j << " has norm " << norm;
        throw std::invalid_argument(os.str());
      }
    }
  }
}

Vector soft_threshold(const Vector& v, double theta) {
  if (theta < 0.0) throw std::invalid_argument("soft_threshold: negative threshold");
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    out[i] = a > theta ? std::copysign(a - theta, v[i]) : 0.0;
  }
  return out;
}

double lasso_objective(const Signal& y, const Dictionary& D, const SparseCode& x, double lambda) {
  require_same_size(y.size(), D.signal_dim(), "lasso_objective: signal");
  require_same_size(x.size(), D.code_dim(), "lasso_objective: code");
  require(lambda >= 0.0, "lasso_objective: lambda must be nonnegative");
  const Vector r = y - D.matrix() * x;
  return 0.5 * r.squaredNorm() + lambda * x.lpNorm<1>();
}

double spectral_norm_sq(const Matrix& D) {
  require(D.size() > 0, "spectral_norm_sq: empty matrix");
  // Same nonzero spectrum either way; iterate on the smaller side.
  const Matrix gram = D.rows() < D.cols() ? Matrix(D * D.transpose()) : Matrix(D.transpose() * D);
  Vector v = Vector::Ones(gram.rows()).normalized();
  double rq = v.dot(gram * v);
  if (rq == 0.0 && gram.norm() == 0.0) return 0.0;
  for (int it = 0; it < 1000; ++it) {
    Vector w = gram * v;
    const double nw = w.norm();
    if (nw == 0.0) break;
    v = w / nw;
    const double next = v.dot(gram * v);
    const bool done = std::abs(next - rq) <= 1e-10 * std::abs(next);
    rq = next;
    if (done) break;
  }
  return rq;
}

Matrix normalize_columns(const Matrix& D) {
  Matrix out = D;
  for (Index j = 0; j < out.cols(); ++j) {
    const double norm = out.col(j).norm();
    if (norm == 0.0) {
      std::ostringstream os;
      os << "normalize_columns: column " << j << " is zero";
      throw std::invalid_argument(os.str());
    }
    out.col(j) /= norm;
  }
  return out;
}

Dictionary normalize_columns(const Dictionary& D) {
  return Dictionary(normalize_columns(D.matrix()), true);
}

void require_same_size(Index a, Index b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw std::invalid_argument(os.str());
  }
}

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

} // namespace adalista
