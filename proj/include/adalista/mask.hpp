#pragma once

#include "adalista/core.hpp"

namespace adalista {

/// Diagonal 0/1 sampling operator M: entry i is 1 when pixel i is observed.
class Mask {
public:
  Mask() = default;
  explicit Mask(Vector observed);

  static Mask identity(Index n) { return Mask(Vector::Ones(n)); }

  const Vector& diagonal() const noexcept { return observed_; }
  Index size() const noexcept { return observed_.size(); }
  Index missing_count() const noexcept { return missing_; }
  double missing_ratio() const noexcept {
    return observed_.size() == 0 ? 0.0 : static_cast<double>(missing_) / static_cast<double>(observed_.size());
  }
  bool observed(Index i) const { return observed_[i] != 0.0; }

  /// M v
  Vector apply(const Vector& v) const;
  /// M X (zeroes the rows of unobserved entries)
  Matrix apply_rows(const Matrix& X) const;

private:
  Vector observed_;
  Index missing_ = 0;
};

} // namespace adalista
