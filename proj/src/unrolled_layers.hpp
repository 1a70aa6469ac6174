// Per-call precomputation and affine maps for each unrolled variant. Internal.

#pragma once

#include "adalista/unrolled.hpp"

namespace adalista::detail {

/// u = z - g_k A^T A z + g_k b with A = W1 D, b = D^T W2^T y.
struct AdaLayers {
  const AdaListaParams& p;
  const Matrix& D;
  Matrix A;
  Vector b;

  AdaLayers(const Signal& y, const Dictionary& dict, const AdaListaParams& params)
      : p(params), D(dict.matrix()) {
    require_same_size(y.size(), D.rows(), "ada_lista: signal");
    require_same_size(p.W1.rows(), D.rows(), "ada_lista: W1");
    require_same_size(p.W2.rows(), D.rows(), "ada_lista: W2");
    A.noalias() = p.W1 * D;
    const Vector w2ty = p.W2.transpose() * y;
    b.noalias() = D.transpose() * w2ty;
  }

  Vector affine(int k, const Vector& z) const {
    const double g = p.gamma[k - 1];
    const Vector Az = A * z;
    return z + g * (b - A.transpose() * Az);
  }
};

/// u = z + A^T (y - D z) with A = W D.
struct SingleLayers {
  const SingleMatrixParams& p;
  const Matrix& D;
  const Signal& y;
  Matrix A;

  SingleLayers(const Signal& signal, const Dictionary& dict, const SingleMatrixParams& params)
      : p(params), D(dict.matrix()), y(signal) {
    require_same_size(y.size(), D.rows(), "single: signal");
    require_same_size(p.W.rows(), D.rows(), "single: W");
    A.noalias() = p.W * D;
  }

  Vector affine(int, const Vector& z) const {
    const Vector r = y - D * z;
    return z + A.transpose() * r;
  }
};

/// u = W1 y + W2 z.
struct ListaLayers {
  const ListaParams& p;
  Vector drive;

  ListaLayers(const Signal& y, const ListaParams& params) : p(params) {
    require_same_size(y.size(), p.W1.cols(), "lista: signal");
    drive.noalias() = p.W1 * y;
  }

  Vector affine(int, const Vector& z) const { return drive + p.W2 * z; }
};

/// u = z - g_k A^T A z + g_k b with A = M W1, b = W2^T M y.
struct InpaintLayers {
  const InpaintParams& p;
  Matrix A;
  Vector masked_y;
  Vector b;

  InpaintLayers(const Signal& y, const Mask& M, const InpaintParams& params) : p(params) {
    require_same_size(y.size(), M.size(), "inpaint: signal vs mask");
    require_same_size(p.W1.rows(), M.size(), "inpaint: W1");
    require_same_size(p.W2.rows(), M.size(), "inpaint: W2");
    A = M.apply_rows(p.W1);
    masked_y = M.apply(y);
    b.noalias() = p.W2.transpose() * masked_y;
  }

  Vector affine(int k, const Vector& z) const {
    const double g = p.gamma[k - 1];
    const Vector Az = A * z;
    return z + g * (b - A.transpose() * Az);
  }
};

inline int resolve_layers(std::optional<int> layers, int depth, const char* what) {
  const int K = layers.value_or(depth);
  if (K < 0 || K > depth)
    throw std::invalid_argument(std::string(what) + ": requested depth exceeds trained depth");
  return K;
}

} // namespace adalista::detail
