// Shared forward/reverse machinery for the unrolled networks. Internal.

#pragma once

#include "adalista/core.hpp"
#include "adalista/solvers.hpp"

#include <cmath>
#include <vector>

namespace adalista::detail {

enum class Record { Final, Codes, Full };

/// Activations of one forward pass. Layer k (1-based) maps z[k-1] to the
/// pre-activation u[k-1] and thresholds it into x[k]. With momentum,
/// z[k] = x[k] + c[k] (x[k] - x[k-1]); without it z[k] = x[k] and c is 0.
struct Tape {
  std::vector<Vector> x;
  std::vector<Vector> z;
  std::vector<Vector> u;
  std::vector<double> c;
};

template <class Affine, class Threshold>
Tape unroll(int layers, Index code_dim, bool momentum, Record record, Affine&& affine,
            Threshold&& threshold) {
  Tape tape;
  Vector x = Vector::Zero(code_dim);
  Vector z = x;
  double t = 1.0;
  if (record != Record::Final) tape.x.push_back(x);
  if (record == Record::Full) {
    tape.z.push_back(z);
    tape.c.push_back(0.0);
  }
  for (int k = 1; k <= layers; ++k) {
    Vector u = affine(k, z);
    const double theta = threshold(k);
    Vector next(u.size());
    for (Index i = 0; i < u.size(); ++i) {
      const double a = std::abs(u[i]);
      next[i] = a > theta ? std::copysign(a - theta, u[i]) : 0.0;
    }
    double c = 0.0;
    if (momentum) {
      const double t_next = fista_next_t(t);
      c = (t - 1.0) / t_next;
      t = t_next;
      z = next + c * (next - x);
    } else {
      z = next;
    }
    x = std::move(next);
    if (record == Record::Full) {
      tape.u.push_back(std::move(u));
      if (k < layers) {
        tape.z.push_back(z);
        tape.c.push_back(c);
      }
    }
    if (record != Record::Final) tape.x.push_back(x);
  }
  if (record == Record::Final) tape.x.push_back(std::move(x));
  return tape;
}

/// Reverse pass for the loss gradient `g_final` = dL/dx_K.
/// `layer_backward(k, z, gu)` must return dL/dz for layer k given
/// dL/du = gu, accumulating its own parameter gradients. Threshold
/// gradients are added to `g_theta[theta_index(k)]`.
template <class Threshold, class ThetaIndex, class LayerBackward>
void unroll_backward(const Tape& tape, const Vector& g_final, Threshold&& threshold,
                     ThetaIndex&& theta_index, Vector& g_theta, LayerBackward&& layer_backward) {
  const int layers = static_cast<int>(tape.u.size());
  if (layers == 0) return;
  if (tape.x.size() != tape.u.size() + 1 || tape.z.size() != tape.u.size())
    throw std::invalid_argument("backward: forward tape is missing stored activations");
  std::vector<Vector> gx(static_cast<std::size_t>(layers) + 1, Vector::Zero(g_final.size()));
  gx[static_cast<std::size_t>(layers)] = g_final;
  for (int k = layers; k >= 1; --k) {
    const Vector& u = tape.u[static_cast<std::size_t>(k - 1)];
    const Vector& g = gx[static_cast<std::size_t>(k)];
    const double theta = threshold(k);
    Vector gu(u.size());
    double gt = 0.0;
    for (Index i = 0; i < u.size(); ++i) {
      // Subgradient 0 at the kink |u| == theta, matching S(kink) = 0.
      if (std::abs(u[i]) > theta) {
        gu[i] = g[i];
        gt -= (u[i] > 0.0 ? 1.0 : -1.0) * g[i];
      } else {
        gu[i] = 0.0;
      }
    }
    g_theta[theta_index(k)] += gt;
    const Vector gz = layer_backward(k, tape.z[static_cast<std::size_t>(k - 1)], gu);
    // z_{k-1} = x_{k-1} + c (x_{k-1} - x_{k-2}); x_0 is the constant zero.
    const int j = k - 1;
    if (j >= 1) {
      const double c = tape.c[static_cast<std::size_t>(j)];
      gx[static_cast<std::size_t>(j)] += (1.0 + c) * gz;
      if (c != 0.0 && j >= 2) gx[static_cast<std::size_t>(j - 1)] -= c * gz;
    }
  }
}

} // namespace adalista::detail
