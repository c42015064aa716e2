// Shared generators and independent dense oracles for the test binaries.
// Oracles use Eigen's factorizations, never the library's own routines.
#pragma once

#include "falkon/data.hpp"
#include "falkon/kernels.hpp"
#include "falkon/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>

namespace falkon::testing {

inline RowMatrix gaussian_points(Index n, Index d, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  RowMatrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) x(i, k) = scale * rng.normal();
  return x;
}

inline Vector gaussian_vector(Index n, std::uint64_t seed) {
  Rng rng(seed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

/// Smooth target sin(x_1 + ... + x_d / d) plus `noise` Gaussian noise.
inline Vector smooth_labels(const RowMatrix& x, std::uint64_t seed, double noise = 0.1) {
  Rng rng(seed);
  Vector y(x.rows());
  for (Index i = 0; i < x.rows(); ++i)
    y(i) = std::sin(x.row(i).sum() / std::sqrt(static_cast<double>(x.cols()))) +
           noise * rng.normal();
  return y;
}

/// Symmetric positive definite matrix G G^T / m + shift I.
inline Matrix random_spd(Index m, std::uint64_t seed, double shift = 0.1) {
  Rng rng(seed);
  Matrix g(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) g(i, j) = rng.normal();
  Matrix s = g * g.transpose() / static_cast<double>(m);
  s.diagonal().array() += shift;
  return s;
}

/// Kernel value computed from scratch with the textbook formulas.
inline double oracle_kernel(const KernelSpec& k, const Eigen::RowVectorXd& a,
                            const Eigen::RowVectorXd& b) {
  switch (k.type()) {
    case KernelType::linear: return a.dot(b);
    case KernelType::gaussian:
      return std::exp(-(a - b).squaredNorm() / (2.0 * k.sigma() * k.sigma()));
    case KernelType::gaussian_diag: {
      double s = 0.0;
      for (Index j = 0; j < a.size(); ++j) {
        const double t = (a(j) - b(j)) / k.widths()(j);
        s += t * t;
      }
      return std::exp(-0.5 * s);
    }
  }
  return 0.0;
}

inline Matrix oracle_kernel_matrix(const KernelSpec& k, const RowMatrix& a,
                                   const RowMatrix& b) {
  Matrix out(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.rows(); ++j) out(i, j) = oracle_kernel(k, a.row(i), b.row(j));
  return out;
}

/// Minimum-norm solution of the normalized Nystrom system
/// (K_nM^T K_nM / n + lambda K_MM) a = K_nM^T y / n via complete orthogonal
/// decomposition.
inline Matrix oracle_nystrom_alpha(const Matrix& knm, const Matrix& kmm, const Matrix& y,
                                   double lambda) {
  const double n = static_cast<double>(knm.rows());
  const Matrix h = knm.transpose() * knm / n + lambda * kmm;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(h);
  cod.setThreshold(1e-13);
  return cod.solve(knm.transpose() * y / n);
}

/// (K + lambda n I)^{-1} y by Eigen's LLT.
inline Matrix oracle_krr_alpha(const Matrix& k, const Matrix& y, double lambda) {
  Matrix s = k;
  s.diagonal().array() += lambda * static_cast<double>(k.rows());
  return s.llt().solve(y);
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double nb = b.norm();
  return nb == 0.0 ? a.norm() : (a - b).norm() / nb;
}

inline double op_norm(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

}  // namespace falkon::testing
