#pragma once

#include "falkon/linalg.hpp"
#include "falkon/types.hpp"

#include <optional>
#include <string>

namespace falkon {

enum class PrecondBackend { pivoted_qr, eigendecomposition };

/// How a set of factors was obtained.
enum class PrecondPath { full_rank, pivoted_qr, eigendecomposition };

std::string to_string(PrecondPath p);
PrecondBackend parse_backend(const std::string& name);

/// Factors of the Nystrom preconditioner
///
///   B = (1/sqrt(n)) D Q T^{-1} A^{-1},
///
/// with D K_MM D = Q T^T T Q^T (Q an M x q partial isometry, T upper
/// triangular q x q) and A^T A = T T^T / M + lambda I.
///
/// On the full-rank path Q and D are identities and are not stored. The
/// unscaled products lift()/lift_transpose() omit the 1/sqrt(n) factor and
/// are what the solver uses internally.
class Preconditioner {
 public:
  /// T = chol(K_MM + eps M I), A = chol(T T^T / M + lambda I). If the first
  /// Cholesky fails the build falls through to the rank-deficient path with
  /// `fallback` and D = I; fell_back() reports it.
  static Preconditioner build_full_rank(
      const Matrix& kmm, double lambda, Index n,
      PrecondBackend fallback = PrecondBackend::pivoted_qr,
      double rank_tol = 1e-10);

  /// Rank-revealing construction from D K_MM D with either backend. Throws
  /// ArgumentError("degenerate centers") when the numerical rank is zero.
  static Preconditioner build_rank_deficient(const Matrix& kmm, const Vector& d,
                                             double lambda, Index n,
                                             PrecondBackend backend,
                                             double rank_tol = 1e-10);

  Index n() const { return n_; }
  Index m() const { return m_; }
  Index rank() const { return t_.order(); }
  double lambda() const { return lambda_; }
  double jitter() const { return jitter_; }
  PrecondPath path() const { return path_; }
  bool fell_back() const { return fell_back_; }

  const linalg::UpperTriangular& t() const { return t_; }
  const linalg::UpperTriangular& a() const { return a_; }
  /// D as a vector (all ones on the full-rank path).
  Vector d() const;
  /// Q as a matrix (identity on the full-rank path).
  Matrix q() const;

  /// B beta (length q -> length M).
  Vector apply_b(const Vector& beta) const;
  /// B^T v (length M -> length q).
  Vector apply_bt(const Vector& v) const;

  /// D Q T^{-1} A^{-1} u, column-wise.
  Matrix lift(const Matrix& u) const;
  /// A^{-T} T^{-T} Q^T D v, column-wise.
  Matrix lift_transpose(const Matrix& v) const;
  Matrix solve_a(const Matrix& u) const;
  Matrix solve_at(const Matrix& u) const;
  /// D Q T^{-1} w, i.e. lift() without the A solve.
  Matrix lift_t(const Matrix& w) const;
  /// T^{-T} Q^T D v, i.e. lift_transpose() without the A^T solve.
  Matrix lift_t_transpose(const Matrix& v) const;

  /// Explicit M x q matrix B, for checks at desk scale.
  Matrix dense_b() const;

  /// Empty factors; only useful as a placeholder before assignment.
  Preconditioner() = default;

 private:
  void build_a();

  Index n_ = 0;
  Index m_ = 0;
  double lambda_ = 0.0;
  double jitter_ = 0.0;
  PrecondPath path_ = PrecondPath::full_rank;
  bool fell_back_ = false;
  std::optional<Vector> d_;
  std::optional<Matrix> q_;
  linalg::UpperTriangular t_;
  linalg::UpperTriangular a_;
};

}  // namespace falkon
