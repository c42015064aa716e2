#pragma once

#include "falkon/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace falkon::linalg {

/// Square upper-triangular matrix with a nonzero diagonal.
class UpperTriangular {
 public:
  UpperTriangular() = default;
  /// Entries below the diagonal are ignored and stored as zero.
  explicit UpperTriangular(Matrix r);

  Index order() const { return r_.rows(); }
  const Matrix& matrix() const { return r_; }
  double operator()(Index i, Index j) const { return r_(i, j); }

 private:
  Matrix r_;
};

/// M x q matrix with orthonormal columns.
struct PartialIsometry {
  Matrix columns;
  Index rank() const { return columns.cols(); }
};

/// Upper Cholesky factor R with R^T R = S. Only the upper triangle of `s` is
/// read. Throws NotPositiveDefinite with the failing pivot index.
///
/// Orders up to 64 use the unblocked algorithm; larger matrices use a
/// right-looking blocked variant with 64-wide panels.
UpperTriangular cholesky_upper(const Matrix& s);

struct PivotedQr {
  PartialIsometry q;          // M x rank
  Matrix r;                   // rank x N, upper trapezoidal
  Index rank = 0;
  std::vector<Index> perm;    // column j of S P is column perm[j] of S
};

/// Householder QR with column pivoting. The rank is the number of leading
/// |R_ii| above rank_tol * |R_00|.
PivotedQr pivoted_qr(const Matrix& s, double rank_tol = 1e-10);

struct SymEig {
  Vector values;   // descending
  Matrix vectors;  // column i pairs with values(i)
};

SymEig sym_eig(const Matrix& s);

enum class TriMode { upper, transpose };

/// Solves R x = b (upper) or R^T x = b (transpose) by substitution.
Vector tri_solve(const UpperTriangular& r, const Vector& b,
                 TriMode mode = TriMode::upper);
Matrix tri_solve(const UpperTriangular& r, const Matrix& b,
                 TriMode mode = TriMode::upper);

/// Symmetric positive definite operator acting column-wise on a block of
/// right-hand sides.
using BlockOperator = std::function<Matrix(const Matrix&)>;
using VectorOperator = std::function<Vector(const Vector&)>;

struct CgOptions {
  /// Stop once every column satisfies |r_t| <= residual_tol * |r_0|.
  /// Zero keeps the fixed iteration count.
  double residual_tol = 0.0;
  /// Called after every iteration with (t, x_t, r_t).
  std::function<void(int, const Matrix&, const Matrix&)> on_iteration;
};

struct CgResult {
  Matrix x;
  Matrix residual;
  int iterations = 0;
};

/// Conjugate gradient from x_0 = 0, one independent recurrence per column:
///
///   p = r; rs = r'r
///   repeat: Ap = A p; a = rs / p'Ap; x += a p; r -= a Ap;
///           rs' = r'r; p = r + (rs'/rs) p; rs = rs'
///
/// Runs exactly `t_max` iterations unless a residual tolerance is set. A
/// column whose residual is exactly zero has converged and is frozen.
/// Non-finite state throws DivergenceError naming the iteration.
CgResult conjugate_gradient(const BlockOperator& op, const Matrix& rhs,
                            int t_max, const CgOptions& opts = {});

Vector conjugate_gradient(const VectorOperator& op, const Vector& rhs,
                          int t_max, const CgOptions& opts = {});

/// Largest eigenvalue of a symmetric positive semidefinite operator on
/// R^dim, by `iters` power iterations from a seeded Gaussian start vector.
double estimate_lambda_max(const BlockOperator& op, Index dim, int iters,
                           std::uint64_t seed);

}  // namespace falkon::linalg
