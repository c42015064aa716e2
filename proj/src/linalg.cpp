#include "falkon/linalg.hpp"

#include "falkon/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace falkon::linalg {

UpperTriangular::UpperTriangular(Matrix r) : r_(std::move(r)) {
  if (r_.rows() != r_.cols()) throw ArgumentError("triangular factor must be square");
  r_.triangularView<Eigen::StrictlyLower>().setZero();
}

// ---------------------------------------------------------------- Cholesky

namespace {

constexpr Index kCholBlock = 64;

// In-place upper Cholesky of the leading `b` x `b` block starting at (k, k).
void cholesky_unblocked(Matrix& a, Index k, Index b) {
  for (Index j = 0; j < b; ++j) {
    const Index jj = k + j;
    double s = a(jj, jj);
    for (Index i = k; i < jj; ++i) s -= a(i, jj) * a(i, jj);
    if (!(s > 0.0) || !std::isfinite(s)) throw NotPositiveDefinite(jj);
    const double piv = std::sqrt(s);
    a(jj, jj) = piv;
    for (Index c = jj + 1; c < k + b; ++c) {
      double t = a(jj, c);
      for (Index i = k; i < jj; ++i) t -= a(i, jj) * a(i, c);
      a(jj, c) = t / piv;
    }
  }
}

}  // namespace

UpperTriangular cholesky_upper(const Matrix& s) {
  if (s.rows() != s.cols()) throw ArgumentError("cholesky needs a square matrix");
  const Index n = s.rows();
  Matrix a = s;
  if (n <= kCholBlock) {
    cholesky_unblocked(a, 0, n);
    return UpperTriangular(std::move(a));
  }
  for (Index k = 0; k < n; k += kCholBlock) {
    const Index b = std::min(kCholBlock, n - k);
    cholesky_unblocked(a, k, b);
    const Index rest = n - k - b;
    if (rest == 0) break;
    // Panel: R12 = R11^{-T} S12, then trailing update S22 -= R12^T R12.
    auto r11 = a.block(k, k, b, b).triangularView<Eigen::Upper>();
    auto r12 = a.block(k, k + b, b, rest);
    r11.transpose().solveInPlace(r12);
    a.block(k + b, k + b, rest, rest)
        .selfadjointView<Eigen::Upper>()
        .rankUpdate(r12.transpose(), -1.0);
  }
  return UpperTriangular(std::move(a));
}

// ------------------------------------------------------------- pivoted QR

PivotedQr pivoted_qr(const Matrix& s, double rank_tol) {
  const Index m = s.rows();
  const Index n = s.cols();
  Matrix a = s;
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::vector<Vector> reflectors;
  std::vector<double> betas;
  const Index steps = std::min(m, n);
  double lead = 0.0;
  Index rank = 0;

  for (Index k = 0; k < steps; ++k) {
    Index best = k;
    double best_norm = -1.0;
    for (Index j = k; j < n; ++j) {
      const double nj = a.col(j).tail(m - k).norm();
      if (nj > best_norm) {
        best_norm = nj;
        best = j;
      }
    }
    if (k == 0) lead = best_norm;
    if (!(best_norm > rank_tol * lead) || best_norm == 0.0) break;
    if (best != k) {
      a.col(k).swap(a.col(best));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(best)]);
    }
    Vector v = a.col(k).tail(m - k);
    const double alpha = v(0) >= 0.0 ? -best_norm : best_norm;
    v(0) -= alpha;
    const double vnorm2 = v.squaredNorm();
    const double beta = vnorm2 > 0.0 ? 2.0 / vnorm2 : 0.0;
    auto trailing = a.block(k, k, m - k, n - k);
    const Eigen::RowVectorXd w = v.transpose() * trailing;
    trailing.noalias() -= beta * v * w;
    a.col(k).tail(m - k - 1).setZero();
    a(k, k) = alpha;
    reflectors.push_back(std::move(v));
    betas.push_back(beta);
    ++rank;
  }

  PivotedQr out;
  out.rank = rank;
  out.perm = std::move(perm);
  out.r = a.topRows(rank);
  out.r.triangularView<Eigen::StrictlyLower>().setZero();
  Matrix q = Matrix::Identity(m, rank);
  for (Index k = rank - 1; k >= 0; --k) {
    const Vector& v = reflectors[static_cast<std::size_t>(k)];
    auto tail = q.bottomRows(m - k);
    const Eigen::RowVectorXd w = v.transpose() * tail;
    tail.noalias() -= betas[static_cast<std::size_t>(k)] * v * w;
  }
  out.q.columns = std::move(q);
  return out;
}

// ------------------------------------------------------------ eigensolver

SymEig sym_eig(const Matrix& s) {
  if (s.rows() != s.cols()) throw ArgumentError("eigensolver needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
  // Eigen returns ascending order.
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

// -------------------------------------------------------- triangular solve

namespace {

void check_diagonal(const UpperTriangular& r) {
  for (Index i = 0; i < r.order(); ++i)
    if (r(i, i) == 0.0)
      throw SingularMatrix("zero diagonal entry at " + std::to_string(i));
}

void solve_column(const Matrix& r, double* x, Index n, TriMode mode) {
  if (mode == TriMode::upper) {
    for (Index i = n - 1; i >= 0; --i) {
      double t = x[i];
      for (Index j = i + 1; j < n; ++j) t -= r(i, j) * x[j];
      x[i] = t / r(i, i);
    }
  } else {
    // R^T is lower triangular; column i of R holds row i of R^T.
    for (Index i = 0; i < n; ++i) {
      double t = x[i];
      const double* col = r.data() + i * n;
      for (Index j = 0; j < i; ++j) t -= col[j] * x[j];
      x[i] = t / r(i, i);
    }
  }
}

}  // namespace

Vector tri_solve(const UpperTriangular& r, const Vector& b, TriMode mode) {
  if (b.size() != r.order()) throw ArgumentError("triangular solve size mismatch");
  check_diagonal(r);
  Vector x = b;
  solve_column(r.matrix(), x.data(), r.order(), mode);
  return x;
}

Matrix tri_solve(const UpperTriangular& r, const Matrix& b, TriMode mode) {
  if (b.rows() != r.order()) throw ArgumentError("triangular solve size mismatch");
  check_diagonal(r);
  Matrix x = b;
  for (Index c = 0; c < x.cols(); ++c)
    solve_column(r.matrix(), x.col(c).data(), r.order(), mode);
  return x;
}

// ---------------------------------------------------- conjugate gradient

CgResult conjugate_gradient(const BlockOperator& op, const Matrix& rhs,
                            int t_max, const CgOptions& opts) {
  if (t_max < 0) throw ArgumentError("iteration count must be nonnegative");
  const Index k = rhs.cols();
  CgResult res;
  res.x = Matrix::Zero(rhs.rows(), k);
  res.residual = rhs;
  Matrix& r = res.residual;
  Matrix p = r;
  Vector rsold = r.colwise().squaredNorm().transpose();
  const Vector r0 = rsold.cwiseSqrt();

  for (int it = 1; it <= t_max; ++it) {
    if ((rsold.array() == 0.0).all()) break;
    const Matrix ap = op(p);
    if (ap.rows() != p.rows() || ap.cols() != k)
      throw ArgumentError("operator returned a block of the wrong shape");
    for (Index c = 0; c < k; ++c) {
      if (rsold(c) == 0.0) continue;
      const double pap = p.col(c).dot(ap.col(c));
      const double a = rsold(c) / pap;
      if (!std::isfinite(a) || !(pap > 0.0)) throw DivergenceError(it);
      res.x.col(c) += a * p.col(c);
      r.col(c) -= a * ap.col(c);
      const double rsnew = r.col(c).squaredNorm();
      if (!std::isfinite(rsnew)) throw DivergenceError(it);
      p.col(c) = r.col(c) + (rsnew / rsold(c)) * p.col(c);
      rsold(c) = rsnew;
    }
    res.iterations = it;
    if (opts.on_iteration) opts.on_iteration(it, res.x, r);
    if (opts.residual_tol > 0.0 &&
        (rsold.cwiseSqrt().array() <= opts.residual_tol * r0.array()).all())
      break;
  }
  return res;
}

Vector conjugate_gradient(const VectorOperator& op, const Vector& rhs,
                          int t_max, const CgOptions& opts) {
  BlockOperator block = [&op](const Matrix& p) -> Matrix {
    return op(p.col(0));
  };
  return conjugate_gradient(block, Matrix(rhs), t_max, opts).x.col(0);
}

double estimate_lambda_max(const BlockOperator& op, Index dim, int iters,
                           std::uint64_t seed) {
  if (dim < 1) throw ArgumentError("operator dimension must be positive");
  Rng rng(seed);
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = rng.normal();
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < iters; ++it) {
    const Vector w = op(Matrix(v)).col(0);
    estimate = v.dot(w);
    const double nw = w.norm();
    if (!std::isfinite(nw)) throw DivergenceError(it + 1);
    if (nw == 0.0) return 0.0;
    v = w / nw;
  }
  return std::max(estimate, op(Matrix(v)).col(0).dot(v));
}

}  // namespace falkon::linalg
