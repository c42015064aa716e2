#include "falkon/preconditioner.hpp"

#include <cmath>
#include <limits>

namespace falkon {

using linalg::TriMode;

std::string to_string(PrecondPath p) {
  switch (p) {
    case PrecondPath::full_rank: return "full_rank";
    case PrecondPath::pivoted_qr: return "pivoted_qr";
    case PrecondPath::eigendecomposition: return "eigendecomposition";
  }
  return "unknown";
}

PrecondBackend parse_backend(const std::string& name) {
  if (name == "qr" || name == "pivoted_qr") return PrecondBackend::pivoted_qr;
  if (name == "eig" || name == "eigendecomposition")
    return PrecondBackend::eigendecomposition;
  throw ArgumentError("unknown preconditioner backend '" + name + "'");
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_inputs(const Matrix& kmm, double lambda, Index n) {
  if (kmm.rows() != kmm.cols() || kmm.rows() < 1)
    throw ArgumentError("K_MM must be a nonempty square matrix");
  // lambda = 0 is allowed here: A = chol(T T^T / M) exists on full-rank factors.
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ArgumentError("lambda must be nonnegative and finite");
  if (n < 1) throw ArgumentError("training size must be positive");
}

}  // namespace

void Preconditioner::build_a() {
  const Matrix& t = t_.matrix();
  Matrix s = t * t.transpose() / static_cast<double>(m_);
  s.diagonal().array() += lambda_;
  a_ = linalg::cholesky_upper(s);
}

Preconditioner Preconditioner::build_full_rank(const Matrix& kmm, double lambda,
                                               Index n, PrecondBackend fallback,
                                               double rank_tol) {
  check_inputs(kmm, lambda, n);
  const Index m = kmm.rows();
  Preconditioner p;
  p.n_ = n;
  p.m_ = m;
  p.lambda_ = lambda;
  p.jitter_ = kEps * static_cast<double>(m);
  Matrix s = kmm;
  s.diagonal().array() += p.jitter_;
  try {
    p.t_ = linalg::cholesky_upper(s);
  } catch (const NotPositiveDefinite&) {
    Preconditioner q =
        build_rank_deficient(kmm, Vector::Ones(m), lambda, n, fallback, rank_tol);
    q.fell_back_ = true;
    return q;
  }
  p.path_ = PrecondPath::full_rank;
  p.build_a();
  return p;
}

Preconditioner Preconditioner::build_rank_deficient(const Matrix& kmm,
                                                    const Vector& d, double lambda,
                                                    Index n, PrecondBackend backend,
                                                    double rank_tol) {
  check_inputs(kmm, lambda, n);
  const Index m = kmm.rows();
  if (d.size() != m) throw ArgumentError("D has the wrong length");
  for (Index i = 0; i < m; ++i)
    if (!(d(i) > 0.0) || !std::isfinite(d(i)))
      throw ArgumentError("D must be strictly positive and finite");

  Preconditioner p;
  p.n_ = n;
  p.m_ = m;
  p.lambda_ = lambda;
  p.d_ = d;
  const Matrix s = d.asDiagonal() * kmm * d.asDiagonal();

  if (backend == PrecondBackend::pivoted_qr) {
    p.path_ = PrecondPath::pivoted_qr;
    auto qr = linalg::pivoted_qr(s, rank_tol);
    if (qr.rank == 0) throw ArgumentError("degenerate centers: kernel matrix has rank 0");
    Matrix& q = qr.q.columns;
    Matrix inner = q.transpose() * s * q;
    inner = 0.5 * (inner + inner.transpose());
    try {
      p.t_ = linalg::cholesky_upper(inner);
    } catch (const NotPositiveDefinite&) {
      p.jitter_ = kEps * static_cast<double>(m);
      inner.diagonal().array() += p.jitter_ * inner.diagonal().maxCoeff();
      p.t_ = linalg::cholesky_upper(inner);
    }
    p.q_ = std::move(q);
  } else {
    p.path_ = PrecondPath::eigendecomposition;
    const auto eig = linalg::sym_eig(s);
    const double lead = eig.values(0);
    Index rank = 0;
    while (rank < m && eig.values(rank) > rank_tol * lead && eig.values(rank) > 0.0)
      ++rank;
    if (rank == 0) throw ArgumentError("degenerate centers: kernel matrix has rank 0");
    p.q_ = eig.vectors.leftCols(rank);
    const Vector mu = eig.values.head(rank);
    p.t_ = linalg::UpperTriangular(Matrix(mu.cwiseSqrt().asDiagonal()));
    const Vector a_diag =
        (mu.array() / static_cast<double>(m) + lambda).sqrt().matrix();
    p.a_ = linalg::UpperTriangular(Matrix(a_diag.asDiagonal()));
    return p;
  }
  p.build_a();
  return p;
}

Vector Preconditioner::d() const { return d_ ? *d_ : Vector::Ones(m_); }

Matrix Preconditioner::q() const { return q_ ? *q_ : Matrix::Identity(m_, m_); }

Matrix Preconditioner::solve_a(const Matrix& u) const {
  return linalg::tri_solve(a_, u, TriMode::upper);
}

Matrix Preconditioner::solve_at(const Matrix& u) const {
  return linalg::tri_solve(a_, u, TriMode::transpose);
}

Matrix Preconditioner::lift_t(const Matrix& w) const {
  if (w.rows() != rank()) throw ArgumentError("lift: expected length-q input");
  Matrix x = linalg::tri_solve(t_, w, TriMode::upper);
  if (q_) x = (*q_ * x).eval();
  if (d_) x = d_->asDiagonal() * x;
  return x;
}

Matrix Preconditioner::lift_t_transpose(const Matrix& v) const {
  if (v.rows() != m_) throw ArgumentError("lift_transpose: expected length-M input");
  Matrix x = d_ ? Matrix(d_->asDiagonal() * v) : v;
  if (q_) x = (q_->transpose() * x).eval();
  return linalg::tri_solve(t_, x, TriMode::transpose);
}

Matrix Preconditioner::lift(const Matrix& u) const { return lift_t(solve_a(u)); }

Matrix Preconditioner::lift_transpose(const Matrix& v) const {
  return solve_at(lift_t_transpose(v));
}

Vector Preconditioner::apply_b(const Vector& beta) const {
  return lift(Matrix(beta)).col(0) / std::sqrt(static_cast<double>(n_));
}

Vector Preconditioner::apply_bt(const Vector& v) const {
  return lift_transpose(Matrix(v)).col(0) / std::sqrt(static_cast<double>(n_));
}

Matrix Preconditioner::dense_b() const {
  return lift(Matrix::Identity(rank(), rank())) / std::sqrt(static_cast<double>(n_));
}

}  // namespace falkon
